//! Eigenvalue loci over a scalar parameter, tracked by exact assignment.

use crate::error::{config, Result};
use crate::exec::{self, Execution};
use crate::linalg::C64;

use super::lap::{match_eigenvalues, Matching};

/// A model whose spectrum can be evaluated at any value of one parameter.
pub trait ModelFamily: Sync {
    fn eigenvalues_at(&self, value: f64) -> Result<Vec<C64>>;
}

impl<F> ModelFamily for F
where
    F: Fn(f64) -> Result<Vec<C64>> + Sync,
{
    fn eigenvalues_at(&self, value: f64) -> Result<Vec<C64>> {
        self(value)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SweepOptions {
    pub refine_on_crossing: bool,
    /// A pair is suspicious when its cost exceeds this multiple of the median
    /// cost of the moving pairs of the step.
    pub crossing_ratio: f64,
    pub exec: Execution,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            refine_on_crossing: true,
            crossing_ratio: 10.0,
            exec: Execution::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct EigenTrace {
    pub path: String,
    pub values: Vec<f64>,
    /// Index in the first spectrum where each trace starts.
    pub origins: Vec<usize>,
    /// `traces[t][k]`: eigenvalue of trace t at values[k].
    pub traces: Vec<Vec<C64>>,
    /// Total matching cost of every step.
    pub step_costs: Vec<f64>,
    /// Steps that were bisected.
    pub refined: Vec<usize>,
    /// (step, trace) pairs whose matching stayed ambiguous after refinement.
    pub unresolved: Vec<(usize, usize)>,
}

impl EigenTrace {
    pub fn trace_count(&self) -> usize {
        self.traces.len()
    }

    pub fn is_unresolved(&self, trace: usize) -> bool {
        self.unresolved.iter().any(|&(_, t)| t == trace)
    }
}

/// Pairs whose cost stands out against the median of the moving pairs.
pub fn suspicious_pairs(m: &Matching, ratio: f64) -> Vec<usize> {
    let scale = m.costs.iter().copied().fold(0.0, f64::max);
    if scale == 0.0 {
        return Vec::new();
    }
    // pairs below 1e-9 of the largest move are treated as fixed
    let mut moving: Vec<f64> = m.costs.iter().copied().filter(|&c| c > 1e-9 * scale).collect();
    moving.sort_by(f64::total_cmp);
    let median = moving[moving.len() / 2];
    (0..m.costs.len()).filter(|&i| m.costs[i] > ratio * median).collect()
}

fn compose(a: &Matching, b: &Matching) -> Vec<usize> {
    a.pairs.iter().map(|&j| b.pairs[j]).collect()
}

/// True when `from[i]` and `to[j]` are each other's nearest neighbours by a
/// factor of two, ignoring candidates that coincide with the partner itself.
/// Such a pair cannot be swapped by a finer step.
fn isolated(from: &[C64], to: &[C64], i: usize, j: usize, tie: f64) -> bool {
    let cost = (from[i] - to[j]).norm();
    let near_to = to
        .iter()
        .filter(|&&z| (z - to[j]).norm() > tie)
        .map(|&z| (z - from[i]).norm())
        .fold(f64::INFINITY, f64::min);
    let near_from = from
        .iter()
        .filter(|&&z| (z - from[i]).norm() > tie)
        .map(|&z| (z - to[j]).norm())
        .fold(f64::INFINITY, f64::min);
    2.0 * cost < near_to.min(near_from)
}

/// Matches `from` to `to`, bisecting once when the step looks like a
/// crossing. Returns the pairing and the indices (into `from`) still
/// ambiguous.
fn matched_step(
    family: &dyn ModelFamily,
    from: (f64, &[C64]),
    to: (f64, &[C64]),
    opts: &SweepOptions,
) -> Result<(Vec<usize>, f64, bool, Vec<usize>)> {
    let direct = match_eigenvalues(from.1, to.1)?;
    // partners that coincide to roundoff (degenerate pairs) are not ambiguous
    let tie = 1e-9 * to.1.iter().chain(from.1).map(|z| z.norm()).fold(1.0, f64::max);
    let flagged: Vec<usize> = suspicious_pairs(&direct, opts.crossing_ratio)
        .into_iter()
        .filter(|&i| !isolated(from.1, to.1, i, direct.pairs[i], tie))
        .collect();
    if flagged.is_empty() || !opts.refine_on_crossing {
        return Ok((direct.pairs, direct.total, false, Vec::new()));
    }
    let mid_value = 0.5 * (from.0 + to.0);
    let mid = family.eigenvalues_at(mid_value)?;
    let first = match_eigenvalues(from.1, &mid)?;
    let second = match_eigenvalues(&mid, to.1)?;
    let composed = compose(&first, &second);
    let still: Vec<usize> = suspicious_pairs(&first, opts.crossing_ratio)
        .into_iter()
        .chain(suspicious_pairs(&second, opts.crossing_ratio).into_iter().filter_map(|j| first.pairs.iter().position(|&p| p == j)))
        .filter(|&i| (to.1[composed[i]] - to.1[direct.pairs[i]]).norm() > tie)
        .collect();
    let mut still = still;
    still.sort_unstable();
    still.dedup();
    let total = composed.iter().enumerate().map(|(i, &j)| (from.1[i] - to.1[j]).norm()).sum();
    Ok((composed, total, true, still))
}

fn lexicographic(z: &[C64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..z.len()).collect();
    idx.sort_by(|&a, &b| z[a].re.total_cmp(&z[b].re).then(z[a].im.total_cmp(&z[b].im)));
    idx
}

/// Evaluates the family at every value (concurrently under `opts.exec`) and
/// chain-matches consecutive spectra.
pub fn sweep_parameter(family: &dyn ModelFamily, path: &str, values: &[f64], opts: &SweepOptions) -> Result<EigenTrace> {
    if values.len() < 2 {
        return Err(config(format!("sweep of `{path}` needs at least two values, got {}", values.len())));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(config(format!("sweep of `{path}` has a non-finite value")));
    }
    let spectra = exec::map(opts.exec, values, |&v| family.eigenvalues_at(v))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let n = spectra[0].len();
    if let Some(k) = spectra.iter().position(|s| s.len() != n) {
        return Err(config(format!(
            "sweep of `{path}` changes the state count ({} at {} vs {n})",
            spectra[k].len(),
            values[k]
        )));
    }
    // trace t currently sits at index cur[t] of the latest spectrum
    let origins = lexicographic(&spectra[0]);
    let mut cur = origins.clone();
    let mut traces: Vec<Vec<C64>> = cur.iter().map(|&i| vec![spectra[0][i]]).collect();
    let mut step_costs = Vec::new();
    let mut refined = Vec::new();
    let mut unresolved = Vec::new();
    for k in 0..values.len() - 1 {
        let (pairs, total, bisected, still) =
            matched_step(family, (values[k], &spectra[k]), (values[k + 1], &spectra[k + 1]), opts)?;
        if bisected {
            refined.push(k);
        }
        for (t, idx) in cur.iter_mut().enumerate() {
            if still.contains(idx) {
                unresolved.push((k, t));
            }
            *idx = pairs[*idx];
            traces[t].push(spectra[k + 1][*idx]);
        }
        step_costs.push(total);
    }
    Ok(EigenTrace {
        path: path.into(),
        values: values.to_vec(),
        origins,
        traces,
        step_costs,
        refined,
        unresolved,
    })
}
