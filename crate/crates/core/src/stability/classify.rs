//! Control-design variant / invariant and design-invariant labelling from
//! perturbation sweeps.

use std::collections::HashMap;
use std::sync::Mutex;

use crate::error::{config, Result};
use crate::exec::{self, Execution};
use crate::linalg::C64;

use super::lap::match_eigenvalues;
use super::sweep::{suspicious_pairs, sweep_parameter, ModelFamily, SweepOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Label {
    /// Moves when a control parameter changes.
    Cdv,
    /// Fixed under control changes, moves with the hardware.
    Cdi,
    /// Fixed under every parameter change.
    Di,
    Spurious,
    Unresolved,
}

impl Label {
    pub fn as_str(&self) -> &'static str {
        match self {
            Label::Cdv => "CDV",
            Label::Cdi => "CDI",
            Label::Di => "DI",
            Label::Spurious => "spurious",
            Label::Unresolved => "unresolved",
        }
    }
}

/// One swept parameter: its nominal value and the spectrum as a function of
/// its value.
pub struct Parameter<'a> {
    pub path: String,
    pub nominal: f64,
    pub family: &'a dyn ModelFamily,
}

#[derive(Clone, Debug)]
pub struct ClassifyOptions {
    /// Relative perturbations applied to every parameter.
    pub factors: Vec<f64>,
    /// Absolute displacement tolerance; defaults to `epsilon_rel` times the
    /// nominal spectral radius.
    pub epsilon: Option<f64>,
    pub epsilon_rel: f64,
    pub exec: Execution,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            factors: vec![0.8, 0.9, 1.1, 1.2],
            epsilon: None,
            epsilon_rel: 1e-6,
            exec: Execution::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evidence {
    pub control_displacement: f64,
    pub hardware_displacement: f64,
    /// Some(false) when a spurious check flagged the eigenvalue.
    pub truncation_converged: Option<bool>,
}

#[derive(Clone, Debug)]
pub struct EigenClassification {
    pub labels: Vec<Label>,
    pub evidence: Vec<Evidence>,
    pub epsilon: f64,
}

impl EigenClassification {
    pub fn count(&self, label: Label) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    /// Relabels with another tolerance using the stored evidence.
    pub fn with_epsilon(&self, epsilon: f64) -> EigenClassification {
        let labels = self
            .labels
            .iter()
            .zip(&self.evidence)
            .map(|(&l, e)| match l {
                Label::Spurious | Label::Unresolved => l,
                _ => label_for(e, epsilon),
            })
            .collect();
        EigenClassification {
            labels,
            evidence: self.evidence.clone(),
            epsilon,
        }
    }
}

fn label_for(e: &Evidence, eps: f64) -> Label {
    if e.control_displacement > eps {
        Label::Cdv
    } else if e.hardware_displacement > eps {
        Label::Cdi
    } else {
        Label::Di
    }
}

/// Spectra at precomputed values, computing on demand otherwise.
struct Cached<'a> {
    inner: &'a dyn ModelFamily,
    known: Mutex<HashMap<u64, Vec<C64>>>,
}

impl ModelFamily for Cached<'_> {
    fn eigenvalues_at(&self, value: f64) -> Result<Vec<C64>> {
        if let Some(v) = self.known.lock().expect("cache lock").get(&value.to_bits()) {
            return Ok(v.clone());
        }
        let v = self.inner.eigenvalues_at(value)?;
        self.known.lock().expect("cache lock").insert(value.to_bits(), v.clone());
        Ok(v)
    }
}

/// Stepping finer is only worth it when an ambiguous eigenvalue has a
/// perturbed neighbour this many tolerances away or closer; otherwise it has
/// moved beyond the tolerance whichever partner it takes.
const REFINE_RADIUS: f64 = 10.0;

/// Largest displacement from the nominal spectrum over the perturbed values,
/// per nominal eigenvalue, plus a flag for ambiguous matches. Each value is
/// matched to the nominal spectrum directly; a refinement midpoint that
/// coincides with another factor reuses its spectrum.
fn displacement(
    nominal: &[C64],
    p: &Parameter<'_>,
    spectra: HashMap<u64, Vec<C64>>,
    factors: &[f64],
    epsilon: f64,
) -> Result<(Vec<f64>, Vec<bool>)> {
    let mut known = spectra;
    known.insert(p.nominal.to_bits(), nominal.to_vec());
    let cached = Cached {
        inner: p.family,
        known: Mutex::new(known),
    };
    let mut disp = vec![0.0f64; nominal.len()];
    let mut ambiguous = vec![false; nominal.len()];
    let opts = SweepOptions {
        exec: Execution::Sequential,
        ..SweepOptions::default()
    };
    // nearest factors first, so a far step can bisect onto a cached one
    let mut order: Vec<f64> = factors.to_vec();
    order.sort_by(|a, b| (a - 1.0).abs().total_cmp(&(b - 1.0).abs()).then(a.total_cmp(b)));
    for f in order {
        let value = f * p.nominal;
        let moved = cached.eigenvalues_at(value)?;
        let direct = match_eigenvalues(nominal, &moved)?;
        let critical = suspicious_pairs(&direct, opts.crossing_ratio).into_iter().any(|i| {
            let near = moved.iter().map(|&z| (z - nominal[i]).norm()).fold(f64::INFINITY, f64::min);
            near <= REFINE_RADIUS * epsilon
        });
        if !critical {
            for (d, &c) in disp.iter_mut().zip(&direct.costs) {
                *d = d.max(c);
            }
            continue;
        }
        let trace = sweep_parameter(&cached, &p.path, &[p.nominal, value], &opts)?;
        for (t, &origin) in trace.origins.iter().enumerate() {
            disp[origin] = disp[origin].max((trace.traces[t][1] - trace.traces[t][0]).norm());
            if trace.is_unresolved(t) {
                ambiguous[origin] = true;
            }
        }
    }
    Ok((disp, ambiguous))
}

/// Labels each nominal eigenvalue from control and hardware perturbation
/// sweeps. `spurious` marks eigenvalues already known to be truncation
/// artefacts.
pub fn classify_eigenvalues(
    nominal: &[C64],
    control: &[Parameter<'_>],
    hardware: &[Parameter<'_>],
    spurious: Option<&[bool]>,
    opts: &ClassifyOptions,
) -> Result<EigenClassification> {
    if control.is_empty() || hardware.is_empty() {
        return Err(config("classification needs at least one control and one hardware parameter"));
    }
    if opts.factors.iter().any(|&f| !(f.is_finite() && f > 0.0 && f != 1.0)) {
        return Err(config("perturbation factors must be positive, finite and different from 1"));
    }
    if let Some(s) = spurious {
        if s.len() != nominal.len() {
            return Err(config("spurious flags do not match the spectrum"));
        }
    }
    let radius = nominal.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let epsilon = opts.epsilon.unwrap_or(opts.epsilon_rel * radius);

    // every perturbed spectrum is independent: evaluate them all up front
    let params: Vec<&Parameter<'_>> = control.iter().chain(hardware).collect();
    let jobs: Vec<(usize, f64)> = params
        .iter()
        .enumerate()
        .flat_map(|(k, p)| opts.factors.iter().map(move |f| (k, f * p.nominal)))
        .collect();
    let results = exec::map(opts.exec, &jobs, |&(k, v)| params[k].family.eigenvalues_at(v));
    let mut per_param: Vec<HashMap<u64, Vec<C64>>> = vec![HashMap::new(); params.len()];
    for ((k, v), r) in jobs.iter().zip(results) {
        per_param[*k].insert(v.to_bits(), r?);
    }

    let n = nominal.len();
    let mut evidence = vec![
        Evidence {
            control_displacement: 0.0,
            hardware_displacement: 0.0,
            truncation_converged: spurious.map(|_| true),
        };
        n
    ];
    let mut ambiguous = vec![false; n];
    let work: Vec<(&Parameter<'_>, HashMap<u64, Vec<C64>>)> = params.iter().copied().zip(per_param).collect();
    let moved = exec::map(opts.exec, &work, |(p, spectra)| displacement(nominal, p, spectra.clone(), &opts.factors, epsilon));
    for (k, r) in moved.into_iter().enumerate() {
        let (d, amb) = r?;
        for i in 0..n {
            let e = &mut evidence[i];
            if k < control.len() {
                e.control_displacement = e.control_displacement.max(d[i]);
            } else {
                e.hardware_displacement = e.hardware_displacement.max(d[i]);
            }
            ambiguous[i] |= amb[i];
        }
    }
    let labels = (0..n)
        .map(|i| {
            if let Some(s) = spurious {
                if s[i] {
                    evidence[i].truncation_converged = Some(false);
                    return Label::Spurious;
                }
            }
            if ambiguous[i] {
                Label::Unresolved
            } else {
                label_for(&evidence[i], epsilon)
            }
        })
        .collect();
    Ok(EigenClassification {
        labels,
        evidence,
        epsilon,
    })
}
