//! Truncation artefacts: probe-rebuild convergence and boundary energy.

use crate::error::{config, Result};
use crate::linalg::C64;
use crate::model::HssModel;

use super::eigen::{eigenvalues, EigenSolution};
use super::fold::{fold_value, strip_distance};

#[derive(Clone, Debug)]
pub struct SpuriousOptions {
    /// Order of the probe rebuild; defaults to hmax + 2.
    pub hmax_probe: Option<usize>,
    /// Absolute tolerance; defaults to `delta_rel` times the spectral radius.
    pub delta: Option<f64>,
    pub delta_rel: f64,
    /// Energy share in the two outermost orders that marks a mode as
    /// boundary-suspect.
    pub boundary_share: f64,
}

impl Default for SpuriousOptions {
    fn default() -> Self {
        SpuriousOptions {
            hmax_probe: None,
            delta: None,
            delta_rel: 1e-4,
            boundary_share: 0.5,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SpuriousReport {
    /// No folded counterpart within delta at the probe order.
    pub flags: Vec<bool>,
    pub boundary_suspect: Vec<bool>,
    /// Folded distance to the nearest probe eigenvalue.
    pub distances: Vec<f64>,
    pub hmax_probe: usize,
    pub delta: f64,
}

impl SpuriousReport {
    pub fn flagged(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }
}

/// Folded nearest-neighbour distance of every eigenvalue to a probe spectrum.
pub fn probe_distances(eigs: &[C64], probe: &[C64], f1: f64) -> Vec<f64> {
    let folded: Vec<C64> = probe.iter().map(|&z| fold_value(z, f1)).collect();
    eigs.iter()
        .map(|&z| {
            let f = fold_value(z, f1);
            folded.iter().map(|&p| strip_distance(f, p, f1)).fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// Rebuilds `model` at the probe order and compares folded spectra.
pub fn detect_spurious(model: &HssModel, solution: &EigenSolution, opts: &SpuriousOptions) -> Result<SpuriousReport> {
    let hmax = model.index_set().hmax();
    let probe_order = opts.hmax_probe.unwrap_or(hmax + 2);
    if probe_order < hmax + 2 {
        return Err(config(format!("probe order {probe_order} must be at least hmax + 2 = {}", hmax + 2)));
    }
    let probe = eigenvalues(&model.regrid(probe_order)?)?;
    let delta = opts.delta.unwrap_or(opts.delta_rel * solution.spectral_radius());
    let distances = probe_distances(&solution.eigenvalues, &probe, model.index_set().f1());
    let flags = distances.iter().map(|&d| d > delta).collect();
    let boundary_suspect = (0..solution.len())
        .map(|k| solution.energy(k).boundary_share >= opts.boundary_share)
        .collect();
    Ok(SpuriousReport {
        flags,
        boundary_suspect,
        distances,
        hmax_probe: probe_order,
        delta,
    })
}

/// Harmonic stability verdict over the eigenvalues that are not excluded as
/// truncation artefacts.
#[derive(Clone, Debug, PartialEq)]
pub struct StabilityVerdict {
    pub stable: bool,
    pub margin: f64,
    /// Largest real part among the retained eigenvalues.
    pub max_real: Option<f64>,
    pub critical: Option<usize>,
    pub excluded: usize,
}

pub fn stability_verdict(eigs: &[C64], excluded: &[bool], margin: f64) -> StabilityVerdict {
    let mut best: Option<(usize, f64)> = None;
    for (i, z) in eigs.iter().enumerate() {
        if excluded.get(i).copied().unwrap_or(false) {
            continue;
        }
        if best.is_none_or(|(_, r)| z.re > r) {
            best = Some((i, z.re));
        }
    }
    StabilityVerdict {
        stable: best.is_none_or(|(_, r)| r <= margin),
        margin,
        max_real: best.map(|b| b.1),
        critical: best.map(|b| b.0),
        excluded: excluded.iter().filter(|&&e| e).count(),
    }
}
