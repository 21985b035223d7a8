#![allow(dead_code)]

use std::f64::consts::PI;
use std::path::PathBuf;

use faer::linalg::solvers::DenseSolveCore;
use faer::Mat;
use hss_core::grid::{Branch, GridNode, GridTopology, NodeKind, Shunt};
use hss_core::harmonic::HarmonicIndexSet;
use hss_core::linalg::C64;
use rand::Rng;

pub fn set(hmax: usize) -> HarmonicIndexSet {
    HarmonicIndexSet::new(hmax, 50.0).unwrap()
}

pub fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

/// Coefficients of one period of samples by the textbook sum, no FFT.
pub fn naive_dft(samples: &[C64], h: i64) -> C64 {
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(k, &x)| x * C64::from_polar(1.0, -2.0 * PI * h as f64 * k as f64 / n))
        .sum::<C64>()
        / n
}

/// Value at t = k/n of a period of sum_h c_h e^{j h w t}.
pub fn synth(coeffs: &[(i64, C64)], k: usize, n: usize) -> C64 {
    coeffs
        .iter()
        .map(|&(h, c)| c * C64::from_polar(1.0, 2.0 * PI * h as f64 * k as f64 / n as f64))
        .sum()
}

/// Random real matrix A = V diag-block(L) V^-1 with a prescribed spectrum.
/// Returns A and its eigenvalues.
pub fn stable_lti<R: Rng>(rng: &mut R, n: usize) -> (Mat<f64>, Vec<C64>) {
    let mut blocks = Mat::<f64>::zeros(n, n);
    let mut eigs = Vec::new();
    let mut i = 0;
    while i < n {
        let re = -rng.gen_range(0.5..200.0);
        if i + 1 < n && rng.gen_bool(0.5) {
            let im = rng.gen_range(10.0..400.0);
            blocks[(i, i)] = re;
            blocks[(i + 1, i + 1)] = re;
            blocks[(i, i + 1)] = im;
            blocks[(i + 1, i)] = -im;
            eigs.push(C64::new(re, im));
            eigs.push(C64::new(re, -im));
            i += 2;
        } else {
            blocks[(i, i)] = re;
            eigs.push(C64::new(re, 0.0));
            i += 1;
        }
    }
    // V = I + small random part keeps the similarity well conditioned
    let v = Mat::from_fn(n, n, |r, c| if r == c { 1.0 } else { 0.0 } + rng.gen_range(-0.3..0.3) / n as f64);
    let vinv = v.partial_piv_lu().inverse();
    (&v * &blocks * &vinv, eigs)
}

/// Random symmetric positive definite 3x3 matrix around `scale` * I.
pub fn spd3<R: Rng>(rng: &mut R, scale: f64) -> Mat<f64> {
    let g = Mat::from_fn(3, 3, |_, _| rng.gen_range(-0.3..0.3));
    let mut m = &g * g.transpose();
    for i in 0..3 {
        m[(i, i)] += 1.0;
    }
    Mat::from_fn(3, 3, |i, j| m[(i, j)] * scale)
}

/// Random connected topology with `n` nodes, node 0 forming, plus a few
/// extra branches closing loops.
pub fn random_topology<R: Rng>(rng: &mut R, n: usize) -> GridTopology {
    let id = |k: usize| format!("n{k}");
    let nodes = (0..n)
        .map(|k| GridNode::new(id(k), if k == 0 { NodeKind::Forming } else { NodeKind::Following }))
        .collect();
    let mut branches = Vec::new();
    for k in 1..n {
        let parent = rng.gen_range(0..k);
        let (from, to) = if rng.gen_bool(0.5) { (parent, k) } else { (k, parent) };
        branches.push(Branch::new(format!("b{k}"), id(from), id(to), spd3(rng, 0.1), spd3(rng, 1e-3)));
    }
    for e in 0..rng.gen_range(0..3) {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a != b {
            branches.push(Branch::new(format!("x{e}"), id(a), id(b), spd3(rng, 0.2), spd3(rng, 2e-3)));
        }
    }
    let shunts = (1..n).map(|k| Shunt::new(id(k), spd3(rng, 2e-5))).collect();
    GridTopology::new(nodes, branches, shunts).unwrap()
}

/// Greedy nearest matching of `expected` into `got`; returns the largest
/// relative distance.
pub fn multiset_distance(expected: &[C64], got: &[C64]) -> f64 {
    assert_eq!(expected.len(), got.len());
    let mut used = vec![false; got.len()];
    let mut worst = 0.0f64;
    for &e in expected {
        let (k, d) = got
            .iter()
            .enumerate()
            .filter(|(k, _)| !used[*k])
            .map(|(k, &g)| (k, (g - e).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        used[k] = true;
        worst = worst.max(d / e.norm().max(1.0));
    }
    worst
}
