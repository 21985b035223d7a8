//! Spectrum of A - j Omega with right eigenvectors.
//!
//! For models of real-valued signals the lifted matrix satisfies
//! M = P conj(M) P, where P swaps orders h and -h. A unitary change of basis
//! then makes it real, which lets the solver run in real arithmetic.

use std::f64::consts::FRAC_1_SQRT_2;

use faer::Mat;

use crate::error::{HssError, Result};
use crate::linalg::{self, CMat, C64};
use crate::model::HssModel;

/// Component, channel and harmonic order of one state.
#[derive(Clone, Debug, PartialEq)]
pub struct StateLabel {
    pub component: String,
    pub channel: usize,
    pub harmonic: i64,
}

#[derive(Clone, Debug)]
pub struct EigenSolution {
    pub eigenvalues: Vec<C64>,
    /// Unit 2-norm columns aligned with `eigenvalues`.
    pub vectors: CMat,
    pub labels: Vec<StateLabel>,
    pub hmax: usize,
    pub f1: f64,
    /// Largest ||M v - lambda v||.
    pub max_residual: f64,
    /// Largest absolute entry of M, the scale of the residual bound.
    pub matrix_scale: f64,
}

/// Pairs (i, k) of positions holding the same channel at orders h < 0 and
/// -h; positions at h = 0 map to themselves.
fn conjugate_pairs(model: &HssModel) -> Vec<usize> {
    model.state_layout().flip_permutation()
}

/// Real form T M T^H, or None if M lacks the conjugate structure.
fn realify(m: &CMat, flip: &[usize], orders: &[i64]) -> Option<Mat<f64>> {
    let n = m.nrows();
    let s = FRAC_1_SQRT_2;
    // rows
    let mut r = m.clone();
    for i in 0..n {
        if orders[i] < 0 {
            let k = flip[i];
            for c in 0..n {
                let (xi, xk) = (m[(i, c)], m[(k, c)]);
                r[(i, c)] = (xk + xi) * s;
                r[(k, c)] = (xk - xi) * C64::new(0.0, s);
            }
        }
    }
    // columns
    let mut out = r.clone();
    for i in 0..n {
        if orders[i] < 0 {
            let k = flip[i];
            for row in 0..n {
                let (xi, xk) = (r[(row, i)], r[(row, k)]);
                out[(row, i)] = (xk + xi) * s;
                out[(row, k)] = (xk - xi) * C64::new(0.0, -s);
            }
        }
    }
    let scale = linalg::max_abs(&out).max(f64::MIN_POSITIVE);
    let mut worst = 0.0f64;
    let re = Mat::from_fn(n, n, |i, j| {
        worst = worst.max(out[(i, j)].im.abs());
        out[(i, j)].re
    });
    (worst <= 1e-9 * scale).then_some(re)
}

/// x = T^H y
fn unrealify(y: &mut CMat, flip: &[usize], orders: &[i64]) {
    let s = FRAC_1_SQRT_2;
    for i in 0..y.nrows() {
        if orders[i] < 0 {
            let k = flip[i];
            for c in 0..y.ncols() {
                let (ya, yb) = (y[(i, c)], y[(k, c)]);
                y[(k, c)] = (ya - yb * C64::new(0.0, 1.0)) * s;
                y[(i, c)] = (ya + yb * C64::new(0.0, 1.0)) * s;
            }
        }
    }
}

fn orders(model: &HssModel) -> Vec<i64> {
    (0..model.states()).map(|i| model.state_layout().order_of(i)).collect()
}

fn evd_error(n: usize, m: &CMat) -> HssError {
    HssError::Numerical(format!(
        "eigensolver did not converge on the {n}x{n} matrix (largest entry {:e})",
        linalg::max_abs(m)
    ))
}

/// Eigenvalues only; the cheaper call used by sweeps.
pub fn eigenvalues(model: &HssModel) -> Result<Vec<C64>> {
    let m = model.shifted_state_matrix();
    let n = m.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let flip = conjugate_pairs(model);
    let ord = orders(model);
    match realify(&m, &flip, &ord) {
        Some(r) => r.eigenvalues().map_err(|_| evd_error(n, &m)),
        None => m.eigenvalues().map_err(|_| evd_error(n, &m)),
    }
}

/// Full spectrum, unit-norm right eigenvectors and the residual check
/// ||M v - lambda v|| <= 1e-8 max(1, max|M_ij|).
pub fn eigen_decompose(model: &HssModel) -> Result<EigenSolution> {
    let m = model.shifted_state_matrix();
    let n = m.nrows();
    let labels = (0..n)
        .map(|i| {
            let (component, channel, harmonic) = model.state_label(i);
            StateLabel { component, channel, harmonic }
        })
        .collect();
    let set = model.index_set();
    if n == 0 {
        return Ok(EigenSolution {
            eigenvalues: Vec::new(),
            vectors: linalg::zeros(0, 0),
            labels,
            hmax: set.hmax(),
            f1: set.f1(),
            max_residual: 0.0,
            matrix_scale: 0.0,
        });
    }
    let flip = conjugate_pairs(model);
    let ord = orders(model);
    let matrix_scale = linalg::max_abs(&m);
    let bound = 1e-8 * matrix_scale.max(1.0);
    let complex_route = || -> Result<(Vec<C64>, CMat, f64)> {
        let e = m.eigen().map_err(|_| evd_error(n, &m))?;
        finish(&m, e.S().column_vector().iter().copied().collect(), e.U().to_owned())
    };
    let (values, vectors, max_residual) = match realify(&m, &flip, &ord) {
        Some(r) => {
            let e = r.eigen().map_err(|_| evd_error(n, &m))?;
            let vals: Vec<C64> = e.S().column_vector().iter().copied().collect();
            let mut v = e.U().to_owned();
            unrealify(&mut v, &flip, &ord);
            let real = finish(&m, vals, v)?;
            // the real solver's vectors degrade on exactly repeated complex
            // pairs; the complex solver handles those
            if real.2 <= bound {
                real
            } else {
                complex_route()?
            }
        }
        None => complex_route()?,
    };
    if !(max_residual <= bound) {
        return Err(HssError::Numerical(format!(
            "eigenpair residual {max_residual:e} exceeds the bound for a matrix with entries up to {matrix_scale:e}"
        )));
    }
    Ok(EigenSolution {
        eigenvalues: values,
        vectors,
        labels,
        hmax: set.hmax(),
        f1: set.f1(),
        max_residual,
        matrix_scale,
    })
}

/// Normalises the columns of `vectors` and returns the largest residual.
fn finish(m: &CMat, values: Vec<C64>, mut vectors: CMat) -> Result<(Vec<C64>, CMat, f64)> {
    let n = m.nrows();
    for c in 0..n {
        let norm = vectors.col(c).norm_l2();
        if norm > 0.0 {
            for r in 0..n {
                vectors[(r, c)] /= C64::new(norm, 0.0);
            }
        }
    }
    let mv = linalg::mul(m, &vectors)?;
    let mut max_residual = 0.0f64;
    for c in 0..n {
        let mut s = 0.0;
        for r in 0..n {
            s += (mv[(r, c)] - values[c] * vectors[(r, c)]).norm_sqr();
        }
        max_residual = max_residual.max(s.sqrt());
    }
    Ok((values, vectors, max_residual))
}

/// Per-eigenvalue eigenvector energy summaries.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeEnergy {
    pub dominant_component: String,
    pub dominant_harmonic: i64,
    /// Share of the energy at |h| >= hmax - 1.
    pub boundary_share: f64,
}

impl EigenSolution {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn energy(&self, k: usize) -> ModeEnergy {
        let mut comp: Vec<(String, f64)> = Vec::new();
        let mut harm = std::collections::BTreeMap::<i64, f64>::new();
        let mut boundary = 0.0;
        let mut total = 0.0;
        let edge = self.hmax.saturating_sub(1) as i64;
        for (r, l) in self.labels.iter().enumerate() {
            let e = self.vectors[(r, k)].norm_sqr();
            total += e;
            match comp.iter_mut().find(|(c, _)| *c == l.component) {
                Some((_, v)) => *v += e,
                None => comp.push((l.component.clone(), e)),
            }
            *harm.entry(l.harmonic).or_default() += e;
            if l.harmonic.abs() >= edge {
                boundary += e;
            }
        }
        let arg_max = |it: &mut dyn Iterator<Item = (usize, f64)>| {
            it.fold((0, f64::MIN), |best, (i, v)| if v > best.1 { (i, v) } else { best }).0
        };
        let ci = arg_max(&mut comp.iter().map(|(_, v)| *v).enumerate());
        let harms: Vec<(i64, f64)> = harm.into_iter().collect();
        let hi = arg_max(&mut harms.iter().map(|(_, v)| *v).enumerate());
        ModeEnergy {
            dominant_component: comp.get(ci).map(|c| c.0.clone()).unwrap_or_default(),
            dominant_harmonic: harms.get(hi).map(|h| h.0).unwrap_or(0),
            boundary_share: if total > 0.0 { boundary / total } else { 0.0 },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmonic::HarmonicIndexSet;
    use crate::model::lift_lti;
    use std::f64::consts::PI;

    fn scalar(a: f64, hmax: usize) -> HssModel {
        let one = |x: f64| linalg::from_rows(&[&[C64::new(x, 0.0)]]);
        lift_lti(&one(a), &one(1.0), &one(1.0), &one(0.0), HarmonicIndexSet::new(hmax, 50.0).unwrap()).unwrap()
    }

    fn sorted_im(mut v: Vec<C64>) -> Vec<C64> {
        v.sort_by(|a, b| a.im.total_cmp(&b.im));
        v
    }

    #[test]
    fn scalar_lift_ladder() {
        let s = eigen_decompose(&scalar(-1.0, 1)).unwrap();
        let v = sorted_im(s.eigenvalues.clone());
        let w = 100.0 * PI;
        for (z, im) in v.iter().zip([-w, 0.0, w]) {
            assert!((z - C64::new(-1.0, im)).norm() < 1e-10);
        }
        assert!(s.max_residual < 1e-10);
        for c in 0..3 {
            assert!((s.vectors.col(c).norm_l2() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn pure_omega() {
        let v = sorted_im(eigenvalues(&scalar(0.0, 1)).unwrap());
        assert!((v[0] - C64::new(0.0, -100.0 * PI)).norm() < 1e-10);
        assert!(v[1].norm() < 1e-10);
    }

    #[test]
    fn real_path_agrees_with_complex_solver() {
        let set = HarmonicIndexSet::new(2, 50.0).unwrap();
        let a = linalg::from_rows(&[
            &[C64::new(-1.0, 0.0), C64::new(30.0, 0.0)],
            &[C64::new(-40.0, 0.0), C64::new(-2.0, 0.0)],
        ]);
        let b = linalg::identity(2);
        let m = lift_lti(&a, &b, &b, &linalg::zeros(2, 2), set).unwrap();
        let flip = conjugate_pairs(&m);
        assert!(realify(&m.shifted_state_matrix(), &flip, &orders(&m)).is_some());
        let got = sorted_im(eigenvalues(&m).unwrap());
        let want = sorted_im(m.shifted_state_matrix().eigenvalues().unwrap());
        for (x, y) in got.iter().zip(&want) {
            assert!((x - y).norm() < 1e-9);
        }
        let s = eigen_decompose(&m).unwrap();
        assert!(s.max_residual < 1e-9);
    }

    #[test]
    fn energy_locates_the_order() {
        let s = eigen_decompose(&scalar(-1.0, 3)).unwrap();
        for k in 0..s.len() {
            let e = s.energy(k);
            let h = ((s.eigenvalues[k].im) / (-100.0 * PI)).round() as i64;
            assert_eq!(e.dominant_harmonic, h);
            assert_eq!(e.boundary_share, if h.abs() >= 2 { 1.0 } else { 0.0 });
        }
    }
}
