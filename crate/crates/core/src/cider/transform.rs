use std::f64::consts::PI;

use faer::Mat;

use crate::error::{config, shape, Result};
use crate::harmonic::FourierSeries;
use crate::linalg::{CMat, C64};

/// Coordinate transforms available to CIDER descriptions. Park variants act
/// group-wise on consecutive three-phase (or dq) channel triples (pairs).
#[derive(Clone, Debug)]
pub enum TransformSpec {
    Identity,
    /// abc -> dq, amplitude invariant, angle 2 pi f1 t + phase.
    Park { phase: f64 },
    /// dq -> abc, the right inverse of `Park` with the same phase.
    InversePark { phase: f64 },
    /// Explicit matrix-valued Fourier series.
    Custom(FourierSeries),
}

const SHIFTS: [f64; 3] = [0.0, -2.0 * PI / 3.0, 2.0 * PI / 3.0];

impl TransformSpec {
    pub fn name(&self) -> &'static str {
        match self {
            TransformSpec::Identity => "identity",
            TransformSpec::Park { .. } => "park",
            TransformSpec::InversePark { .. } => "inverse-park",
            TransformSpec::Custom(_) => "custom",
        }
    }

    /// Series of the transform acting on `inputs` channels.
    pub fn series(&self, inputs: usize) -> Result<FourierSeries> {
        match self {
            TransformSpec::Identity => Ok(FourierSeries::identity(inputs)),
            TransformSpec::Park { phase } => {
                if inputs % 3 != 0 {
                    return Err(shape(format!("park transform needs a multiple of 3 channels, got {inputs}")));
                }
                let groups = inputs / 3;
                let (pos, neg) = park_coefficients(*phase);
                tile(groups, 2, 3, &pos, &neg)
            }
            TransformSpec::InversePark { phase } => {
                if inputs % 2 != 0 {
                    return Err(shape(format!("inverse park needs an even channel count, got {inputs}")));
                }
                let groups = inputs / 2;
                let (pos, neg) = park_coefficients(*phase);
                // (3/2) P(t)^T: the h = +1 coefficient of P^T is the transpose of P_{+1}
                let t = |m: &CMat| Mat::from_fn(3, 2, |i, j| m[(j, i)] * 1.5);
                tile(groups, 3, 2, &t(&pos), &t(&neg))
            }
            TransformSpec::Custom(s) => {
                if s.cols() != inputs {
                    return Err(shape(format!(
                        "custom transform takes {} channels, connected to {inputs}",
                        s.cols()
                    )));
                }
                Ok(s.clone())
            }
        }
    }

    pub fn outputs(&self, inputs: usize) -> Result<usize> {
        Ok(self.series(inputs)?.rows())
    }
}

/// Coefficients at h = +1 and h = -1 of the 2x3 amplitude-invariant Park
/// matrix (2/3)[cos(th - s_k); -sin(th - s_k)], th = w t + phase.
fn park_coefficients(phase: f64) -> (CMat, CMat) {
    // cos x = (e^{jx} + e^{-jx})/2, -sin x = (j/2) e^{jx} - (j/2) e^{-jx}
    let pos = Mat::from_fn(2, 3, |i, k| {
        let e = C64::from_polar(1.0, phase + SHIFTS[k]);
        let v = if i == 0 { e * 0.5 } else { e * C64::new(0.0, 0.5) };
        v * (2.0 / 3.0)
    });
    let neg = Mat::from_fn(2, 3, |i, k| pos[(i, k)].conj());
    (pos, neg)
}

fn tile(groups: usize, r: usize, c: usize, pos: &CMat, neg: &CMat) -> Result<FourierSeries> {
    let big = |m: &CMat| {
        let mut out = Mat::zeros(groups * r, groups * c);
        for g in 0..groups {
            for i in 0..r {
                for j in 0..c {
                    out[(g * r + i, g * c + j)] = m[(i, j)];
                }
            }
        }
        out
    };
    FourierSeries::from_coefficients(groups * r, groups * c, [(1, big(pos)), (-1, big(neg))])
}

/// Default output transform T+ for the gamma port: the inverse of a constant
/// square invertible transform. Anything else must be supplied explicitly.
pub fn default_pseudo_inverse(t: &FourierSeries) -> Result<FourierSeries> {
    if t.rows() != t.cols() {
        return Err(config(format!(
            "output transform is {}x{}; a pseudo-inverse must be supplied for non-square transforms",
            t.rows(),
            t.cols()
        )));
    }
    if !t.is_dc_only() {
        return Err(config(
            "output transform is time-varying; its pseudo-inverse must be supplied explicitly",
        ));
    }
    let t0 = t.coefficient_or_zero(0);
    let lu = crate::linalg::Lu::new(&t0)?;
    if lu.rcond < 1e-12 {
        return Err(config("output transform is singular; supply its pseudo-inverse explicitly"));
    }
    Ok(FourierSeries::constant(lu.solve(&crate::linalg::identity(t0.nrows()))?))
}
