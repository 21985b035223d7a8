//! Stock resources: an LC-filtered grid-forming Vf converter, an L-filtered
//! grid-following PQ converter and a zero-injection placeholder.
//!
//! All gains and filter values are parameters; the hardware is modelled in
//! abc, the control in dq through amplitude-invariant Park transforms.

use std::f64::consts::PI;
use std::sync::Arc;

use faer::Mat;
use serde::{Deserialize, Serialize};

use super::{CiderKind, CiderSpec, CiderTransforms, LinearReference, LtpBlock, PqReference, TransformSpec};
use crate::error::{HssError, Result};
use crate::harmonic::FourierSeries;
use crate::linalg::{C64, CMat};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VfLcParams {
    /// Filter inductance (H), resistance (ohm) and capacitance (F).
    pub l: f64,
    pub r: f64,
    pub c: f64,
    pub kp_v: f64,
    pub ki_v: f64,
    pub kp_i: f64,
    pub ki_i: f64,
    /// dq voltage setpoint.
    pub v_ref: [f64; 2],
    #[serde(default)]
    pub phase: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PqLParams {
    pub l: f64,
    pub r: f64,
    pub kp: f64,
    pub ki: f64,
    /// Active and reactive power setpoints (W, var).
    pub p: f64,
    pub q: f64,
    #[serde(default)]
    pub phase: f64,
}

/// Balanced three-phase phasor with an optional negative-sequence share.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThreePhase {
    pub amplitude: f64,
    #[serde(default)]
    pub phase: f64,
    #[serde(default)]
    pub unbalance: f64,
}

impl ThreePhase {
    /// x_k(t) = A cos(wt + phase + s_k) + u A cos(wt + phase - s_k) as a 3x1
    /// series with coefficients at h = +-1.
    pub fn series(&self) -> FourierSeries {
        let shifts = [0.0, -2.0 * PI / 3.0, 2.0 * PI / 3.0];
        let a = self.amplitude / 2.0;
        let pos = CMat::from_fn(3, 1, |k, _| {
            C64::from_polar(a, self.phase + shifts[k]) + C64::from_polar(a * self.unbalance, self.phase - shifts[k])
        });
        let neg = CMat::from_fn(3, 1, |k, _| pos[(k, 0)].conj());
        FourierSeries::from_coefficients(3, 1, [(1, pos), (-1, neg)]).expect("3x1 coefficients")
    }
}

fn positive(name: &str, what: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(HssError::PhysicalParameter(format!("resource `{name}`: {what} must be positive, got {v}")))
    }
}

fn non_negative(name: &str, what: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(HssError::PhysicalParameter(format!("resource `{name}`: {what} must be non-negative, got {v}")))
    }
}

/// Real matrix assembled from k x k blocks, each a multiple of the identity.
fn scalar_blocks(k: usize, blocks: &[&[f64]]) -> Mat<f64> {
    let rows = blocks.len();
    let cols = blocks.first().map_or(0, |r| r.len());
    Mat::from_fn(rows * k, cols * k, |i, j| if i % k == j % k { blocks[i / k][j / k] } else { 0.0 })
}

fn dc_column(v: &[f64]) -> FourierSeries {
    FourierSeries::constant(CMat::from_fn(v.len(), 1, |i, _| C64::new(v[i], 0.0)))
}

/// Grid-forming Vf resource. Hardware states (i_f, v_f) in abc with inputs
/// [i_g | u] and outputs [v_f | i_f, v_f]; control states (x_v, x_i) in dq
/// with inputs [v* | i_f, v_f] and output u.
pub fn vf_lc(name: &str, node: &str, p: &VfLcParams, current: &ThreePhase) -> Result<CiderSpec> {
    positive(name, "inductance", p.l)?;
    positive(name, "capacitance", p.c)?;
    non_negative(name, "resistance", p.r)?;
    let (l, c, r) = (p.l, p.c, p.r);
    let hw = LtpBlock::lti(
        "lc-filter",
        scalar_blocks(3, &[&[-r / l, -1.0 / l], &[1.0 / c, 0.0]]),
        scalar_blocks(3, &[&[0.0, 1.0 / l], &[-1.0 / c, 0.0]]),
        scalar_blocks(3, &[&[0.0, 1.0], &[1.0, 0.0], &[0.0, 1.0]]),
        Mat::zeros(9, 6),
        3,
        3,
    )?;
    let ctl = LtpBlock::lti(
        "vf-control",
        scalar_blocks(2, &[&[0.0, 0.0], &[p.ki_v, 0.0]]),
        scalar_blocks(2, &[&[1.0, 0.0, -1.0], &[p.kp_v, -1.0, -p.kp_v]]),
        scalar_blocks(2, &[&[p.kp_i * p.ki_v, p.ki_i]]),
        scalar_blocks(2, &[&[p.kp_i * p.kp_v, -p.kp_i, -p.kp_i * p.kp_v]]),
        2,
        0,
    )?;
    Ok(CiderSpec {
        name: name.into(),
        node: node.into(),
        kind: CiderKind::Forming,
        hardware: vec![hw],
        control: vec![ctl],
        transforms: CiderTransforms {
            pi_gamma: TransformSpec::Identity,
            kappa_pi: TransformSpec::Park { phase: p.phase },
            pi_kappa: TransformSpec::InversePark { phase: p.phase },
            gamma_pi: TransformSpec::Identity,
            gamma_pi_plus: None,
        },
        reference: Arc::new(LinearReference::setpoint_passthrough(2, 2)),
        setpoint: dc_column(&p.v_ref),
        operating_point: current.series(),
    })
}

/// Grid-following PQ resource. Hardware state i in abc with inputs [v_g | u]
/// and outputs [i | i]; control state x in dq with inputs [i* | i] and
/// output u; i* comes from the PQ reference on the dq grid voltage.
pub fn pq_l(name: &str, node: &str, p: &PqLParams, voltage: &ThreePhase) -> Result<CiderSpec> {
    positive(name, "inductance", p.l)?;
    non_negative(name, "resistance", p.r)?;
    let hw = LtpBlock::lti(
        "l-filter",
        scalar_blocks(3, &[&[-p.r / p.l]]),
        scalar_blocks(3, &[&[-1.0 / p.l, 1.0 / p.l]]),
        scalar_blocks(3, &[&[1.0], &[1.0]]),
        Mat::zeros(6, 6),
        3,
        3,
    )?;
    let ctl = LtpBlock::lti(
        "pq-control",
        Mat::zeros(2, 2),
        scalar_blocks(2, &[&[1.0, -1.0]]),
        scalar_blocks(2, &[&[p.ki]]),
        scalar_blocks(2, &[&[p.kp, -p.kp]]),
        2,
        0,
    )?;
    Ok(CiderSpec {
        name: name.into(),
        node: node.into(),
        kind: CiderKind::Following,
        hardware: vec![hw],
        control: vec![ctl],
        transforms: CiderTransforms {
            pi_gamma: TransformSpec::Identity,
            kappa_pi: TransformSpec::Park { phase: p.phase },
            pi_kappa: TransformSpec::InversePark { phase: p.phase },
            gamma_pi: TransformSpec::Identity,
            gamma_pi_plus: None,
        },
        reference: Arc::new(PqReference::default()),
        setpoint: dc_column(&[p.p, p.q]),
        operating_point: voltage.series(),
    })
}

/// Grid-following resource injecting no current: no states, zero feedthrough.
pub fn zero_injection(name: &str, node: &str) -> Result<CiderSpec> {
    let hw = LtpBlock::lti("open", Mat::zeros(0, 0), Mat::zeros(0, 3), Mat::zeros(3, 0), Mat::zeros(3, 3), 3, 3)?;
    Ok(CiderSpec {
        name: name.into(),
        node: node.into(),
        kind: CiderKind::Following,
        hardware: vec![hw],
        control: vec![],
        transforms: CiderTransforms::default(),
        reference: Arc::new(LinearReference::new(Mat::zeros(0, 3), Mat::zeros(0, 0))?),
        setpoint: FourierSeries::zero(0, 1),
        operating_point: FourierSeries::zero(3, 1),
    })
}
