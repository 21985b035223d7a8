use std::sync::Arc;

use super::internal::{assemble_internal_response, InternalResponse, InternalRouting};
use super::operating_point::{build_reference_block, linearize_reference, OperatingPoint, ReferenceBlock};
use super::transform::{default_pseudo_inverse, TransformSpec};
use super::{LtpBlock, ReferencePlugin};
use crate::assembly::WellPosedness;
use crate::error::{config, shape, Result};
use crate::harmonic::{toeplitz_from_fourier, FourierSeries, Grouping, GroupingLayout, HarmonicIndexSet, HarmonicSignal, ToeplitzOperator};
use crate::linalg::{self, CMat, C64};
use crate::model::{HssModel, HssModelParts, InputPort};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CiderKind {
    /// Controls its node voltage; gamma disturbance is the injected current.
    Forming,
    /// Controls its injected current; gamma disturbance is the node voltage.
    Following,
}

impl CiderKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            CiderKind::Forming => "forming",
            CiderKind::Following => "following",
        }
    }
}

/// Named coordinate transforms of a resource.
#[derive(Clone, Debug)]
pub struct CiderTransforms {
    /// W_pi = T_{pi|gamma} W_gamma
    pub pi_gamma: TransformSpec,
    /// Grid-side and measured quantities into the control frame.
    pub kappa_pi: TransformSpec,
    /// Control outputs into the hardware frame.
    pub pi_kappa: TransformSpec,
    /// Output transform; Y_gamma = T+ Y_pi.
    pub gamma_pi: TransformSpec,
    /// Explicit T+ when the default inverse does not exist.
    pub gamma_pi_plus: Option<TransformSpec>,
}

impl Default for CiderTransforms {
    fn default() -> Self {
        CiderTransforms {
            pi_gamma: TransformSpec::Identity,
            kappa_pi: TransformSpec::Identity,
            pi_kappa: TransformSpec::Identity,
            gamma_pi: TransformSpec::Identity,
            gamma_pi_plus: None,
        }
    }
}

/// Everything needed to build one resource's HSS model at any truncation.
#[derive(Clone, Debug)]
pub struct CiderSpec {
    pub name: String,
    pub node: String,
    pub kind: CiderKind,
    pub hardware: Vec<LtpBlock>,
    pub control: Vec<LtpBlock>,
    pub transforms: CiderTransforms,
    pub reference: Arc<dyn ReferencePlugin>,
    /// Setpoint spectrum W_sigma as a (sigma x 1) series.
    pub setpoint: FourierSeries,
    /// Hardware-side disturbance trajectory W_pi as a (w_pi x 1) series.
    pub operating_point: FourierSeries,
}

/// Lifted transforms used by the Definition-1 formulas.
#[derive(Clone, Debug)]
pub struct LiftedTransforms {
    pub pi_gamma: ToeplitzOperator,
    /// Acting on W_pi (grid-side path into the reference).
    pub kappa_pi: ToeplitzOperator,
    pub gamma_pi_plus: ToeplitzOperator,
    pub routing: InternalRouting,
}

/// The Definition-1 coefficient matrices of a resource.
#[derive(Clone, Debug)]
pub struct CiderMatrices {
    pub a: CMat,
    pub e_gamma: CMat,
    pub e_sigma: CMat,
    pub e_o: CMat,
    pub c_gamma: CMat,
    pub f_gamma: CMat,
    pub f_sigma: CMat,
    pub f_o: CMat,
}

/// Resource HSS model with ports gamma, sigma and o.
#[derive(Clone, Debug)]
pub struct CiderHss {
    pub name: String,
    pub node: String,
    pub kind: CiderKind,
    pub model: HssModel,
    pub operating_point: OperatingPoint,
    pub internal_certificate: WellPosedness,
    pub r_rho: ToeplitzOperator,
    pub r_sigma: ToeplitzOperator,
}

fn series_signal(s: &FourierSeries, set: HarmonicIndexSet) -> Result<HarmonicSignal> {
    if s.cols() != 1 {
        return Err(shape("signal series must have a single column"));
    }
    let items = set.orders().filter_map(|h| {
        s.coefficient(h)
            .map(|m| (h, (0..m.nrows()).map(|i| m[(i, 0)]).collect::<Vec<C64>>()))
    });
    HarmonicSignal::from_orders(set, s.rows(), items)
}

fn lift(s: &FourierSeries, set: HarmonicIndexSet) -> Result<ToeplitzOperator> {
    toeplitz_from_fourier(&s.truncated(set.hmax()), set)
}

/// Input channel count a transform needs to produce `outputs` channels.
fn inputs_for(t: &TransformSpec, outputs: usize, what: &str) -> Result<usize> {
    let n = match t {
        TransformSpec::Identity => outputs,
        TransformSpec::Park { .. } if outputs % 2 == 0 => outputs / 2 * 3,
        TransformSpec::InversePark { .. } if outputs % 3 == 0 => outputs / 3 * 2,
        TransformSpec::Custom(s) => s.cols(),
        _ => {
            return Err(shape(format!(
                "{what}: a {} transform cannot produce {outputs} channels",
                t.name()
            )))
        }
    };
    let got = t.outputs(n)?;
    if got != outputs {
        return Err(shape(format!("{what}: transform yields {got} channels, {outputs} required")));
    }
    Ok(n)
}

/// Applies the Definition-1 formulas to a closed internal response and a
/// linearised reference.
pub fn assemble_cider_hss(
    internal: &InternalResponse,
    reference: &ReferenceBlock,
    r_rho: &ToeplitzOperator,
    r_sigma: &ToeplitzOperator,
    t: &LiftedTransforms,
) -> Result<CiderMatrices> {
    let set = internal.index_set;
    let len = set.len();
    let mul = linalg::mul;
    let t_pg = t.pi_gamma.matrix();
    let t_kp = t.kappa_pi.matrix();
    let t_plus = t.gamma_pi_plus.matrix();
    if t_pg.nrows() != internal.w_pi * len {
        return Err(shape(format!(
            "T_pi|gamma yields {} rows, hardware disturbance has {}",
            t_pg.nrows(),
            internal.w_pi * len
        )));
    }
    if t_plus.ncols() != internal.y_pi * len {
        return Err(shape("T+ does not match the hardware output width"));
    }
    // R_rho T_{kappa|pi} T_{pi|gamma}
    let rtt = mul(r_rho.matrix(), &mul(t_kp, t_pg)?)?;
    let e_gamma = &mul(&internal.e_pi, t_pg)? + &mul(&internal.e_kappa, &rtt)?;
    let e_sigma = mul(&internal.e_kappa, r_sigma.matrix())?;
    let e_o = mul(&internal.e_kappa, &reference.r_o)?;
    // [I_pi | 0_kappa] keeps the leading Y_pi rows
    let n_ypi = internal.y_pi * len;
    let sel: Vec<usize> = (0..n_ypi).collect();
    let s = |m: &CMat| linalg::select_rows(m, &sel);
    let f_inner = &mul(&internal.f_pi, t_pg)? + &mul(&internal.f_kappa, &rtt)?;
    let f_gamma = mul(t_plus, &s(&f_inner))?;
    let f_sigma = mul(t_plus, &s(&mul(&internal.f_kappa, r_sigma.matrix())?))?;
    let f_o = mul(t_plus, &s(&mul(&internal.f_kappa, &reference.r_o)?))?;
    let c_gamma = mul(t_plus, &s(&internal.c))?;
    Ok(CiderMatrices {
        a: internal.a.clone(),
        e_gamma,
        e_sigma,
        e_o,
        c_gamma,
        f_gamma,
        f_sigma,
        f_o,
    })
}

impl CiderSpec {
    /// Per-order channel counts (states of hardware and control).
    pub fn state_channels(&self) -> Result<(usize, usize)> {
        let h = LtpBlock::stack("hardware", &self.hardware)?;
        let k = LtpBlock::stack("control", &self.control)?;
        Ok((h.states(), k.states()))
    }

    /// Lifts every transform at the given index set, checking the channel
    /// chain gamma -> pi -> kappa.
    pub fn lift_transforms(&self, set: HarmonicIndexSet) -> Result<LiftedTransforms> {
        let h = LtpBlock::stack("hardware", &self.hardware)?;
        let k = LtpBlock::stack("control", &self.control)?;
        let name = &self.name;
        let tr = &self.transforms;
        let n_gamma_in = inputs_for(&tr.pi_gamma, h.disturbance_inputs(), &format!("{name}: pi|gamma"))?;
        let pi_gamma = lift(&tr.pi_gamma.series(n_gamma_in)?, set)?;
        let kappa_w = lift(&tr.kappa_pi.series(h.disturbance_inputs())?, set)?;
        let meas = lift(&tr.kappa_pi.series(h.routed_outputs())?, set)?;
        let act = lift(&tr.pi_kappa.series(k.routed_outputs())?, set)?;
        let gamma_out = inputs_for(&tr.gamma_pi, h.external_outputs(), &format!("{name}: gamma|pi"))?;
        let plus = match &tr.gamma_pi_plus {
            Some(p) => {
                let s = p.series(h.external_outputs())?;
                if s.rows() != gamma_out && matches!(tr.gamma_pi, TransformSpec::Custom(_)) {
                    return Err(shape(format!("{name}: T+ has {} rows, expected {gamma_out}", s.rows())));
                }
                s
            }
            None => default_pseudo_inverse(&tr.gamma_pi.series(gamma_out)?)
                .map_err(|e| config(format!("resource `{name}`: {e}")))?,
        };
        Ok(LiftedTransforms {
            pi_gamma,
            kappa_pi: kappa_w,
            gamma_pi_plus: lift(&plus, set)?,
            routing: InternalRouting {
                measurement: meas,
                actuation: act,
            },
        })
    }

    pub fn derive_operating_point(&self, set: HarmonicIndexSet, t_kappa_pi: &ToeplitzOperator) -> Result<OperatingPoint> {
        let w_pi = series_signal(&self.operating_point, set)?;
        let w_sigma = series_signal(&self.setpoint, set)?;
        OperatingPoint::derive(self.reference.as_ref(), w_pi, w_sigma, t_kappa_pi)
    }

    /// Builds the resource HSS model at `set`.
    pub fn assemble(&self, set: HarmonicIndexSet) -> Result<CiderHss> {
        let t = self.lift_transforms(set)?;
        let internal = assemble_internal_response(&self.hardware, &self.control, &t.routing, set)?;
        if internal.w_kappa != self.reference.kappa_dim() {
            return Err(shape(format!(
                "resource `{}`: control takes {} reference channels, reference `{}` yields {}",
                self.name,
                internal.w_kappa,
                self.reference.name(),
                self.reference.kappa_dim()
            )));
        }
        let op = self.derive_operating_point(set, &t.kappa_pi)?;
        let (r_rho, r_sigma) = linearize_reference(self.reference.as_ref(), &op)?;
        let rb = build_reference_block(&r_rho, &r_sigma, &t.kappa_pi, &op)?;
        let m = assemble_cider_hss(&internal, &rb, &r_rho, &r_sigma, &t)?;

        let gamma_in = t.pi_gamma.block_cols();
        let gamma_out = t.gamma_pi_plus.block_rows();
        let hl = |dims: Vec<usize>| GroupingLayout::new(Grouping::HarmonicMajor, dims, set);
        let nm = |dims: Vec<usize>| GroupingLayout::new(Grouping::NodeMajor, dims, set);
        let sigma = self.reference.sigma_dim();
        let inputs = vec![
            InputPort {
                name: "gamma".into(),
                e: m.e_gamma,
                f: m.f_gamma,
                layout: hl(vec![gamma_in]),
                labels: vec![self.node.clone()],
            },
            InputPort {
                name: "sigma".into(),
                e: m.e_sigma,
                f: m.f_sigma,
                layout: hl(vec![sigma]),
                labels: vec![format!("{}:setpoint", self.name)],
            },
            InputPort {
                name: "o".into(),
                e: m.e_o,
                f: m.f_o,
                layout: nm(vec![internal.w_kappa, internal.w_pi, sigma]),
                labels: vec![
                    format!("{}:w_kappa", self.name),
                    format!("{}:w_pi", self.name),
                    format!("{}:w_sigma", self.name),
                ],
            },
        ];
        let model = HssModel::new(HssModelParts {
            a: m.a,
            c: m.c_gamma,
            inputs,
            state_layout: nm(vec![internal.hardware_states, internal.control_states]),
            state_labels: vec![format!("{}:hardware", self.name), format!("{}:control", self.name)],
            output_layout: hl(vec![gamma_out]),
            output_labels: vec![self.node.clone()],
        })?;
        let spec = self.clone();
        let model = model.with_generator(Arc::new(move |s| Ok(spec.assemble(s)?.model)));
        Ok(CiderHss {
            name: self.name.clone(),
            node: self.node.clone(),
            kind: self.kind,
            model,
            operating_point: op,
            internal_certificate: internal.certificate,
            r_rho,
            r_sigma,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cider::builtin::{pq_l, vf_lc, PqLParams, ThreePhase, VfLcParams};

    fn vf() -> CiderSpec {
        let p = VfLcParams {
            l: 2e-3,
            r: 0.1,
            c: 50e-6,
            kp_v: 0.05,
            ki_v: 20.0,
            kp_i: 10.0,
            ki_i: 1000.0,
            v_ref: [325.0, 0.0],
            phase: 0.0,
        };
        vf_lc("gf", "n0", &p, &ThreePhase { amplitude: 20.0, phase: -0.1, unbalance: 0.0 }).unwrap()
    }

    fn pq() -> CiderSpec {
        let p = PqLParams { l: 5e-3, r: 0.2, kp: 20.0, ki: 2000.0, p: 10e3, q: 2e3, phase: 0.0 };
        pq_l("gl", "n1", &p, &ThreePhase { amplitude: 325.0, phase: 0.05, unbalance: 0.0 }).unwrap()
    }

    /// Offsets i - k of the nonzero harmonic blocks of a harmonic-major matrix.
    fn offsets(m: &CMat, set: HarmonicIndexSet) -> std::collections::BTreeSet<i64> {
        let len = set.len();
        let (br, bc) = (m.nrows() / len, m.ncols() / len);
        let mut out = std::collections::BTreeSet::new();
        for i in 0..len {
            for k in 0..len {
                let blk = linalg::block(m, i * br, k * bc, br, bc);
                if linalg::max_abs(&blk) > 1e-12 * linalg::max_abs(m) {
                    out.insert(i as i64 - k as i64);
                }
            }
        }
        out
    }

    fn minkowski(a: &std::collections::BTreeSet<i64>, b: &std::collections::BTreeSet<i64>) -> std::collections::BTreeSet<i64> {
        a.iter().flat_map(|x| b.iter().map(move |y| x + y)).collect()
    }

    fn integrator_spec() -> CiderSpec {
        let r = |rows: &[&[f64]]| linalg::real_from_rows(rows);
        // hardware x' = w + u, y = [x | x]; control u = 2 (w_k - m)
        let hw = LtpBlock::lti("hw", r(&[&[0.0]]), r(&[&[1.0, 1.0]]), r(&[&[1.0], &[1.0]]), r(&[&[0.0, 0.0], &[0.0, 0.0]]), 1, 1).unwrap();
        let ctl = LtpBlock::lti("ctl", faer::Mat::zeros(0, 0), faer::Mat::zeros(0, 2), faer::Mat::zeros(1, 0), r(&[&[2.0, -2.0]]), 1, 0).unwrap();
        CiderSpec {
            name: "toy".into(),
            node: "n".into(),
            kind: CiderKind::Following,
            hardware: vec![hw],
            control: vec![ctl],
            transforms: CiderTransforms::default(),
            reference: Arc::new(crate::cider::LinearReference::setpoint_passthrough(1, 1)),
            setpoint: FourierSeries::constant(linalg::from_rows(&[&[C64::new(0.5, 0.0)]])),
            operating_point: FourierSeries::zero(1, 1),
        }
    }

    #[test]
    fn identity_transforms_collapse_the_formulas() {
        let set = HarmonicIndexSet::new(2, 50.0).unwrap();
        let spec = integrator_spec();
        let t = spec.lift_transforms(set).unwrap();
        let internal = assemble_internal_response(&spec.hardware, &spec.control, &t.routing, set).unwrap();
        let h = spec.assemble(set).unwrap();
        let m = &h.model;
        assert!(linalg::is_zero(h.r_rho.matrix()));
        assert!(linalg::max_abs_diff(&m.port("gamma").unwrap().e, &internal.e_pi) == 0.0);
        let e_sigma = linalg::mul(&internal.e_kappa, h.r_sigma.matrix()).unwrap();
        assert!(linalg::max_abs_diff(&m.port("sigma").unwrap().e, &e_sigma) == 0.0);
        let keep: Vec<usize> = (0..set.len()).collect();
        assert!(linalg::max_abs_diff(m.c(), &linalg::select_rows(&internal.c, &keep)) == 0.0);
        // closed loop x' = -2 x
        assert!(linalg::max_abs_diff(m.a(), &linalg::scaled(&linalg::identity(5), C64::new(-2.0, 0.0))) == 0.0);
    }

    #[test]
    fn zero_internal_feedthrough_gives_zero_f() {
        let h = vf().assemble(HarmonicIndexSet::new(2, 50.0).unwrap()).unwrap();
        for p in ["gamma", "sigma", "o"] {
            assert!(linalg::is_zero(&h.model.port(p).unwrap().f), "{p}");
        }
    }

    #[test]
    fn reassembly_is_bit_identical() {
        let set = HarmonicIndexSet::new(3, 50.0).unwrap();
        let (x, y) = (pq().assemble(set).unwrap(), pq().assemble(set).unwrap());
        assert!(linalg::bit_equal(x.model.a(), y.model.a()));
        assert!(linalg::bit_equal(x.model.c(), y.model.c()));
        for (p, q) in x.model.inputs().iter().zip(y.model.inputs()) {
            assert!(linalg::bit_equal(&p.e, &q.e) && linalg::bit_equal(&p.f, &q.f));
        }
    }

    #[test]
    fn following_gamma_offsets_follow_factor_offsets() {
        let set = HarmonicIndexSet::new(5, 50.0).unwrap();
        let mut spec = pq();
        spec.operating_point = ThreePhase { amplitude: 325.0, phase: 0.05, unbalance: 0.05 }.series();
        let t = spec.lift_transforms(set).unwrap();
        let internal = assemble_internal_response(&spec.hardware, &spec.control, &t.routing, set).unwrap();
        let h = spec.assemble(set).unwrap();
        let r_rho = offsets(h.r_rho.matrix(), set);
        assert!(r_rho.contains(&2) && !r_rho.contains(&1));
        let t_pg = offsets(t.pi_gamma.matrix(), set);
        let t_kp = offsets(t.kappa_pi.matrix(), set);
        let predicted: std::collections::BTreeSet<i64> = minkowski(&offsets(&internal.e_pi, set), &t_pg)
            .union(&minkowski(&minkowski(&minkowski(&offsets(&internal.e_kappa, set), &r_rho), &t_kp), &t_pg))
            .copied()
            .collect();
        let got = offsets(&h.model.port("gamma").unwrap().e, set);
        assert!(!got.is_empty());
        assert!(got.is_subset(&predicted), "{got:?} vs {predicted:?}");
    }

    #[test]
    fn non_square_output_transform_without_inverse_is_rejected() {
        let mut spec = integrator_spec();
        // one hardware output channel carrying two gamma channels
        spec.transforms.gamma_pi = TransformSpec::Custom(FourierSeries::constant(linalg::from_rows(&[&[
            C64::new(1.0, 0.0),
            C64::new(2.0, 0.0),
        ]])));
        let err = spec.assemble(HarmonicIndexSet::new(1, 50.0).unwrap()).unwrap_err();
        assert_eq!(err.kind(), "config");
    }

    #[test]
    fn reference_block_reproduces_operating_point() {
        let set = HarmonicIndexSet::new(4, 50.0).unwrap();
        let mut spec = pq();
        spec.operating_point = ThreePhase { amplitude: 325.0, phase: 0.05, unbalance: 0.05 }.series();
        let h = spec.assemble(set).unwrap();
        let t = spec.lift_transforms(set).unwrap();
        let rb = build_reference_block(&h.r_rho, &h.r_sigma, &t.kappa_pi, &h.operating_point).unwrap();
        let op = &h.operating_point;
        let mul = |a: &CMat, b: &CMat| linalg::mul(a, b).unwrap();
        let w_pi = op.w_pi.to_column();
        let back = &(&mul(&rb.r_o, &rb.w_o) + &mul(h.r_rho.matrix(), &mul(t.kappa_pi.matrix(), &w_pi)))
            + &mul(h.r_sigma.matrix(), &op.w_sigma.to_column());
        let scale = linalg::max_abs(&op.w_kappa.to_column());
        assert!(linalg::max_abs_diff(&back, &op.w_kappa.to_column()) <= 1e-8 * scale.max(1.0));
        assert!(op.residual(spec.reference.as_ref()).unwrap() <= 1e-8);
    }
}
