use super::block::{LiftedBlock, LtpBlock};
use crate::assembly::{close_feedback, FeedbackProblem, WellPosedness};
use crate::error::{shape, Result};
use crate::harmonic::{HarmonicIndexSet, ToeplitzOperator};
use crate::linalg::{self, CMat};

/// Transforms on the internal signal paths: measurements M_kappa =
/// T_{kappa|pi} M_pi and actuation U_pi = T_{pi|kappa} U_kappa.
#[derive(Clone, Debug)]
pub struct InternalRouting {
    pub measurement: ToeplitzOperator,
    pub actuation: ToeplitzOperator,
}

/// Closed internal loop of hardware and control over X = col(X_pi, X_kappa)
/// with disturbances W_pi, W_kappa and outputs Y = col(Y_pi, Y_kappa).
#[derive(Clone, Debug)]
pub struct InternalResponse {
    pub index_set: HarmonicIndexSet,
    pub a: CMat,
    pub e_pi: CMat,
    pub e_kappa: CMat,
    pub c: CMat,
    pub f_pi: CMat,
    pub f_kappa: CMat,
    /// Per-order channel counts.
    pub hardware_states: usize,
    pub control_states: usize,
    pub w_pi: usize,
    pub w_kappa: usize,
    pub y_pi: usize,
    pub y_kappa: usize,
    pub certificate: WellPosedness,
}

pub fn assemble_internal_response(
    hardware: &[LtpBlock],
    control: &[LtpBlock],
    routing: &InternalRouting,
    index_set: HarmonicIndexSet,
) -> Result<InternalResponse> {
    let h = LtpBlock::stack("hardware", hardware)?;
    let k = LtpBlock::stack("control", control)?;
    let (meas, act) = (&routing.measurement, &routing.actuation);
    if meas.block_cols() != h.routed_outputs() || meas.block_rows() != k.routed_inputs() {
        return Err(shape(format!(
            "measurement transform maps {} -> {} channels; hardware measures {}, control reads {}",
            meas.block_cols(),
            meas.block_rows(),
            h.routed_outputs(),
            k.routed_inputs()
        )));
    }
    if act.block_cols() != k.routed_outputs() || act.block_rows() != h.routed_inputs() {
        return Err(shape(format!(
            "actuation transform maps {} -> {} channels; control drives {}, hardware accepts {}",
            act.block_cols(),
            act.block_rows(),
            k.routed_outputs(),
            h.routed_inputs()
        )));
    }
    for t in [meas, act] {
        if !t.index_set().same_as(&index_set) {
            return Err(shape("routing transforms lifted on a different index set"));
        }
    }
    let lh = h.lift(index_set)?;
    let lk = k.lift(index_set)?;
    let set = index_set;
    let (bhw, bhu) = LiftedBlock::split_cols(&lh.b, set, h.inputs(), h.disturbance_inputs());
    let (bkw, bkm) = LiftedBlock::split_cols(&lk.b, set, k.inputs(), k.disturbance_inputs());
    let (chy, chm) = LiftedBlock::split_rows(&lh.c, set, h.outputs(), h.external_outputs());
    let (cky, cku) = LiftedBlock::split_rows(&lk.c, set, k.outputs(), k.external_outputs());
    let (dh_y, dh_m) = LiftedBlock::split_rows(&lh.d, set, h.outputs(), h.external_outputs());
    let (dh_yw, dh_yu) = LiftedBlock::split_cols(&dh_y, set, h.inputs(), h.disturbance_inputs());
    let (dh_mw, dh_mu) = LiftedBlock::split_cols(&dh_m, set, h.inputs(), h.disturbance_inputs());
    let (dk_y, dk_u) = LiftedBlock::split_rows(&lk.d, set, k.outputs(), k.external_outputs());
    let (dk_yw, dk_ym) = LiftedBlock::split_cols(&dk_y, set, k.inputs(), k.disturbance_inputs());
    let (dk_uw, dk_um) = LiftedBlock::split_cols(&dk_u, set, k.inputs(), k.disturbance_inputs());

    let nxh = lh.a.nrows();
    let nxk = lk.a.nrows();
    let z = linalg::zeros;
    let a = linalg::block_diag(&[&lh.a, &lk.a]);
    let e_loop = linalg::block_diag(&[&bhu, &bkm]);
    let e_pi = linalg::vstack(&[&bhw, &z(nxk, bhw.ncols())])?;
    let e_kappa = linalg::vstack(&[&z(nxh, bkw.ncols()), &bkw])?;
    let c = linalg::vstack(&[
        &linalg::hstack(&[&chy, &z(chy.nrows(), nxk)])?,
        &linalg::hstack(&[&z(cky.nrows(), nxh), &cky])?,
        &linalg::hstack(&[&chm, &z(chm.nrows(), nxk)])?,
        &linalg::hstack(&[&z(cku.nrows(), nxh), &cku])?,
    ])?;
    let (nu, nm) = (bhu.ncols(), bkm.ncols());
    let f_loop = linalg::vstack(&[
        &linalg::hstack(&[&dh_yu, &z(dh_yu.nrows(), nm)])?,
        &linalg::hstack(&[&z(dk_ym.nrows(), nu), &dk_ym])?,
        &linalg::hstack(&[&dh_mu, &z(dh_mu.nrows(), nm)])?,
        &linalg::hstack(&[&z(dk_um.nrows(), nu), &dk_um])?,
    ])?;
    let f_pi = linalg::vstack(&[&dh_yw, &z(dk_yw.nrows(), dh_yw.ncols()), &dh_mw, &z(dk_uw.nrows(), dh_yw.ncols())])?;
    let f_kappa = linalg::vstack(&[&z(dh_yw.nrows(), dk_yw.ncols()), &dk_yw, &z(dh_mw.nrows(), dk_yw.ncols()), &dk_uw])?;
    let (ny_h, ny_k, nm_h, nu_k) = (chy.nrows(), cky.nrows(), chm.nrows(), cku.nrows());
    let mut j = z(nu + nm, ny_h + ny_k + nm_h + nu_k);
    linalg::put(&mut j, 0, ny_h + ny_k + nm_h, act.matrix());
    linalg::put(&mut j, nu, ny_h + ny_k, meas.matrix());

    let closed = close_feedback(&FeedbackProblem {
        a: &a,
        e_loop: &e_loop,
        c: &c,
        f_loop: &f_loop,
        j: &j,
        others: vec![(&e_pi, &f_pi), (&e_kappa, &f_kappa)],
        loop_labels: vec![("actuation".into(), nu), ("measurement".into(), nm)],
        partitions: None,
    })?;
    let keep: Vec<usize> = (0..ny_h + ny_k).collect();
    Ok(InternalResponse {
        index_set,
        a: closed.a,
        e_pi: closed.e[0].clone(),
        e_kappa: closed.e[1].clone(),
        c: linalg::select_rows(&closed.c, &keep),
        f_pi: linalg::select_rows(&closed.f[0], &keep),
        f_kappa: linalg::select_rows(&closed.f[1], &keep),
        hardware_states: h.states(),
        control_states: k.states(),
        w_pi: h.disturbance_inputs(),
        w_kappa: k.disturbance_inputs(),
        y_pi: h.external_outputs(),
        y_kappa: k.external_outputs(),
        certificate: closed.certificate,
    })
}
