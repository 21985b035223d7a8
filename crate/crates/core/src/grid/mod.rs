//! Three-phase RLC network: topology, time-domain state space and its lift.

mod topology;

pub use topology::{Branch, GridNode, GridTopology, NodeKind, Shunt};

use std::sync::Arc;

use faer::Mat;

use crate::error::Result;
use crate::harmonic::{toeplitz_from_fourier, FourierSeries, Grouping, GroupingLayout, HarmonicIndexSet};
use crate::linalg;
use crate::model::{HssModel, HssModelParts, InputPort};

/// x' = A x + E w, y = C x + F w with x = (i_L, v_R), w = (v_S, i_R) and
/// y = (i_S, v_R). Every element contributes three phase channels.
#[derive(Clone, Debug)]
pub struct GridStateSpace {
    pub a: Mat<f64>,
    pub e: Mat<f64>,
    pub c: Mat<f64>,
    pub f: Mat<f64>,
    pub branches: Vec<String>,
    pub forming: Vec<String>,
    pub following: Vec<String>,
}

fn block_diag(parts: &[&Mat<f64>]) -> Mat<f64> {
    let n: usize = parts.iter().map(|m| m.nrows()).sum();
    let mut out = Mat::zeros(n, n);
    let mut o = 0;
    for m in parts {
        let k = m.nrows();
        out.as_mut().submatrix_mut(o, o, k, k).copy_from(m.as_ref());
        o += k;
    }
    out
}

fn inverse(m: &Mat<f64>) -> Mat<f64> {
    use faer::linalg::solvers::Solve;
    // SPD checked on construction
    m.llt(faer::Side::Lower).expect("validated SPD").solve(Mat::<f64>::identity(m.nrows(), m.nrows()))
}

/// Incidence columns of the given nodes, +1 at the from-node, -1 at the
/// to-node, expanded per phase.
fn incidence(topology: &GridTopology, nodes: &[String]) -> Mat<f64> {
    let br = topology.branches();
    Mat::from_fn(3 * br.len(), 3 * nodes.len(), |i, j| {
        if i % 3 != j % 3 {
            return 0.0;
        }
        let (b, n) = (&br[i / 3], &nodes[j / 3]);
        if &b.from == n {
            1.0
        } else if &b.to == n {
            -1.0
        } else {
            0.0
        }
    })
}

pub fn build_grid_state_space(topology: &GridTopology) -> Result<GridStateSpace> {
    let forming = topology.forming_ids();
    let following = topology.following_ids();
    let br = topology.branches();
    let nl = 3 * br.len();
    let nr = 3 * following.len();
    let ns = 3 * forming.len();
    let l_inv = inverse(&block_diag(&br.iter().map(|b| &b.l).collect::<Vec<_>>()));
    let r = block_diag(&br.iter().map(|b| &b.r).collect::<Vec<_>>());
    let caps: Vec<&Mat<f64>> = following.iter().map(|n| &topology.shunt(n).expect("validated shunt").c).collect();
    let c_inv = inverse(&block_diag(&caps));
    let a_ls = incidence(topology, &forming);
    let a_lr = incidence(topology, &following);

    let mut a = Mat::zeros(nl + nr, nl + nr);
    a.as_mut().submatrix_mut(0, 0, nl, nl).copy_from(-(&l_inv * &r));
    a.as_mut().submatrix_mut(0, nl, nl, nr).copy_from(&l_inv * &a_lr);
    a.as_mut().submatrix_mut(nl, 0, nr, nl).copy_from(-(&c_inv * a_lr.transpose()));
    let mut e = Mat::zeros(nl + nr, ns + nr);
    e.as_mut().submatrix_mut(0, 0, nl, ns).copy_from(&l_inv * &a_ls);
    e.as_mut().submatrix_mut(nl, ns, nr, nr).copy_from(&c_inv);
    let mut c = Mat::zeros(ns + nr, nl + nr);
    c.as_mut().submatrix_mut(0, 0, ns, nl).copy_from(a_ls.transpose());
    c.as_mut().submatrix_mut(ns, nl, nr, nr).copy_from(Mat::<f64>::identity(nr, nr));
    Ok(GridStateSpace {
        a,
        e,
        c,
        f: Mat::zeros(ns + nr, ns + nr),
        branches: br.iter().map(|b| b.id.clone()).collect(),
        forming,
        following,
    })
}

/// DC-only lift, regrouped node-major: states per branch then per following
/// node, ports per node in the order (S, R).
pub fn lift_grid_to_hss(gss: &GridStateSpace, set: HarmonicIndexSet) -> Result<HssModel> {
    let lift = |m: &Mat<f64>| toeplitz_from_fourier(&FourierSeries::constant_real(m), set).map(|t| t.matrix().clone());
    let nodes: Vec<String> = gss.forming.iter().chain(&gss.following).cloned().collect();
    let hm = |groups: usize| GroupingLayout::new(Grouping::HarmonicMajor, vec![3; groups], set);
    let state_labels = gss
        .branches
        .iter()
        .map(|b| format!("grid:i:{b}"))
        .chain(gss.following.iter().map(|n| format!("grid:v:{n}")))
        .collect::<Vec<_>>();
    let model = HssModel::new(HssModelParts {
        a: lift(&gss.a)?,
        c: lift(&gss.c)?,
        inputs: vec![InputPort {
            name: "gamma".into(),
            e: lift(&gss.e)?,
            f: linalg::zeros(gss.f.nrows() * set.len(), gss.f.ncols() * set.len()),
            layout: hm(nodes.len()),
            labels: nodes.clone(),
        }],
        state_layout: hm(state_labels.len()),
        state_labels,
        output_layout: hm(nodes.len()),
        output_labels: nodes,
    })?
    .with_ordering(Grouping::NodeMajor)?;
    let src = gss.clone();
    Ok(model.with_generator(Arc::new(move |s| lift_grid_to_hss(&src, s))))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag3(x: f64) -> Mat<f64> {
        Mat::from_fn(3, 3, |i, j| if i == j { x } else { 0.0 })
    }

    fn single_branch(r: f64, l: f64, c: f64) -> GridTopology {
        GridTopology::new(
            vec![GridNode::new("s", NodeKind::Forming), GridNode::new("r", NodeKind::Following)],
            vec![Branch::new("l1", "s", "r", diag3(r), diag3(l))],
            vec![Shunt::new("r", diag3(c))],
        )
        .unwrap()
    }

    #[test]
    fn single_branch_blocks() {
        let (r, l, c) = (0.2, 1e-3, 2e-5);
        let g = build_grid_state_space(&single_branch(r, l, c)).unwrap();
        assert_eq!((g.a.nrows(), g.a.ncols()), (6, 6));
        for i in 0..3 {
            for j in 0..3 {
                let d = if i == j { 1.0 } else { 0.0 };
                assert!((g.a[(i, j)] + d * r / l).abs() < 1e-9);
                assert!((g.a[(i, 3 + j)] + d / l).abs() < 1e-9);
                assert!((g.a[(3 + i, j)] - d / c).abs() < 1e-6);
                assert_eq!(g.a[(3 + i, 3 + j)], 0.0);
            }
        }
        assert!(g.f.col_iter().all(|col| col.iter().all(|x| x.to_bits() == 0)));
    }

    #[test]
    fn forming_output_is_transposed_incidence() {
        let g = build_grid_state_space(&single_branch(0.1, 1e-3, 1e-5)).unwrap();
        for i in 0..3 {
            for j in 0..6 {
                let expect = g.e[(j, i)] * 1e-3; // L^-1 A_{L|S} with L = 1e-3 I
                if j < 3 {
                    assert!((g.c[(i, j)] - expect).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn series_chain_is_passive() {
        let t = GridTopology::new(
            vec![
                GridNode::new("s", NodeKind::Forming),
                GridNode::new("m", NodeKind::Following),
                GridNode::new("r", NodeKind::Following),
            ],
            vec![
                Branch::new("a", "s", "m", diag3(0.1), diag3(1e-3)),
                Branch::new("b", "m", "r", diag3(0.3), diag3(2e-3)),
            ],
            vec![Shunt::new("m", diag3(1e-5)), Shunt::new("r", diag3(3e-5))],
        )
        .unwrap();
        let g = build_grid_state_space(&t).unwrap();
        let ev = g.a.eigenvalues().unwrap();
        assert!(ev.iter().all(|z| z.re <= 1e-9));
    }

    #[test]
    fn lift_at_second_order() {
        let set = HarmonicIndexSet::new(2, 50.0).unwrap();
        let g = build_grid_state_space(&single_branch(0.2, 1e-3, 2e-5)).unwrap();
        let m = lift_grid_to_hss(&g, set).unwrap();
        assert_eq!(m.states(), 30);
        assert!(linalg::is_zero(&m.port("gamma").unwrap().f));
        // back to harmonic-major it is block diagonal with five copies
        let hm = m.with_ordering(Grouping::HarmonicMajor).unwrap();
        for p in 0..5 {
            for q in 0..5 {
                let blk = linalg::block(hm.a(), 6 * p, 6 * q, 6, 6);
                if p == q {
                    assert!(linalg::max_abs_diff(&blk, &linalg::from_real(g.a.as_ref())) == 0.0);
                } else {
                    assert!(linalg::is_zero(&blk));
                }
            }
        }
        assert_eq!(m.state_label(0).0, "grid:i:l1");
        assert_eq!(m.state_label(29).0, "grid:v:r");
    }

    #[test]
    fn lift_at_zero_order_keeps_matrices() {
        let g = build_grid_state_space(&single_branch(0.2, 1e-3, 2e-5)).unwrap();
        let m = lift_grid_to_hss(&g, HarmonicIndexSet::new(0, 50.0).unwrap()).unwrap();
        assert!(linalg::max_abs_diff(m.a(), &linalg::from_real(g.a.as_ref())) == 0.0);
        assert!(linalg::max_abs_diff(m.c(), &linalg::from_real(g.c.as_ref())) == 0.0);
    }
}
