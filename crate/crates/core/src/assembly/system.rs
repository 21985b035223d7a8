//! Resource stacking, the open-loop power system and its closure through the
//! resource/grid interconnection.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::feedback::{close_feedback, FeedbackProblem, WellPosedness};
use crate::cider::{CiderHss, CiderKind, CiderSpec, OperatingPoint};
use crate::error::{config, HssError, Result};
use crate::exec::{self, Execution};
use crate::grid::{build_grid_state_space, lift_grid_to_hss, GridTopology, NodeKind};
use crate::harmonic::{Grouping, GroupingLayout, HarmonicIndexSet};
use crate::linalg::{self, CMat};
use crate::model::{HssModel, HssModelParts, InputPort};

/// Block-diagonal union of models in node-major layout. Ports are matched by
/// name; a model without a port contributes zero columns to it.
pub fn stack_models(models: &[&HssModel], ports: &[&str]) -> Result<HssModel> {
    let first = models.first().ok_or_else(|| config("nothing to stack"))?;
    let set = first.index_set();
    let mut nm = Vec::with_capacity(models.len());
    for m in models {
        if !m.index_set().same_as(&set) {
            return Err(config(format!(
                "models disagree on the harmonic index set (hmax {} at {} Hz vs hmax {} at {} Hz)",
                set.hmax(),
                set.f1(),
                m.index_set().hmax(),
                m.index_set().f1()
            )));
        }
        nm.push(m.with_ordering(Grouping::NodeMajor)?);
    }
    let concat = |ls: Vec<&GroupingLayout>| GroupingLayout::concat(&ls);
    let labels = |f: &dyn Fn(&HssModel) -> Vec<String>| nm.iter().flat_map(f).collect::<Vec<_>>();
    let mut inputs = Vec::new();
    for name in ports {
        if !nm.iter().any(|m| m.input(name).is_some()) {
            continue;
        }
        let mut es = Vec::new();
        let mut fs = Vec::new();
        let mut layouts = Vec::new();
        let mut port_labels = Vec::new();
        for m in &nm {
            match m.input(name) {
                Some(p) => {
                    es.push(p.e.clone());
                    fs.push(p.f.clone());
                    layouts.push(p.layout.clone());
                    port_labels.extend(p.labels.iter().cloned());
                }
                None => {
                    es.push(linalg::zeros(m.states(), 0));
                    fs.push(linalg::zeros(m.outputs(), 0));
                }
            }
        }
        inputs.push(InputPort {
            name: (*name).into(),
            e: linalg::block_diag(&es.iter().collect::<Vec<_>>()),
            f: linalg::block_diag(&fs.iter().collect::<Vec<_>>()),
            layout: concat(layouts.iter().collect())?,
            labels: port_labels,
        });
    }
    HssModel::new(HssModelParts {
        a: linalg::block_diag(&nm.iter().map(|m| m.a()).collect::<Vec<_>>()),
        c: linalg::block_diag(&nm.iter().map(|m| m.c()).collect::<Vec<_>>()),
        inputs,
        state_layout: concat(nm.iter().map(|m| m.state_layout()).collect())?,
        state_labels: labels(&|m| m.state_labels().to_vec()),
        output_layout: concat(nm.iter().map(|m| m.output_layout()).collect())?,
        output_labels: labels(&|m| m.output_labels().to_vec()),
    })
}

/// Stacked resources Q, forming ones first.
#[derive(Clone, Debug)]
pub struct ResourceStack {
    pub model: HssModel,
    pub names: Vec<String>,
    pub nodes: Vec<String>,
    /// State count (all orders) of every resource.
    pub state_dims: Vec<usize>,
    /// gamma-port width (all orders) of every resource.
    pub port_dims: Vec<usize>,
}

pub fn stack_resources(ciders: &[CiderHss]) -> Result<ResourceStack> {
    if let Some(w) = ciders.windows(2).find(|w| w[0].kind == CiderKind::Following && w[1].kind == CiderKind::Forming) {
        return Err(config(format!(
            "resources must list forming before following ones; `{}` follows `{}`",
            w[1].name, w[0].name
        )));
    }
    let models: Vec<&HssModel> = ciders.iter().map(|c| &c.model).collect();
    Ok(ResourceStack {
        model: stack_models(&models, &["gamma", "sigma", "o"])?,
        names: ciders.iter().map(|c| c.name.clone()).collect(),
        nodes: ciders.iter().map(|c| c.node.clone()).collect(),
        state_dims: ciders.iter().map(|c| c.model.states()).collect(),
        port_dims: ciders.iter().map(|c| c.model.port("gamma").map(|p| p.dim()).unwrap_or(0)).collect(),
    })
}

/// Open-loop power system: states (X_Q, X_G), gamma port (W_Q, W_G), outputs
/// (Y_Q, Y_G).
#[derive(Clone, Debug)]
pub struct OpenLoopSystem {
    pub model: HssModel,
    /// Loop-relevant block sizes: states, gamma inputs, outputs, each split
    /// per resource followed by the grid.
    pub state_blocks: Vec<usize>,
    pub gamma_blocks: Vec<usize>,
    pub output_blocks: Vec<usize>,
    /// Width of Y_Q (equal to the width of W_G).
    pub resource_outputs: usize,
}

pub fn build_open_loop(resources: &ResourceStack, grid: &HssModel) -> Result<OpenLoopSystem> {
    let q = &resources.model;
    let gp = grid.port("gamma")?;
    let q_in = q.port("gamma")?;
    // resource outputs feed the grid inputs and vice versa, node for node
    let mut problems = Vec::new();
    let (qo, gi) = (q.output_labels(), gp.labels.as_slice());
    let (qi, go) = (q_in.labels.as_slice(), grid.output_labels());
    for (want, have, what) in [(gi, qo, "grid input"), (go, qi, "grid output")] {
        let missing: Vec<&String> = want.iter().filter(|n| !have.contains(n)).collect();
        let extra: Vec<&String> = have.iter().filter(|n| !want.contains(n)).collect();
        if !missing.is_empty() || !extra.is_empty() {
            problems.push(format!(
                "{what}: nodes without a resource [{}], resources at unknown nodes [{}]",
                missing.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", "),
                extra.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", ")
            ));
        } else if want != have {
            problems.push(format!("{what}: node order [{}] differs from [{}]", want.join(", "), have.join(", ")));
        }
    }
    let dims_ok = q.output_layout().node_dims() == gp.layout.node_dims() && q_in.layout.node_dims() == grid.output_layout().node_dims();
    if problems.is_empty() && !dims_ok {
        problems.push("per-node channel counts of resources and grid differ".into());
    }
    if !problems.is_empty() {
        return Err(HssError::Wiring(problems.join("; ")));
    }
    let model = stack_models(&[q, grid], &["gamma", "sigma", "o"])?;
    let mut state_blocks = resources.state_dims.clone();
    state_blocks.push(grid.states());
    let mut gamma_blocks = resources.port_dims.clone();
    gamma_blocks.push(gp.dim());
    let len = q.index_set().len();
    let mut output_blocks: Vec<usize> = q.output_layout().node_dims().iter().map(|d| d * len).collect();
    output_blocks.push(grid.outputs());
    Ok(OpenLoopSystem {
        model,
        state_blocks,
        gamma_blocks,
        output_blocks,
        resource_outputs: q.outputs(),
    })
}

/// J = [[0, I], [I, 0]] with identity blocks of sizes `upper` and `lower`:
/// the first `upper` rows pick the last outputs.
pub fn build_interconnection(upper: usize, lower: usize) -> CMat {
    let n = upper + lower;
    let mut j = linalg::zeros(n, n);
    for i in 0..upper {
        j[(i, lower + i)] = linalg::ONE;
    }
    for i in 0..lower {
        j[(upper + i, i)] = linalg::ONE;
    }
    j
}

/// Closed power system with the sigma and o ports open.
#[derive(Clone, Debug)]
pub struct ClosedLoopSystem {
    pub model: HssModel,
    pub certificate: WellPosedness,
    /// Operating point of every resource, by name.
    pub operating_points: Vec<(String, OperatingPoint)>,
}

/// Closes the gamma port of `open` through J. The gamma port must have as
/// many inputs as the model has outputs.
pub fn close_loop(open: &OpenLoopSystem, j: &CMat) -> Result<(HssModel, WellPosedness)> {
    let m = &open.model;
    let g = m.port("gamma")?;
    if j.nrows() != g.dim() || j.ncols() != m.outputs() {
        return Err(HssError::Wiring(format!(
            "interconnection is {}x{}, the open loop has {} gamma inputs and {} outputs",
            j.nrows(),
            j.ncols(),
            g.dim(),
            m.outputs()
        )));
    }
    let others: Vec<&InputPort> = m.inputs().iter().filter(|p| p.name != "gamma").collect();
    let closed = close_feedback(&FeedbackProblem {
        a: m.a(),
        e_loop: &g.e,
        c: m.c(),
        f_loop: &g.f,
        j,
        others: others.iter().map(|p| (&p.e, &p.f)).collect(),
        loop_labels: g.labels.iter().zip(g.layout.node_dims()).map(|(l, d)| (format!("gamma:{l}"), d * m.index_set().len())).collect(),
        partitions: Some((open.state_blocks.clone(), open.gamma_blocks.clone(), open.output_blocks.clone())),
    })?;
    let inputs = others
        .iter()
        .zip(closed.e.into_iter().zip(closed.f))
        .map(|(p, (e, f))| InputPort {
            e,
            f,
            ..(*p).clone()
        })
        .collect();
    let model = HssModel::new(HssModelParts {
        a: closed.a,
        c: closed.c,
        inputs,
        state_layout: m.state_layout().clone(),
        state_labels: m.state_labels().to_vec(),
        output_layout: m.output_layout().clone(),
        output_labels: m.output_labels().to_vec(),
    })?;
    Ok((model, closed.certificate))
}

/// Every assembly stage of one power system at one truncation order.
#[derive(Clone, Debug)]
pub struct AssembledSystem {
    pub ciders: Vec<CiderHss>,
    pub grid: HssModel,
    pub open: OpenLoopSystem,
    pub closed: ClosedLoopSystem,
}

/// Checks that every node hosts exactly one resource of the matching kind and
/// returns the resources in grid node order.
pub fn order_resources<'a>(topology: &GridTopology, ciders: &'a [CiderSpec]) -> Result<Vec<&'a CiderSpec>> {
    let mut by_node: BTreeMap<&str, &CiderSpec> = BTreeMap::new();
    for c in ciders {
        let node = topology
            .node(&c.node)
            .ok_or_else(|| HssError::CrossReference(format!("resource `{}` refers to unknown node `{}`", c.name, c.node)))?;
        let expect = match c.kind {
            CiderKind::Forming => NodeKind::Forming,
            CiderKind::Following => NodeKind::Following,
        };
        if node.kind != expect {
            return Err(HssError::CrossReference(format!(
                "resource `{}` is {} but node `{}` is not",
                c.name,
                c.kind.as_str(),
                c.node
            )));
        }
        if let Some(prev) = by_node.insert(&c.node, c) {
            return Err(HssError::Wiring(format!(
                "node `{}` hosts both `{}` and `{}`",
                c.node, prev.name, c.name
            )));
        }
    }
    topology
        .ordered_ids()
        .iter()
        .map(|n| {
            by_node
                .get(n.as_str())
                .copied()
                .ok_or_else(|| HssError::Wiring(format!("node `{n}` hosts no resource")))
        })
        .collect()
}

/// Assembles resources, grid, open and closed loop at `set`. Resources are
/// assembled under `exec`.
pub fn assemble_system(
    topology: &GridTopology,
    ciders: &[CiderSpec],
    set: HarmonicIndexSet,
    exec: Execution,
) -> Result<AssembledSystem> {
    let ordered = order_resources(topology, ciders)?;
    let built = exec::map(exec, &ordered, |c| c.assemble(set));
    let ciders_hss = built.into_iter().collect::<Result<Vec<_>>>()?;
    let grid = lift_grid_to_hss(&build_grid_state_space(topology)?, set)?;
    let stack = stack_resources(&ciders_hss)?;
    let open = build_open_loop(&stack, &grid)?;
    let j = build_interconnection(stack.model.port("gamma")?.dim(), grid.port("gamma")?.dim());
    let (model, certificate) = close_loop(&open, &j)?;
    let topo = topology.clone();
    let specs: Vec<CiderSpec> = ciders.to_vec();
    let model = model.with_generator(Arc::new(move |s| {
        Ok(assemble_system(&topo, &specs, s, exec)?.closed.model)
    }));
    let operating_points = ciders_hss.iter().map(|c| (c.name.clone(), c.operating_point.clone())).collect();
    Ok(AssembledSystem {
        ciders: ciders_hss,
        grid,
        open,
        closed: ClosedLoopSystem {
            model,
            certificate,
            operating_points,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cider::builtin::{pq_l, vf_lc, PqLParams, ThreePhase, VfLcParams};
    use crate::grid::{Branch, GridNode, Shunt};
    use crate::linalg::C64;
    use faer::Mat;

    fn toy(states: usize, label: &str, set: HarmonicIndexSet) -> HssModel {
        let len = set.len();
        let n = states * len;
        let layout = |d: usize| GroupingLayout::new(Grouping::NodeMajor, vec![d], set);
        HssModel::new(HssModelParts {
            a: Mat::from_fn(n, n, |i, j| if i == j { C64::new(-1.0 - i as f64, 0.0) } else { C64::new(0.01, 0.0) }),
            c: linalg::zeros(len, n),
            inputs: vec![InputPort {
                name: "gamma".into(),
                e: linalg::zeros(n, len),
                f: linalg::zeros(len, len),
                layout: layout(1),
                labels: vec![label.into()],
            }],
            state_layout: layout(states),
            state_labels: vec![label.into()],
            output_layout: layout(1),
            output_labels: vec![label.into()],
        })
        .unwrap()
    }

    fn sorted(mut v: Vec<C64>) -> Vec<C64> {
        v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        v
    }

    #[test]
    fn stacking_one_model_is_identity() {
        let set = HarmonicIndexSet::new(1, 50.0).unwrap();
        let m = toy(2, "x", set);
        let s = stack_models(&[&m], &["gamma"]).unwrap();
        assert!(linalg::bit_equal(s.a(), m.a()));
        assert!(linalg::bit_equal(&s.port("gamma").unwrap().e, &m.port("gamma").unwrap().e));
    }

    #[test]
    fn stacked_spectrum_is_the_union() {
        let set = HarmonicIndexSet::new(1, 50.0).unwrap();
        let (p, q) = (toy(4, "p", set), toy(6, "q", set));
        let s = stack_models(&[&p, &q], &["gamma"]).unwrap();
        assert_eq!(s.states(), 30);
        let mut both = p.shifted_state_matrix().eigenvalues().unwrap();
        both.extend(q.shifted_state_matrix().eigenvalues().unwrap());
        let got = sorted(s.shifted_state_matrix().eigenvalues().unwrap());
        for (x, y) in got.iter().zip(sorted(both)) {
            assert!((x - y).norm() <= 1e-12 * y.norm().max(1.0));
        }
    }

    #[test]
    fn interconnection_swaps_and_is_an_involution() {
        let j = build_interconnection(2, 2);
        let jj = &j * &j;
        assert!(linalg::bit_equal(&jj, &linalg::identity(4)));
        let x = Mat::from_fn(4, 1, |i, _| C64::new(i as f64, 0.0));
        let y = &j * &x;
        assert_eq!([y[(0, 0)].re, y[(1, 0)].re, y[(2, 0)].re, y[(3, 0)].re], [2.0, 3.0, 0.0, 1.0]);
    }

    #[test]
    fn scalar_loop_cancels_the_pole() {
        let set = HarmonicIndexSet::new(0, 50.0).unwrap();
        let one = linalg::identity(1);
        let l = || GroupingLayout::new(Grouping::NodeMajor, vec![1], set);
        let m = HssModel::new(HssModelParts {
            a: linalg::scaled(&one, C64::new(-1.0, 0.0)),
            c: one.clone(),
            inputs: vec![InputPort { name: "gamma".into(), e: one.clone(), f: linalg::zeros(1, 1), layout: l(), labels: vec!["n".into()] }],
            state_layout: l(),
            state_labels: vec!["x".into()],
            output_layout: l(),
            output_labels: vec!["n".into()],
        })
        .unwrap();
        let open = OpenLoopSystem { model: m, state_blocks: vec![1], gamma_blocks: vec![1], output_blocks: vec![1], resource_outputs: 1 };
        let (closed, cert) = close_loop(&open, &one).unwrap();
        assert_eq!(closed.a()[(0, 0)], C64::new(0.0, 0.0));
        assert!(cert.determinant_is_one());
    }

    fn two_node() -> (GridTopology, Vec<CiderSpec>) {
        let d = |x: f64| Mat::from_fn(3, 3, |i, j| if i == j { x } else { 0.0 });
        let t = GridTopology::new(
            vec![GridNode::new("s", NodeKind::Forming), GridNode::new("r", NodeKind::Following)],
            vec![Branch::new("line", "s", "r", d(0.1), d(1e-3))],
            vec![Shunt::new("r", d(2e-5))],
        )
        .unwrap();
        let gf = vf_lc(
            "gf",
            "s",
            &VfLcParams { l: 2e-3, r: 0.1, c: 50e-6, kp_v: 0.05, ki_v: 20.0, kp_i: 10.0, ki_i: 1000.0, v_ref: [325.0, 0.0], phase: 0.0 },
            &ThreePhase { amplitude: 20.0, phase: 0.0, unbalance: 0.0 },
        )
        .unwrap();
        let gl = pq_l(
            "gl",
            "r",
            &PqLParams { l: 5e-3, r: 0.2, kp: 20.0, ki: 2000.0, p: 5e3, q: 0.0, phase: 0.0 },
            &ThreePhase { amplitude: 320.0, phase: -0.02, unbalance: 0.0 },
        )
        .unwrap();
        (t, vec![gl, gf])
    }

    #[test]
    fn two_node_system_assembles_with_unit_determinant() {
        let (t, c) = two_node();
        let set = HarmonicIndexSet::new(2, 50.0).unwrap();
        let s = assemble_system(&t, &c, set, Execution::Sequential).unwrap();
        assert_eq!(s.ciders[0].name, "gf");
        let total: usize = s.ciders.iter().map(|c| c.model.states()).sum::<usize>() + s.grid.states();
        assert_eq!(s.closed.model.states(), total);
        assert!(s.closed.certificate.determinant_is_one());
        // sigma never touches grid rows
        let sig = s.open.model.port("sigma").unwrap();
        let grid_rows = total - s.grid.states()..total;
        assert!(grid_rows.clone().all(|i| (0..sig.dim()).all(|j| sig.e[(i, j)] == linalg::ZERO)));
        let par = assemble_system(&t, &c, set, Execution::Parallel).unwrap();
        assert!(linalg::bit_equal(par.closed.model.a(), s.closed.model.a()));
    }

    #[test]
    fn unknown_node_is_a_cross_reference_error() {
        let (t, mut c) = two_node();
        c[0].node = "n9".into();
        let e = assemble_system(&t, &c, HarmonicIndexSet::new(0, 50.0).unwrap(), Execution::Sequential).unwrap_err();
        assert_eq!(e.kind(), "cross_reference");
        assert!(e.to_string().contains("n9"));
    }

    #[test]
    fn node_without_resource_is_a_wiring_error() {
        let (t, c) = two_node();
        let e = assemble_system(&t, &c[1..], HarmonicIndexSet::new(0, 50.0).unwrap(), Execution::Sequential).unwrap_err();
        assert_eq!(e.kind(), "wiring");
    }
}
