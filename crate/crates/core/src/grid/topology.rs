use std::collections::{BTreeMap, VecDeque};

use faer::Mat;

use crate::error::{config, HssError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeKind {
    Forming,
    Following,
}

#[derive(Clone, Debug)]
pub struct GridNode {
    pub id: String,
    pub kind: NodeKind,
}

impl GridNode {
    pub fn new(id: impl Into<String>, kind: NodeKind) -> Self {
        GridNode { id: id.into(), kind }
    }
}

/// Lumped series R-L element; positive current flows from `from` to `to`.
#[derive(Clone, Debug)]
pub struct Branch {
    pub id: String,
    pub from: String,
    pub to: String,
    pub r: Mat<f64>,
    pub l: Mat<f64>,
}

impl Branch {
    pub fn new(id: impl Into<String>, from: impl Into<String>, to: impl Into<String>, r: Mat<f64>, l: Mat<f64>) -> Self {
        Branch {
            id: id.into(),
            from: from.into(),
            to: to.into(),
            r,
            l,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Shunt {
    pub node: String,
    pub c: Mat<f64>,
}

impl Shunt {
    pub fn new(node: impl Into<String>, c: Mat<f64>) -> Self {
        Shunt { node: node.into(), c }
    }
}

/// Validated network. Shunts at forming nodes are accepted and ignored.
#[derive(Clone, Debug)]
pub struct GridTopology {
    nodes: Vec<GridNode>,
    branches: Vec<Branch>,
    shunts: Vec<Shunt>,
}

fn physical(msg: String) -> HssError {
    HssError::PhysicalParameter(msg)
}

fn topology(msg: String) -> HssError {
    HssError::Topology(msg)
}

fn check_symmetric(m: &Mat<f64>, what: &str) -> Result<()> {
    if m.nrows() != 3 || m.ncols() != 3 {
        return Err(physical(format!("{what} must be 3x3, got {}x{}", m.nrows(), m.ncols())));
    }
    let scale = m.col_iter().flat_map(|c| c.iter().map(|x| x.abs()).collect::<Vec<_>>()).fold(0.0, f64::max);
    for i in 0..3 {
        for j in 0..3 {
            if !m[(i, j)].is_finite() {
                return Err(physical(format!("{what} has a non-finite entry")));
            }
            if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 * scale {
                return Err(physical(format!("{what} is not symmetric")));
            }
        }
    }
    Ok(())
}

fn check_spd(m: &Mat<f64>, what: &str) -> Result<()> {
    check_symmetric(m, what)?;
    if m.llt(faer::Side::Lower).is_err() {
        return Err(physical(format!("{what} is not positive definite")));
    }
    Ok(())
}

fn check_psd(m: &Mat<f64>, what: &str) -> Result<()> {
    check_symmetric(m, what)?;
    let ev = m
        .self_adjoint_eigenvalues(faer::Side::Lower)
        .map_err(|_| physical(format!("{what}: eigenvalues did not converge")))?;
    let top = ev.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if ev.iter().any(|&x| x < -1e-12 * top) {
        return Err(physical(format!("{what} is not positive semidefinite")));
    }
    Ok(())
}

impl GridTopology {
    pub fn new(nodes: Vec<GridNode>, branches: Vec<Branch>, shunts: Vec<Shunt>) -> Result<Self> {
        let mut index = BTreeMap::new();
        for (i, n) in nodes.iter().enumerate() {
            if index.insert(n.id.clone(), i).is_some() {
                return Err(topology(format!("node `{}` declared twice", n.id)));
            }
        }
        if !nodes.iter().any(|n| n.kind == NodeKind::Forming) {
            return Err(config("the grid has no forming node and thus no voltage reference"));
        }
        let mut adj = vec![Vec::new(); nodes.len()];
        let mut ids = BTreeMap::new();
        for b in &branches {
            if ids.insert(b.id.clone(), ()).is_some() {
                return Err(topology(format!("branch `{}` declared twice", b.id)));
            }
            let end = |n: &str| {
                index
                    .get(n)
                    .copied()
                    .ok_or_else(|| topology(format!("branch `{}` refers to unknown node `{n}`", b.id)))
            };
            let (f, t) = (end(&b.from)?, end(&b.to)?);
            if f == t {
                return Err(topology(format!("branch `{}` connects node `{}` to itself", b.id, b.from)));
            }
            check_spd(&b.l, &format!("inductance of branch `{}`", b.id))?;
            check_psd(&b.r, &format!("resistance of branch `{}`", b.id))?;
            adj[f].push(t);
            adj[t].push(f);
        }
        let mut seen_shunt = BTreeMap::new();
        for s in &shunts {
            let i = *index
                .get(&s.node)
                .ok_or_else(|| topology(format!("shunt refers to unknown node `{}`", s.node)))?;
            if seen_shunt.insert(i, ()).is_some() {
                return Err(topology(format!("node `{}` has more than one shunt", s.node)));
            }
            check_spd(&s.c, &format!("shunt capacitance at node `{}`", s.node))?;
        }
        for (i, n) in nodes.iter().enumerate() {
            if n.kind == NodeKind::Following && !seen_shunt.contains_key(&i) {
                return Err(physical(format!("following node `{}` has no shunt capacitance", n.id)));
            }
        }
        let mut reached = vec![false; nodes.len()];
        let mut queue = VecDeque::from([0]);
        reached[0] = true;
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if !reached[w] {
                    reached[w] = true;
                    queue.push_back(w);
                }
            }
        }
        let cut: Vec<&str> = nodes.iter().zip(&reached).filter(|(_, r)| !**r).map(|(n, _)| n.id.as_str()).collect();
        if !cut.is_empty() {
            return Err(topology(format!("grid is disconnected; unreachable nodes: {}", cut.join(", "))));
        }
        Ok(GridTopology { nodes, branches, shunts })
    }

    pub fn nodes(&self) -> &[GridNode] {
        &self.nodes
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn shunts(&self) -> &[Shunt] {
        &self.shunts
    }

    pub fn node(&self, id: &str) -> Option<&GridNode> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn shunt(&self, node: &str) -> Option<&Shunt> {
        self.shunts.iter().find(|s| s.node == node)
    }

    fn ids(&self, kind: NodeKind) -> Vec<String> {
        self.nodes.iter().filter(|n| n.kind == kind).map(|n| n.id.clone()).collect()
    }

    pub fn forming_ids(&self) -> Vec<String> {
        self.ids(NodeKind::Forming)
    }

    pub fn following_ids(&self) -> Vec<String> {
        self.ids(NodeKind::Following)
    }

    /// Forming nodes first, then following nodes, each in declaration order.
    pub fn ordered_ids(&self) -> Vec<String> {
        let mut v = self.forming_ids();
        v.extend(self.following_ids());
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(x: f64) -> Mat<f64> {
        Mat::from_fn(3, 3, |i, j| if i == j { x } else { 0.0 })
    }

    fn nodes() -> Vec<GridNode> {
        vec![GridNode::new("s", NodeKind::Forming), GridNode::new("r", NodeKind::Following)]
    }

    #[test]
    fn negative_inductance_names_branch() {
        let e = GridTopology::new(nodes(), vec![Branch::new("b7", "s", "r", d(0.1), d(-1e-3))], vec![Shunt::new("r", d(1e-5))])
            .unwrap_err();
        assert_eq!(e.kind(), "physical_parameter");
        assert!(e.to_string().contains("b7"));
    }

    #[test]
    fn disconnected_node_is_reported() {
        let mut n = nodes();
        n.push(GridNode::new("x", NodeKind::Following));
        let e = GridTopology::new(
            n,
            vec![Branch::new("b", "s", "r", d(0.1), d(1e-3))],
            vec![Shunt::new("r", d(1e-5)), Shunt::new("x", d(1e-5))],
        )
        .unwrap_err();
        assert_eq!(e.kind(), "topology");
        assert!(e.to_string().contains('x'));
    }

    #[test]
    fn no_forming_node_is_a_config_error() {
        let e = GridTopology::new(
            vec![GridNode::new("a", NodeKind::Following), GridNode::new("b", NodeKind::Following)],
            vec![Branch::new("b", "a", "b", d(0.1), d(1e-3))],
            vec![Shunt::new("a", d(1e-5)), Shunt::new("b", d(1e-5))],
        )
        .unwrap_err();
        assert_eq!(e.kind(), "config");
    }

    #[test]
    fn indefinite_resistance_rejected() {
        let mut r = d(0.1);
        r[(0, 0)] = -0.1;
        let e = GridTopology::new(nodes(), vec![Branch::new("b", "s", "r", r, d(1e-3))], vec![Shunt::new("r", d(1e-5))]).unwrap_err();
        assert_eq!(e.kind(), "physical_parameter");
    }

    #[test]
    fn zero_resistance_is_allowed() {
        assert!(GridTopology::new(nodes(), vec![Branch::new("b", "s", "r", d(0.0), d(1e-3))], vec![Shunt::new("r", d(1e-5))]).is_ok());
    }
}
