//! The universal HSS container shared by resources, the grid and the
//! assembled system.

use std::fmt;
use std::sync::Arc;

use crate::error::{config, shape, Result};
use crate::harmonic::{Grouping, GroupingLayout, HarmonicIndexSet};
use crate::linalg::{self, CMat, C64};

/// One disturbance port: its input matrix E, feedthrough F and layout.
#[derive(Clone, Debug)]
pub struct InputPort {
    pub name: String,
    pub e: CMat,
    pub f: CMat,
    pub layout: GroupingLayout,
    /// One label per layout group.
    pub labels: Vec<String>,
}

impl InputPort {
    pub fn dim(&self) -> usize {
        self.e.ncols()
    }
}

/// Rebuilds a model at another truncation order from retained source data.
pub type Generator = Arc<dyn Fn(HarmonicIndexSet) -> Result<HssModel> + Send + Sync>;

/// Psi X = A X + sum_k E_k W_k, Y = C X + sum_k F_k W_k over a harmonic index
/// set. The frequency shift Omega is implied by the state layout.
#[derive(Clone)]
pub struct HssModel {
    index_set: HarmonicIndexSet,
    a: CMat,
    c: CMat,
    inputs: Vec<InputPort>,
    state_layout: GroupingLayout,
    state_labels: Vec<String>,
    output_layout: GroupingLayout,
    output_labels: Vec<String>,
    generator: Option<Generator>,
}

impl fmt::Debug for HssModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HssModel")
            .field("hmax", &self.index_set.hmax())
            .field("f1", &self.index_set.f1())
            .field("states", &self.a.nrows())
            .field("outputs", &self.c.nrows())
            .field(
                "inputs",
                &self.inputs.iter().map(|p| (&p.name, p.dim())).collect::<Vec<_>>(),
            )
            .finish()
    }
}

pub struct HssModelParts {
    pub a: CMat,
    pub c: CMat,
    pub inputs: Vec<InputPort>,
    pub state_layout: GroupingLayout,
    pub state_labels: Vec<String>,
    pub output_layout: GroupingLayout,
    pub output_labels: Vec<String>,
}

impl HssModel {
    pub fn new(parts: HssModelParts) -> Result<Self> {
        let HssModelParts {
            a,
            c,
            inputs,
            state_layout,
            state_labels,
            output_layout,
            output_labels,
        } = parts;
        let index_set = state_layout.index_set();
        let n = a.nrows();
        if a.ncols() != n {
            return Err(shape(format!("state matrix is {}x{}", n, a.ncols())));
        }
        if state_layout.total_dim() != n {
            return Err(shape(format!(
                "state layout describes {} states, A has {n}",
                state_layout.total_dim()
            )));
        }
        if c.ncols() != n || c.nrows() != output_layout.total_dim() {
            return Err(shape(format!(
                "output matrix is {}x{}, expected {}x{n}",
                c.nrows(),
                c.ncols(),
                output_layout.total_dim()
            )));
        }
        if state_labels.len() != state_layout.groups() || output_labels.len() != output_layout.groups() {
            return Err(shape("one label per layout group is required"));
        }
        for p in &inputs {
            if p.e.nrows() != n || p.f.nrows() != c.nrows() || p.e.ncols() != p.f.ncols() {
                return Err(shape(format!(
                    "port `{}`: E is {}x{}, F is {}x{}",
                    p.name,
                    p.e.nrows(),
                    p.e.ncols(),
                    p.f.nrows(),
                    p.f.ncols()
                )));
            }
            if p.layout.total_dim() != p.dim() || p.labels.len() != p.layout.groups() {
                return Err(shape(format!("port `{}` layout does not match its width", p.name)));
            }
        }
        for l in [&output_layout]
            .into_iter()
            .chain(inputs.iter().map(|p| &p.layout))
        {
            if !l.index_set().same_as(&index_set) {
                return Err(config("all layouts of a model must share one harmonic index set"));
            }
        }
        Ok(HssModel {
            index_set,
            a,
            c,
            inputs,
            state_layout,
            state_labels,
            output_layout,
            output_labels,
            generator: None,
        })
    }

    pub fn with_generator(mut self, g: Generator) -> Self {
        self.generator = Some(g);
        self
    }

    pub fn generator(&self) -> Option<&Generator> {
        self.generator.as_ref()
    }

    pub fn index_set(&self) -> HarmonicIndexSet {
        self.index_set
    }

    pub fn a(&self) -> &CMat {
        &self.a
    }

    pub fn c(&self) -> &CMat {
        &self.c
    }

    pub fn inputs(&self) -> &[InputPort] {
        &self.inputs
    }

    pub fn input(&self, name: &str) -> Option<&InputPort> {
        self.inputs.iter().find(|p| p.name == name)
    }

    pub fn port(&self, name: &str) -> Result<&InputPort> {
        self.input(name).ok_or_else(|| {
            config(format!(
                "model has no input port `{name}` (ports: {})",
                self.inputs.iter().map(|p| p.name.as_str()).collect::<Vec<_>>().join(", ")
            ))
        })
    }

    pub fn state_layout(&self) -> &GroupingLayout {
        &self.state_layout
    }

    pub fn state_labels(&self) -> &[String] {
        &self.state_labels
    }

    pub fn output_layout(&self) -> &GroupingLayout {
        &self.output_layout
    }

    pub fn output_labels(&self) -> &[String] {
        &self.output_labels
    }

    pub fn states(&self) -> usize {
        self.a.nrows()
    }

    pub fn outputs(&self) -> usize {
        self.c.nrows()
    }

    /// 2 pi f1 h for every state position.
    pub fn omega_diagonal(&self) -> Vec<f64> {
        let w = self.index_set.omega1();
        (0..self.states())
            .map(|i| w * self.state_layout.order_of(i) as f64)
            .collect()
    }

    /// A - j Omega, the matrix whose spectrum holds the HSS poles.
    pub fn shifted_state_matrix(&self) -> CMat {
        let mut m = self.a.clone();
        for (i, w) in self.omega_diagonal().into_iter().enumerate() {
            m[(i, i)] -= C64::new(0.0, w);
        }
        m
    }

    /// (group label, channel, order) of a state position.
    pub fn state_label(&self, idx: usize) -> (String, usize, i64) {
        let (g, pos, ch) = self.state_layout.locate(idx);
        (
            self.state_labels[g].clone(),
            ch,
            self.index_set.order_at(pos),
        )
    }

    /// Same model at another truncation order. Shrinking crops; growing
    /// requires a generator.
    pub fn regrid(&self, hmax: usize) -> Result<HssModel> {
        let cur = self.index_set.hmax();
        if hmax == cur {
            return Ok(self.clone());
        }
        if let Some(g) = &self.generator {
            return g(self.index_set.with_hmax(hmax));
        }
        if hmax > cur {
            return Err(config(
                "model has no retained generating data and cannot be regridded to a larger hmax",
            ));
        }
        let si = self.state_layout.crop_indices(hmax)?;
        let oi = self.output_layout.crop_indices(hmax)?;
        let crop = |m: &CMat, r: &[usize], c: &[usize]| linalg::select_cols(&linalg::select_rows(m, r), c);
        let inputs = self
            .inputs
            .iter()
            .map(|p| {
                let pi = p.layout.crop_indices(hmax)?;
                Ok(InputPort {
                    name: p.name.clone(),
                    e: crop(&p.e, &si, &pi),
                    f: crop(&p.f, &oi, &pi),
                    layout: p.layout.with_hmax(hmax),
                    labels: p.labels.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        HssModel::new(HssModelParts {
            a: crop(&self.a, &si, &si),
            c: crop(&self.c, &oi, &si),
            inputs,
            state_layout: self.state_layout.with_hmax(hmax),
            state_labels: self.state_labels.clone(),
            output_layout: self.output_layout.with_hmax(hmax),
            output_labels: self.output_labels.clone(),
        })
    }

    /// Applies a state permutation into the given ordering (a similarity, so
    /// the spectrum is unchanged).
    pub fn with_state_ordering(&self, ordering: Grouping) -> Result<HssModel> {
        self.reordered(Some(ordering), None)
    }

    /// Permutes states, outputs and every input port into `ordering`.
    pub fn with_ordering(&self, ordering: Grouping) -> Result<HssModel> {
        self.reordered(Some(ordering), Some(ordering))
    }

    fn reordered(&self, states: Option<Grouping>, ports: Option<Grouping>) -> Result<HssModel> {
        let ident = |n: usize| (0..n).collect::<Vec<_>>();
        let (p, state_layout) = match states {
            Some(o) => (self.state_layout.permutation_to(o), self.state_layout.with_ordering(o)),
            None => (ident(self.states()), self.state_layout.clone()),
        };
        let (q, output_layout) = match ports {
            Some(o) => (self.output_layout.permutation_to(o), self.output_layout.with_ordering(o)),
            None => (ident(self.outputs()), self.output_layout.clone()),
        };
        let a = faer::Mat::from_fn(p.len(), p.len(), |i, j| self.a[(p[i], p[j])]);
        let c = faer::Mat::from_fn(q.len(), p.len(), |i, j| self.c[(q[i], p[j])]);
        let inputs = self
            .inputs
            .iter()
            .map(|port| {
                let (r, layout) = match ports {
                    Some(o) => (port.layout.permutation_to(o), port.layout.with_ordering(o)),
                    None => (ident(port.dim()), port.layout.clone()),
                };
                InputPort {
                    e: faer::Mat::from_fn(p.len(), r.len(), |i, j| port.e[(p[i], r[j])]),
                    f: faer::Mat::from_fn(q.len(), r.len(), |i, j| port.f[(q[i], r[j])]),
                    layout,
                    ..port.clone()
                }
            })
            .collect();
        let mut m = HssModel::new(HssModelParts {
            a,
            c,
            inputs,
            state_layout,
            state_labels: self.state_labels.clone(),
            output_layout,
            output_labels: self.output_labels.clone(),
        })?;
        m.generator = self.generator.clone().map(|g| -> Generator {
            Arc::new(move |set| g(set)?.reordered(states, ports))
        });
        Ok(m)
    }
}

/// Lifts a constant (A, B, C, D) quadruple: every matrix becomes its
/// block-diagonal harmonic lift, single-group harmonic-major layouts.
pub fn lift_lti(
    a: &CMat,
    b: &CMat,
    c: &CMat,
    d: &CMat,
    index_set: HarmonicIndexSet,
) -> Result<HssModel> {
    let k = index_set.len();
    let layout = |n: usize| GroupingLayout::new(Grouping::HarmonicMajor, vec![n], index_set);
    HssModel::new(HssModelParts {
        a: linalg::kron_identity(k, a),
        c: linalg::kron_identity(k, c),
        inputs: vec![InputPort {
            name: "u".into(),
            e: linalg::kron_identity(k, b),
            f: linalg::kron_identity(k, d),
            layout: layout(b.ncols()),
            labels: vec!["u".into()],
        }],
        state_layout: layout(a.nrows()),
        state_labels: vec!["x".into()],
        output_layout: layout(c.nrows()),
        output_labels: vec!["y".into()],
    })
}

/// LTI lift that keeps its source matrices, so it regrids to any hmax.
pub fn lti_model(a: CMat, b: CMat, c: CMat, d: CMat, index_set: HarmonicIndexSet) -> Result<HssModel> {
    let m = lift_lti(&a, &b, &c, &d, index_set)?;
    Ok(m.with_generator(Arc::new(move |set| {
        lti_model(a.clone(), b.clone(), c.clone(), d.clone(), set)
    })))
}
