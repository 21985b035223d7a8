//! JSON scenario files: schema, validation and dotted-path overrides.
//!
//! A scenario keeps its raw JSON document next to the validated model
//! objects, so sweeps and classification can rewrite a single scalar and
//! re-validate without bespoke plumbing per parameter.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use faer::Mat;
use serde::Deserialize;
use serde_json::Value;

use crate::assembly::{assemble_system, order_resources, AssembledSystem};
use crate::cider::builtin::{pq_l, vf_lc, zero_injection, PqLParams, ThreePhase, VfLcParams};
use crate::cider::{CiderKind, CiderSpec, CiderTransforms, LinearReference, LtpBlock, PqReference, ReferencePlugin, TransformSpec};
use crate::error::{config, HssError, Result};
use crate::exec::Execution;
use crate::grid::{Branch, GridNode, GridTopology, NodeKind, Shunt};
use crate::harmonic::{FourierSeries, HarmonicIndexSet};
use crate::linalg::{CMat, C64};

pub const DEFAULT_F1: f64 = 50.0;
pub const DEFAULT_HMAX: usize = 25;

fn default_f1() -> f64 {
    DEFAULT_F1
}

fn default_hmax() -> usize {
    DEFAULT_HMAX
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemDoc {
    #[serde(default = "default_f1")]
    pub f1: f64,
    #[serde(default = "default_hmax")]
    pub hmax: usize,
}

impl Default for SystemDoc {
    fn default() -> Self {
        SystemDoc {
            f1: DEFAULT_F1,
            hmax: DEFAULT_HMAX,
        }
    }
}

/// 3x3 matrix: a scalar (times identity), nested rows or 9 row-major values.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum Mat3Doc {
    Scalar(f64),
    Rows(Vec<Vec<f64>>),
    Flat(Vec<f64>),
}

impl Mat3Doc {
    fn to_mat(&self, path: &str) -> Result<Mat<f64>> {
        match self {
            Mat3Doc::Scalar(x) => Ok(Mat::from_fn(3, 3, |i, j| if i == j { *x } else { 0.0 })),
            Mat3Doc::Rows(rows) => {
                if rows.len() != 3 || rows.iter().any(|r| r.len() != 3) {
                    return Err(schema(path, "expected a 3x3 array of rows"));
                }
                Ok(Mat::from_fn(3, 3, |i, j| rows[i][j]))
            }
            Mat3Doc::Flat(v) => {
                if v.len() != 9 {
                    return Err(schema(path, format!("expected 9 row-major entries, got {}", v.len())));
                }
                Ok(Mat::from_fn(3, 3, |i, j| v[3 * i + j]))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum NodeKindDoc {
    Forming,
    Following,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeDoc {
    pub id: String,
    pub kind: NodeKindDoc,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchDoc {
    #[serde(default)]
    pub id: Option<String>,
    pub from: String,
    pub to: String,
    pub r: Mat3Doc,
    pub l: Mat3Doc,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShuntDoc {
    pub node: String,
    pub c: Mat3Doc,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridDoc {
    pub nodes: Vec<NodeDoc>,
    #[serde(default)]
    pub branches: Vec<BranchDoc>,
    #[serde(default)]
    pub shunts: Vec<ShuntDoc>,
}

/// A real number or a `[re, im]` pair.
#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(untagged)]
pub enum EntryDoc {
    Real(f64),
    Complex([f64; 2]),
}

impl EntryDoc {
    fn value(self) -> C64 {
        match self {
            EntryDoc::Real(x) => C64::new(x, 0.0),
            EntryDoc::Complex([re, im]) => C64::new(re, im),
        }
    }
}

/// Matrix coefficients keyed by harmonic order.
pub type SeriesDoc = BTreeMap<String, Vec<Vec<EntryDoc>>>;
/// Vector coefficients keyed by harmonic order.
pub type SignalDoc = BTreeMap<String, Vec<EntryDoc>>;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockDoc {
    pub name: String,
    pub states: usize,
    pub inputs: usize,
    pub outputs: usize,
    #[serde(default)]
    pub disturbance_inputs: usize,
    #[serde(default)]
    pub external_outputs: usize,
    #[serde(default)]
    pub a: SeriesDoc,
    #[serde(default)]
    pub b: SeriesDoc,
    #[serde(default)]
    pub c: SeriesDoc,
    #[serde(default)]
    pub d: SeriesDoc,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TransformDoc {
    Identity,
    Park {
        #[serde(default)]
        phase: f64,
    },
    InversePark {
        #[serde(default)]
        phase: f64,
    },
    Custom {
        rows: usize,
        cols: usize,
        series: SeriesDoc,
    },
}

impl Default for TransformDoc {
    fn default() -> Self {
        TransformDoc::Identity
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformsDoc {
    #[serde(default)]
    pub pi_gamma: TransformDoc,
    #[serde(default)]
    pub kappa_pi: TransformDoc,
    #[serde(default)]
    pub pi_kappa: TransformDoc,
    #[serde(default)]
    pub gamma_pi: TransformDoc,
    #[serde(default)]
    pub gamma_pi_plus: Option<TransformDoc>,
}

fn default_pq_gain() -> f64 {
    2.0 / 3.0
}

fn default_min_voltage() -> f64 {
    1e-6
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ReferenceDoc {
    /// w_kappa = M_rho w_rho + M_sigma w_sigma; omitted matrices are zero.
    Linear {
        kappa: usize,
        rho: usize,
        sigma: usize,
        #[serde(default)]
        m_rho: Vec<Vec<f64>>,
        #[serde(default)]
        m_sigma: Vec<Vec<f64>>,
    },
    /// w_kappa = w_sigma.
    Passthrough { rho: usize, sigma: usize },
    Pq {
        #[serde(default = "default_pq_gain")]
        gain: f64,
        #[serde(default = "default_min_voltage")]
        min_voltage: f64,
    },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CiderDoc {
    VfLc {
        name: String,
        node: String,
        params: VfLcParams,
        /// Injected current trajectory.
        operating_point: ThreePhase,
    },
    PqL {
        name: String,
        node: String,
        params: PqLParams,
        /// Node voltage trajectory.
        operating_point: ThreePhase,
    },
    ZeroInjection {
        name: String,
        node: String,
    },
    Custom {
        name: String,
        node: String,
        kind: NodeKindDoc,
        hardware: Vec<BlockDoc>,
        #[serde(default)]
        control: Vec<BlockDoc>,
        #[serde(default)]
        transforms: TransformsDoc,
        reference: ReferenceDoc,
        #[serde(default)]
        setpoint: SignalDoc,
        operating_point: SignalDoc,
    },
}

impl CiderDoc {
    pub fn name(&self) -> &str {
        match self {
            CiderDoc::VfLc { name, .. }
            | CiderDoc::PqL { name, .. }
            | CiderDoc::ZeroInjection { name, .. }
            | CiderDoc::Custom { name, .. } => name,
        }
    }
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepDoc {
    pub name: String,
    pub path: String,
    pub values: Vec<f64>,
    #[serde(default = "default_true")]
    pub refine_on_crossing: bool,
}

fn default_epsilon_rel() -> f64 {
    1e-6
}

fn default_delta_rel() -> f64 {
    1e-4
}

fn default_boundary_share() -> f64 {
    0.5
}

fn default_factors() -> Vec<f64> {
    vec![0.8, 0.9, 1.1, 1.2]
}

fn default_port() -> String {
    "sigma".into()
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HtfDoc {
    #[serde(default = "default_port")]
    pub port: String,
    /// Evaluation points as `[re, im]`.
    #[serde(default)]
    pub points: Vec<[f64; 2]>,
}

impl Default for HtfDoc {
    fn default() -> Self {
        HtfDoc {
            port: default_port(),
            points: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisDoc {
    /// Absolute classification tolerance; relative to the spectral radius
    /// when absent.
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default = "default_epsilon_rel")]
    pub epsilon_rel: f64,
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default = "default_delta_rel")]
    pub delta_rel: f64,
    #[serde(default)]
    pub margin: f64,
    #[serde(default)]
    pub hmax_probe: Option<usize>,
    #[serde(default = "default_boundary_share")]
    pub boundary_share: f64,
    #[serde(default = "default_factors")]
    pub factors: Vec<f64>,
    #[serde(default)]
    pub control_parameters: Vec<String>,
    #[serde(default)]
    pub hardware_parameters: Vec<String>,
    #[serde(default)]
    pub htf: HtfDoc,
}

impl Default for AnalysisDoc {
    fn default() -> Self {
        AnalysisDoc {
            epsilon: None,
            epsilon_rel: default_epsilon_rel(),
            delta: None,
            delta_rel: default_delta_rel(),
            margin: 0.0,
            hmax_probe: None,
            boundary_share: default_boundary_share(),
            factors: default_factors(),
            control_parameters: Vec::new(),
            hardware_parameters: Vec::new(),
            htf: HtfDoc::default(),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub system: SystemDoc,
    pub grid: GridDoc,
    pub ciders: Vec<CiderDoc>,
    #[serde(default)]
    pub sweeps: Vec<SweepDoc>,
    #[serde(default)]
    pub analysis: AnalysisDoc,
}

/// A validated scenario.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub origin: String,
    pub doc: ScenarioDoc,
    pub index_set: HarmonicIndexSet,
    pub topology: GridTopology,
    pub ciders: Vec<CiderSpec>,
    raw: Value,
}

fn schema(path: &str, message: impl Into<String>) -> HssError {
    HssError::Schema {
        path: path.to_string(),
        message: message.into(),
    }
}

/// Reads and validates a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| HssError::Io(format!("{}: {e}", path.display())))?;
    Scenario::from_json_str(&text, &path.display().to_string())
}

impl Scenario {
    /// Parses `text`; `origin` names the source in diagnostics.
    pub fn from_json_str(text: &str, origin: &str) -> Result<Scenario> {
        let raw: Value = serde_json::from_str(text).map_err(|e| HssError::Parse {
            file: origin.to_string(),
            message: e.to_string(),
        })?;
        let de = &mut serde_json::Deserializer::from_str(text);
        let doc: ScenarioDoc = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            schema(&path, format!("{inner} ({origin})"))
        })?;
        Scenario::validate(doc, raw, origin)
    }

    pub fn from_value(raw: Value, origin: &str) -> Result<Scenario> {
        let doc: ScenarioDoc = serde_path_to_error::deserialize(raw.clone()).map_err(|e| {
            let path = e.path().to_string();
            schema(&path, e.into_inner().to_string())
        })?;
        Scenario::validate(doc, raw, origin)
    }

    fn validate(doc: ScenarioDoc, raw: Value, origin: &str) -> Result<Scenario> {
        if !(doc.system.f1.is_finite() && doc.system.f1 > 0.0) {
            return Err(schema("system.f1", "fundamental frequency must be positive"));
        }
        let index_set = HarmonicIndexSet::new(doc.system.hmax, doc.system.f1)?;
        let topology = build_topology(&doc.grid)?;
        let ciders = doc
            .ciders
            .iter()
            .enumerate()
            .map(|(i, c)| build_cider(c, &format!("ciders.{i}")))
            .collect::<Result<Vec<_>>>()?;
        let mut names: Vec<&str> = ciders.iter().map(|c| c.name.as_str()).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(schema("ciders", format!("duplicate resource name `{}`", w[0])));
        }
        order_resources(&topology, &ciders)?;
        // every resource must assemble on its own at the scenario order: this
        // catches singular operating points and ill-posed internal loops
        for c in &ciders {
            c.assemble(index_set).map_err(|e| with_context(e, &format!("resource `{}`", c.name)))?;
        }
        let s = Scenario {
            name: doc.name.clone().unwrap_or_else(|| stem(origin)),
            origin: origin.to_string(),
            doc,
            index_set,
            topology,
            ciders,
            raw,
        };
        s.check_analysis()?;
        Ok(s)
    }

    fn check_analysis(&self) -> Result<()> {
        for (i, sw) in self.doc.sweeps.iter().enumerate() {
            self.number_at(&sw.path)
                .map_err(|e| with_context(e, &format!("sweeps.{i} (`{}`)", sw.name)))?;
            if sw.values.iter().any(|v| !v.is_finite()) {
                return Err(schema(&format!("sweeps.{i}.values"), "values must be finite"));
            }
        }
        let a = &self.doc.analysis;
        for (what, list) in [("control_parameters", &a.control_parameters), ("hardware_parameters", &a.hardware_parameters)] {
            for (i, p) in list.iter().enumerate() {
                self.number_at(p).map_err(|e| with_context(e, &format!("analysis.{what}.{i}")))?;
            }
        }
        if a.epsilon.is_some_and(|e| !(e > 0.0)) || !(a.epsilon_rel > 0.0) {
            return Err(schema("analysis.epsilon", "tolerances must be positive"));
        }
        if a.delta.is_some_and(|d| !(d > 0.0)) || !(a.delta_rel > 0.0) {
            return Err(schema("analysis.delta", "tolerances must be positive"));
        }
        if let Some(p) = a.hmax_probe {
            if p < self.index_set.hmax() + 2 {
                return Err(schema(
                    "analysis.hmax_probe",
                    format!("probe order must be at least hmax + 2 = {}", self.index_set.hmax() + 2),
                ));
            }
        }
        Ok(())
    }

    pub fn raw(&self) -> &Value {
        &self.raw
    }

    pub fn hmax(&self) -> usize {
        self.index_set.hmax()
    }

    pub fn f1(&self) -> f64 {
        self.index_set.f1()
    }

    /// The numeric scalar at a dotted path such as `ciders.0.params.kp`.
    pub fn number_at(&self, path: &str) -> Result<f64> {
        let v = lookup(&self.raw, path)?;
        v.as_f64()
            .ok_or_else(|| config(format!("parameter path `{path}` does not address a number")))
    }

    /// Copy with the scalar at `path` replaced, fully re-validated.
    pub fn with_override(&self, path: &str, value: f64) -> Result<Scenario> {
        let mut raw = self.raw.clone();
        set_number(&mut raw, path, value)?;
        Scenario::from_value(raw, &self.origin).map(|mut s| {
            s.name = self.name.clone();
            s
        })
    }

    /// Copy at another truncation order.
    pub fn with_hmax(&self, hmax: usize) -> Result<Scenario> {
        let mut raw = self.raw.clone();
        let obj = raw.as_object_mut().ok_or_else(|| schema("", "scenario must be a JSON object"))?;
        let system = obj.entry("system").or_insert_with(|| Value::Object(Default::default()));
        let sys = system.as_object_mut().ok_or_else(|| schema("system", "expected an object"))?;
        sys.insert("hmax".into(), Value::from(hmax));
        Scenario::from_value(raw, &self.origin).map(|mut s| {
            s.name = self.name.clone();
            s
        })
    }

    pub fn assemble(&self, exec: Execution) -> Result<AssembledSystem> {
        assemble_system(&self.topology, &self.ciders, self.index_set, exec)
    }
}

fn stem(origin: &str) -> String {
    Path::new(origin)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scenario".into())
}

fn with_context(e: HssError, ctx: &str) -> HssError {
    match e {
        HssError::Config(m) => HssError::Config(format!("{ctx}: {m}")),
        HssError::Shape(m) => HssError::Shape(format!("{ctx}: {m}")),
        HssError::PhysicalParameter(m) => HssError::PhysicalParameter(format!("{ctx}: {m}")),
        HssError::SingularOperatingPoint(m) => HssError::SingularOperatingPoint(format!("{ctx}: {m}")),
        HssError::WellPosedness { message, condition } => HssError::WellPosedness {
            message: format!("{ctx}: {message}"),
            condition,
        },
        other => other,
    }
}

fn lookup<'a>(root: &'a Value, path: &str) -> Result<&'a Value> {
    let mut cur = root;
    for seg in path.split('.') {
        cur = match cur {
            Value::Object(m) => m.get(seg),
            Value::Array(a) => seg.parse::<usize>().ok().and_then(|i| a.get(i)),
            _ => None,
        }
        .ok_or_else(|| config(format!("parameter path `{path}` does not resolve (at `{seg}`)")))?;
    }
    Ok(cur)
}

fn set_number(root: &mut Value, path: &str, value: f64) -> Result<()> {
    let mut cur = root;
    for seg in path.split('.') {
        cur = match cur {
            Value::Object(m) => m.get_mut(seg),
            Value::Array(a) => seg.parse::<usize>().ok().and_then(move |i| a.get_mut(i)),
            _ => None,
        }
        .ok_or_else(|| config(format!("parameter path `{path}` does not resolve (at `{seg}`)")))?;
    }
    if !cur.is_number() {
        return Err(config(format!("parameter path `{path}` does not address a number")));
    }
    let integral = (cur.is_u64() || cur.is_i64()) && value.fract() == 0.0 && value.abs() < 9e15;
    *cur = if integral {
        Value::from(value as i64)
    } else {
        serde_json::Number::from_f64(value)
            .map(Value::Number)
            .ok_or_else(|| config(format!("parameter `{path}` cannot be set to {value}")))?
    };
    Ok(())
}

fn build_topology(g: &GridDoc) -> Result<GridTopology> {
    let nodes = g
        .nodes
        .iter()
        .map(|n| {
            let kind = match n.kind {
                NodeKindDoc::Forming => NodeKind::Forming,
                NodeKindDoc::Following => NodeKind::Following,
            };
            GridNode::new(n.id.clone(), kind)
        })
        .collect();
    let branches = g
        .branches
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let id = b.id.clone().unwrap_or_else(|| format!("b{i}"));
            Ok(Branch::new(
                id,
                b.from.clone(),
                b.to.clone(),
                b.r.to_mat(&format!("grid.branches.{i}.r"))?,
                b.l.to_mat(&format!("grid.branches.{i}.l"))?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let shunts = g
        .shunts
        .iter()
        .enumerate()
        .map(|(i, s)| Ok(Shunt::new(s.node.clone(), s.c.to_mat(&format!("grid.shunts.{i}.c"))?)))
        .collect::<Result<Vec<_>>>()?;
    GridTopology::new(nodes, branches, shunts)
}

fn parse_order(key: &str, path: &str) -> Result<i64> {
    key.trim()
        .parse::<i64>()
        .map_err(|_| schema(path, format!("harmonic order key `{key}` is not an integer")))
}

fn matrix_series(doc: &SeriesDoc, rows: usize, cols: usize, path: &str) -> Result<FourierSeries> {
    let mut s = FourierSeries::zero(rows, cols);
    for (key, m) in doc {
        let p = format!("{path}.{key}");
        let h = parse_order(key, &p)?;
        if m.len() != rows || m.iter().any(|r| r.len() != cols) {
            return Err(schema(&p, format!("expected a {rows}x{cols} array")));
        }
        s.insert(h, CMat::from_fn(rows, cols, |i, j| m[i][j].value()))?;
    }
    Ok(s)
}

/// Column series; coefficients at negative orders default to the conjugates
/// of the positive ones, so real signals can list h >= 0 only.
fn signal_series(doc: &SignalDoc, rows: usize, path: &str) -> Result<FourierSeries> {
    let mut coeffs: BTreeMap<i64, CMat> = BTreeMap::new();
    for (key, v) in doc {
        let p = format!("{path}.{key}");
        let h = parse_order(key, &p)?;
        if v.len() != rows {
            return Err(schema(&p, format!("expected {rows} entries, got {}", v.len())));
        }
        coeffs.insert(h, CMat::from_fn(rows, 1, |i, _| v[i].value()));
    }
    let positive: Vec<(i64, CMat)> = coeffs.iter().filter(|(h, _)| **h > 0).map(|(h, m)| (*h, m.clone())).collect();
    for (h, m) in positive {
        coeffs
            .entry(-h)
            .or_insert_with(|| CMat::from_fn(rows, 1, |i, _| m[(i, 0)].conj()));
    }
    let s = FourierSeries::from_coefficients(rows, 1, coeffs)?;
    if !s.is_conjugate_symmetric(1e-12) {
        return Err(schema(path, "coefficients at h and -h must be complex conjugates (real signal)"));
    }
    Ok(s)
}

fn build_block(b: &BlockDoc, path: &str) -> Result<LtpBlock> {
    LtpBlock::new(
        b.name.clone(),
        matrix_series(&b.a, b.states, b.states, &format!("{path}.a"))?,
        matrix_series(&b.b, b.states, b.inputs, &format!("{path}.b"))?,
        matrix_series(&b.c, b.outputs, b.states, &format!("{path}.c"))?,
        matrix_series(&b.d, b.outputs, b.inputs, &format!("{path}.d"))?,
        b.disturbance_inputs,
        b.external_outputs,
    )
    .map_err(|e| with_context(e, path))
}

fn build_transform(t: &TransformDoc, path: &str) -> Result<TransformSpec> {
    Ok(match t {
        TransformDoc::Identity => TransformSpec::Identity,
        TransformDoc::Park { phase } => TransformSpec::Park { phase: *phase },
        TransformDoc::InversePark { phase } => TransformSpec::InversePark { phase: *phase },
        TransformDoc::Custom { rows, cols, series } => {
            TransformSpec::Custom(matrix_series(series, *rows, *cols, &format!("{path}.series"))?)
        }
    })
}

fn real_rows(rows: &[Vec<f64>], r: usize, c: usize, path: &str) -> Result<Mat<f64>> {
    if rows.is_empty() {
        return Ok(Mat::zeros(r, c));
    }
    if rows.len() != r || rows.iter().any(|x| x.len() != c) {
        return Err(schema(path, format!("expected a {r}x{c} array")));
    }
    Ok(Mat::from_fn(r, c, |i, j| rows[i][j]))
}

fn build_reference(r: &ReferenceDoc, path: &str) -> Result<Arc<dyn ReferencePlugin>> {
    Ok(match r {
        ReferenceDoc::Linear {
            kappa,
            rho,
            sigma,
            m_rho,
            m_sigma,
        } => Arc::new(LinearReference::new(
            real_rows(m_rho, *kappa, *rho, &format!("{path}.m_rho"))?,
            real_rows(m_sigma, *kappa, *sigma, &format!("{path}.m_sigma"))?,
        )?),
        ReferenceDoc::Passthrough { rho, sigma } => Arc::new(LinearReference::setpoint_passthrough(*rho, *sigma)),
        ReferenceDoc::Pq { gain, min_voltage } => Arc::new(PqReference::new(*gain, *min_voltage)),
    })
}

fn build_cider(c: &CiderDoc, path: &str) -> Result<CiderSpec> {
    let ctx = |e| with_context(e, &format!("{path} (`{}`)", c.name()));
    match c {
        CiderDoc::VfLc {
            name,
            node,
            params,
            operating_point,
        } => vf_lc(name, node, params, operating_point).map_err(ctx),
        CiderDoc::PqL {
            name,
            node,
            params,
            operating_point,
        } => pq_l(name, node, params, operating_point).map_err(ctx),
        CiderDoc::ZeroInjection { name, node } => zero_injection(name, node).map_err(ctx),
        CiderDoc::Custom {
            name,
            node,
            kind,
            hardware,
            control,
            transforms,
            reference,
            setpoint,
            operating_point,
        } => {
            let hardware = hardware
                .iter()
                .enumerate()
                .map(|(i, b)| build_block(b, &format!("{path}.hardware.{i}")))
                .collect::<Result<Vec<_>>>()?;
            let control = control
                .iter()
                .enumerate()
                .map(|(i, b)| build_block(b, &format!("{path}.control.{i}")))
                .collect::<Result<Vec<_>>>()?;
            let tp = |t: &TransformDoc, f: &str| build_transform(t, &format!("{path}.transforms.{f}"));
            let transforms = CiderTransforms {
                pi_gamma: tp(&transforms.pi_gamma, "pi_gamma")?,
                kappa_pi: tp(&transforms.kappa_pi, "kappa_pi")?,
                pi_kappa: tp(&transforms.pi_kappa, "pi_kappa")?,
                gamma_pi: tp(&transforms.gamma_pi, "gamma_pi")?,
                gamma_pi_plus: transforms.gamma_pi_plus.as_ref().map(|t| tp(t, "gamma_pi_plus")).transpose()?,
            };
            let reference = build_reference(reference, &format!("{path}.reference"))?;
            let w_pi: usize = hardware.iter().map(|b| b.disturbance_inputs()).sum();
            let setpoint = signal_series(setpoint, reference.sigma_dim(), &format!("{path}.setpoint"))?;
            let operating_point = signal_series(operating_point, w_pi, &format!("{path}.operating_point"))?;
            Ok(CiderSpec {
                name: name.clone(),
                node: node.clone(),
                kind: match kind {
                    NodeKindDoc::Forming => CiderKind::Forming,
                    NodeKindDoc::Following => CiderKind::Following,
                },
                hardware,
                control,
                transforms,
                reference,
                setpoint,
                operating_point,
            })
        }
    }
}
