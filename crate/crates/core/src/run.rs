//! Command dispatch: assemble a scenario and run one analysis on it.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{config, Result};
use crate::exec::Execution;
use crate::linalg::C64;
use crate::scenario::Scenario;
use crate::stability::{
    classify_eigenvalues, detect_spurious, eigen_decompose, eigenvalues, evaluate_htf, stability_verdict, sweep_parameter,
    ClassifyOptions, EigenSolution, Parameter, SpuriousOptions, StabilityVerdict, SweepOptions,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Eig,
    Htf,
    Sweep,
    Classify,
    Spurious,
}

impl Command {
    pub fn as_str(&self) -> &'static str {
        match self {
            Command::Eig => "eig",
            Command::Htf => "htf",
            Command::Sweep => "sweep",
            Command::Classify => "classify",
            Command::Spurious => "spurious",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Command {
    type Err = crate::HssError;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "eig" => Command::Eig,
            "htf" => Command::Htf,
            "sweep" => Command::Sweep,
            "classify" => Command::Classify,
            "spurious" => Command::Spurious,
            _ => return Err(config(format!("unknown command `{s}`"))),
        })
    }
}

/// Per-command options that are not part of the scenario.
#[derive(Clone, Debug, Default)]
pub struct CommandOptions {
    pub exec: Execution,
    /// Sweep name; the first sweep of the scenario when absent.
    pub sweep: Option<String>,
    /// HTF evaluation points replacing the scenario's list.
    pub points: Option<Vec<C64>>,
    /// HTF input port replacing the scenario's choice.
    pub port: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenRecord {
    pub index: usize,
    pub re: f64,
    pub im: f64,
    pub dominant_component: String,
    pub dominant_harmonic: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classification: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spurious_flag: Option<bool>,
    pub boundary_suspect: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control_displacement: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hardware_displacement: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe_distance: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub param_value: f64,
    pub trace_id: usize,
    pub re: f64,
    pub im: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HtfRecord {
    pub s_re: f64,
    pub s_im: f64,
    pub row: usize,
    pub col: usize,
    pub re: f64,
    pub im: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerdictRecord {
    pub stable: bool,
    pub margin: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_real: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub critical: Option<usize>,
    pub excluded: usize,
}

impl From<&StabilityVerdict> for VerdictRecord {
    fn from(v: &StabilityVerdict) -> Self {
        VerdictRecord {
            stable: v.stable,
            margin: v.margin,
            max_real: v.max_real,
            critical: v.critical,
            excluded: v.excluded,
        }
    }
}

/// Everything a command produced. Only the tables relevant to the command
/// are filled.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultSet {
    pub command: Command,
    pub scenario: String,
    pub hmax: usize,
    pub f1: f64,
    #[serde(default)]
    pub meta: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<VerdictRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub eigenvalues: Vec<EigenRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub traces: Vec<TraceRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub htf: Vec<HtfRecord>,
}

impl ResultSet {
    fn new(command: Command, s: &Scenario) -> Self {
        ResultSet {
            command,
            scenario: s.name.clone(),
            hmax: s.hmax(),
            f1: s.f1(),
            meta: BTreeMap::new(),
            verdict: None,
            eigenvalues: Vec::new(),
            traces: Vec::new(),
            htf: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty() && self.traces.is_empty() && self.htf.is_empty()
    }

    /// False only when a verdict exists and says unstable.
    pub fn is_stable(&self) -> bool {
        self.verdict.as_ref().is_none_or(|v| v.stable)
    }
}

fn eigen_records(sol: &EigenSolution, boundary_share: f64) -> Vec<EigenRecord> {
    (0..sol.len())
        .map(|k| {
            let e = sol.energy(k);
            let z = sol.eigenvalues[k];
            EigenRecord {
                index: k,
                re: z.re,
                im: z.im,
                dominant_component: e.dominant_component,
                dominant_harmonic: e.dominant_harmonic,
                classification: None,
                spurious_flag: None,
                boundary_suspect: e.boundary_share >= boundary_share,
                control_displacement: None,
                hardware_displacement: None,
                probe_distance: None,
            }
        })
        .collect()
}

fn set_verdict(r: &mut ResultSet, sol: &EigenSolution, excluded: &[bool], margin: f64) {
    let v = stability_verdict(&sol.eigenvalues, excluded, margin);
    r.verdict = Some(VerdictRecord::from(&v));
}

fn spurious_options(s: &Scenario) -> SpuriousOptions {
    let a = &s.doc.analysis;
    SpuriousOptions {
        hmax_probe: a.hmax_probe,
        delta: a.delta,
        delta_rel: a.delta_rel,
        boundary_share: a.boundary_share,
    }
}

/// Eigenvalues of the closed loop with `path` set to `value`.
pub fn family_eigenvalues(s: &Scenario, path: &str, value: f64) -> Result<Vec<C64>> {
    let m = s.with_override(path, value)?.assemble(Execution::Sequential)?;
    eigenvalues(&m.closed.model)
}

pub fn run_command(command: Command, scenario: &Scenario, opts: &CommandOptions) -> Result<ResultSet> {
    let a = &scenario.doc.analysis;
    let mut out = ResultSet::new(command, scenario);
    match command {
        Command::Eig => {
            let sys = scenario.assemble(opts.exec)?;
            let sol = eigen_decompose(&sys.closed.model)?;
            out.eigenvalues = eigen_records(&sol, a.boundary_share);
            let excluded: Vec<bool> = out.eigenvalues.iter().map(|e| e.boundary_suspect).collect();
            set_verdict(&mut out, &sol, &excluded, a.margin);
            out.meta.insert("states".into(), sol.len().to_string());
            out.meta.insert("max_residual".into(), format!("{:e}", sol.max_residual));
        }
        Command::Spurious => {
            let sys = scenario.assemble(opts.exec)?;
            let sol = eigen_decompose(&sys.closed.model)?;
            let rep = detect_spurious(&sys.closed.model, &sol, &spurious_options(scenario))?;
            out.eigenvalues = eigen_records(&sol, a.boundary_share);
            for (k, e) in out.eigenvalues.iter_mut().enumerate() {
                e.spurious_flag = Some(rep.flags[k]);
                e.boundary_suspect = rep.boundary_suspect[k];
                e.probe_distance = Some(rep.distances[k]);
            }
            let excluded: Vec<bool> = (0..sol.len()).map(|k| rep.flags[k] || rep.boundary_suspect[k]).collect();
            set_verdict(&mut out, &sol, &excluded, a.margin);
            out.meta.insert("hmax_probe".into(), rep.hmax_probe.to_string());
            out.meta.insert("delta".into(), format!("{:e}", rep.delta));
            out.meta.insert("flagged".into(), rep.flagged().to_string());
        }
        Command::Htf => {
            let points: Vec<C64> = match &opts.points {
                Some(p) => p.clone(),
                None => a.htf.points.iter().map(|p| C64::new(p[0], p[1])).collect(),
            };
            if points.is_empty() {
                return Err(config("htf needs at least one evaluation point"));
            }
            let port = opts.port.clone().unwrap_or_else(|| a.htf.port.clone());
            let sys = scenario.assemble(opts.exec)?;
            for s in points {
                let g = evaluate_htf(&sys.closed.model, &port, s, None)?;
                for j in 0..g.ncols() {
                    for i in 0..g.nrows() {
                        let z = g[(i, j)];
                        out.htf.push(HtfRecord {
                            s_re: s.re,
                            s_im: s.im,
                            row: i,
                            col: j,
                            re: z.re,
                            im: z.im,
                        });
                    }
                }
            }
            out.meta.insert("port".into(), port);
        }
        Command::Sweep => {
            let sw = match &opts.sweep {
                Some(name) => scenario
                    .doc
                    .sweeps
                    .iter()
                    .find(|s| &s.name == name)
                    .ok_or_else(|| config(format!("scenario has no sweep named `{name}`")))?,
                None => scenario
                    .doc
                    .sweeps
                    .first()
                    .ok_or_else(|| config("scenario defines no sweeps"))?,
            };
            let family = |v: f64| family_eigenvalues(scenario, &sw.path, v);
            let sopts = SweepOptions {
                refine_on_crossing: sw.refine_on_crossing,
                exec: opts.exec,
                ..SweepOptions::default()
            };
            let tr = sweep_parameter(&family, &sw.path, &sw.values, &sopts)?;
            for (k, &v) in tr.values.iter().enumerate() {
                for (t, trace) in tr.traces.iter().enumerate() {
                    out.traces.push(TraceRecord {
                        param_value: v,
                        trace_id: t,
                        re: trace[k].re,
                        im: trace[k].im,
                    });
                }
            }
            out.meta.insert("sweep".into(), sw.name.clone());
            out.meta.insert("path".into(), sw.path.clone());
            let unresolved: Vec<String> = tr.unresolved.iter().map(|(s, t)| format!("{s}:{t}")).collect();
            out.meta.insert("unresolved".into(), unresolved.join(" "));
        }
        Command::Classify => {
            if a.control_parameters.is_empty() || a.hardware_parameters.is_empty() {
                return Err(config(
                    "classification needs at least one control and one hardware parameter in analysis",
                ));
            }
            let sys = scenario.assemble(opts.exec)?;
            let sol = eigen_decompose(&sys.closed.model)?;
            let families: Vec<(String, f64, Box<dyn Fn(f64) -> Result<Vec<C64>> + Sync + '_>)> = a
                .control_parameters
                .iter()
                .chain(&a.hardware_parameters)
                .map(|p| {
                    let path = p.clone();
                    let f: Box<dyn Fn(f64) -> Result<Vec<C64>> + Sync> =
                        Box::new(move |v| family_eigenvalues(scenario, &path, v));
                    Ok((p.clone(), scenario.number_at(p)?, f))
                })
                .collect::<Result<_>>()?;
            let params: Vec<Parameter<'_>> = families
                .iter()
                .map(|(p, nominal, f)| Parameter {
                    path: p.clone(),
                    nominal: *nominal,
                    family: f,
                })
                .collect();
            let nc = a.control_parameters.len();
            let copts = ClassifyOptions {
                factors: a.factors.clone(),
                epsilon: a.epsilon,
                epsilon_rel: a.epsilon_rel,
                exec: opts.exec,
            };
            let mut records = eigen_records(&sol, a.boundary_share);
            let cls = classify_eigenvalues(&sol.eigenvalues, &params[..nc], &params[nc..], None, &copts)?;
            for (k, e) in records.iter_mut().enumerate() {
                e.classification = Some(cls.labels[k].as_str().to_string());
                e.control_displacement = Some(cls.evidence[k].control_displacement);
                e.hardware_displacement = Some(cls.evidence[k].hardware_displacement);
            }
            out.eigenvalues = records;
            let excluded: Vec<bool> = out.eigenvalues.iter().map(|e| e.boundary_suspect).collect();
            set_verdict(&mut out, &sol, &excluded, a.margin);
            out.meta.insert("epsilon".into(), format!("{:e}", cls.epsilon));
        }
    }
    Ok(out)
}
