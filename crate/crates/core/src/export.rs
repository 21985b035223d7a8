//! CSV and JSON writers for result sets.
//!
//! Floats are written in their shortest round-trip form, so re-parsing a file
//! recovers every value bit for bit. Comment lines start with `#`; the only
//! non-deterministic line is the optional timestamp.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::error::{config, HssError, Result};
use crate::run::{EigenRecord, HtfRecord, ResultSet, TraceRecord};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = HssError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(config(format!("unknown format `{s}` (csv or json)"))),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ExportOptions {
    pub format: Format,
    pub timestamp: bool,
}

/// Shortest representation that parses back to the same double.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-5..1e16).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(|x| x.to_string()).unwrap_or_default()
}

fn opt_f(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub const EIGEN_COLUMNS: [&str; 11] = [
    "index",
    "re",
    "im",
    "dominant_component",
    "dominant_harmonic",
    "classification",
    "spurious_flag",
    "boundary_suspect",
    "control_displacement",
    "hardware_displacement",
    "probe_distance",
];

pub const TRACE_COLUMNS: [&str; 4] = ["param_value", "trace_id", "re", "im"];
pub const HTF_COLUMNS: [&str; 6] = ["s_re", "s_im", "row", "col", "re", "im"];

fn eigen_row(e: &EigenRecord) -> String {
    [
        e.index.to_string(),
        fmt_f64(e.re),
        fmt_f64(e.im),
        quote(&e.dominant_component),
        e.dominant_harmonic.to_string(),
        opt(&e.classification),
        opt(&e.spurious_flag),
        e.boundary_suspect.to_string(),
        opt_f(e.control_displacement),
        opt_f(e.hardware_displacement),
        opt_f(e.probe_distance),
    ]
    .join(",")
}

fn trace_row(t: &TraceRecord) -> String {
    format!("{},{},{},{}", fmt_f64(t.param_value), t.trace_id, fmt_f64(t.re), fmt_f64(t.im))
}

fn htf_row(h: &HtfRecord) -> String {
    format!(
        "{},{},{},{},{},{}",
        fmt_f64(h.s_re),
        fmt_f64(h.s_im),
        h.row,
        h.col,
        fmt_f64(h.re),
        fmt_f64(h.im)
    )
}

/// CSV text: comment header, then the table of the command.
pub fn to_csv(r: &ResultSet, timestamp: bool) -> String {
    let mut s = String::new();
    if timestamp {
        let _ = writeln!(s, "# generated: {}", unix_now());
    }
    let _ = writeln!(s, "# command: {}", r.command);
    let _ = writeln!(s, "# scenario: {}", r.scenario);
    let _ = writeln!(s, "# hmax: {}", r.hmax);
    let _ = writeln!(s, "# f1: {}", fmt_f64(r.f1));
    if let Some(v) = &r.verdict {
        let _ = writeln!(
            s,
            "# verdict: {} max_real={} margin={} excluded={}",
            if v.stable { "stable" } else { "unstable" },
            opt_f(v.max_real),
            fmt_f64(v.margin),
            v.excluded
        );
    }
    for (k, v) in &r.meta {
        let _ = writeln!(s, "# {k}: {v}");
    }
    if !r.eigenvalues.is_empty() {
        let _ = writeln!(s, "{}", EIGEN_COLUMNS.join(","));
        for e in &r.eigenvalues {
            let _ = writeln!(s, "{}", eigen_row(e));
        }
    } else if !r.traces.is_empty() {
        let _ = writeln!(s, "{}", TRACE_COLUMNS.join(","));
        for t in &r.traces {
            let _ = writeln!(s, "{}", trace_row(t));
        }
    } else if !r.htf.is_empty() {
        let _ = writeln!(s, "{}", HTF_COLUMNS.join(","));
        for h in &r.htf {
            let _ = writeln!(s, "{}", htf_row(h));
        }
    }
    s
}

#[derive(Serialize)]
struct Stamped<'a> {
    #[serde(skip_serializing_if = "Option::is_none")]
    generated: Option<u64>,
    #[serde(flatten)]
    results: &'a ResultSet,
}

pub fn to_json(r: &ResultSet, timestamp: bool) -> Result<String> {
    let doc = Stamped {
        generated: timestamp.then(unix_now),
        results: r,
    };
    let mut s = serde_json::to_string_pretty(&doc).map_err(|e| HssError::Numerical(format!("json export: {e}")))?;
    s.push('\n');
    Ok(s)
}

pub fn render(r: &ResultSet, opts: ExportOptions) -> Result<String> {
    if r.is_empty() {
        return Err(config("nothing to export: the result set is empty"));
    }
    match opts.format {
        Format::Csv => Ok(to_csv(r, opts.timestamp)),
        Format::Json => to_json(r, opts.timestamp),
    }
}

pub fn export_results(r: &ResultSet, opts: ExportOptions, path: &Path) -> Result<()> {
    let text = render(r, opts)?;
    std::fs::write(path, text).map_err(|e| HssError::Io(format!("{}: {e}", path.display())))
}

/// Reads back the eigenvalue table of a CSV export.
pub fn read_eigen_csv(text: &str) -> Result<Vec<EigenRecord>> {
    let mut rd = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let bad = |e: csv::Error| HssError::Parse {
        file: "csv".into(),
        message: e.to_string(),
    };
    let num = |s: &str| -> Result<f64> {
        s.parse::<f64>().map_err(|e| HssError::Parse {
            file: "csv".into(),
            message: format!("`{s}`: {e}"),
        })
    };
    let optnum = |s: &str| -> Result<Option<f64>> { if s.is_empty() { Ok(None) } else { num(s).map(Some) } };
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(bad)?;
        let f = |i: usize| rec.get(i).unwrap_or("");
        out.push(EigenRecord {
            index: num(f(0))? as usize,
            re: num(f(1))?,
            im: num(f(2))?,
            dominant_component: f(3).to_string(),
            dominant_harmonic: num(f(4))? as i64,
            classification: (!f(5).is_empty()).then(|| f(5).to_string()),
            spurious_flag: if f(6).is_empty() { None } else { Some(f(6) == "true") },
            boundary_suspect: f(7) == "true",
            control_displacement: optnum(f(8))?,
            hardware_displacement: optnum(f(9))?,
            probe_distance: optnum(f(10))?,
        });
    }
    Ok(out)
}

/// Reads back a long-format trace table.
pub fn read_trace_csv(text: &str) -> Result<Vec<TraceRecord>> {
    let mut rd = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let mut out = Vec::new();
    for rec in rd.deserialize() {
        out.push(rec.map_err(|e: csv::Error| HssError::Parse {
            file: "csv".into(),
            message: e.to_string(),
        })?);
    }
    Ok(out)
}
