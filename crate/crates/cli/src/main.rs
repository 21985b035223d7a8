//! hss-stab: harmonic stability assessment from JSON scenario files.
//!
//! Exit codes: 0 success, 2 invalid input, 3 numerical failure, 4 unstable
//! verdict with `--fail-on-unstable`.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use hss_core::exec::Execution;
use hss_core::export::{render, ExportOptions, Format};
use hss_core::linalg::C64;
use hss_core::run::{run_command, Command, CommandOptions};
use hss_core::scenario::load_scenario;
use hss_core::HssError;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Cmd {
    /// Closed-loop eigenvalues, dominant harmonic blocks and verdict
    Eig,
    /// Harmonic transfer function at the scenario's evaluation points
    Htf,
    /// Eigenvalue traces over a parameter sweep
    Sweep,
    /// CDV / CDI / DI labels from control and hardware perturbations
    Classify,
    /// Truncation artefacts by probe rebuild
    Spurious,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Eig => Command::Eig,
            Cmd::Htf => Command::Htf,
            Cmd::Sweep => Command::Sweep,
            Cmd::Classify => Command::Classify,
            Cmd::Spurious => Command::Spurious,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Fmt {
    Csv,
    Json,
}

#[derive(Parser, Debug)]
#[command(name = "hss-stab", version, about = "Harmonic state-space stability analysis")]
struct Cli {
    command: Cmd,

    /// Scenario file (JSON)
    #[arg(long)]
    scenario: PathBuf,

    /// Output file; standard output when absent
    #[arg(long)]
    out: Option<PathBuf>,

    /// Output format; taken from the --out extension when absent, else csv
    #[arg(long, value_enum)]
    format: Option<Fmt>,

    /// Override the truncation order
    #[arg(long)]
    hmax: Option<usize>,

    /// Worker cap for sweeps and classification (1 runs sequentially)
    #[arg(long)]
    jobs: Option<usize>,

    /// Omit the timestamp line so repeated runs are byte-identical
    #[arg(long)]
    no_timestamp: bool,

    /// Exit with code 4 when the verdict is unstable
    #[arg(long)]
    fail_on_unstable: bool,

    /// Sweep to run (by name); the first one in the scenario by default
    #[arg(long)]
    sweep: Option<String>,

    /// HTF evaluation point `re,im`; repeatable
    #[arg(long = "point", value_parser = parse_point)]
    points: Vec<C64>,

    /// HTF input port (sigma, o or gamma where present)
    #[arg(long)]
    port: Option<String>,

    /// Override a scenario scalar, `dotted.path=value`; repeatable
    #[arg(long = "set", value_parser = parse_set)]
    sets: Vec<(String, f64)>,
}

fn parse_point(s: &str) -> Result<C64, String> {
    let (re, im) = s.split_once(',').ok_or("expected `re,im`")?;
    let p = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("`{x}`: {e}"));
    Ok(C64::new(p(re)?, p(im)?))
}

fn parse_set(s: &str) -> Result<(String, f64), String> {
    let (path, v) = s.split_once('=').ok_or("expected `path=value`")?;
    let v = v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}"))?;
    Ok((path.trim().to_string(), v))
}

fn report(e: &HssError) -> ExitCode {
    let rec = serde_json::json!({
        "error": {
            "kind": e.kind(),
            "message": e.to_string(),
            "exit_code": e.exit_code(),
        }
    });
    eprintln!("{rec}");
    ExitCode::from(e.exit_code() as u8)
}

fn run(cli: &Cli) -> Result<bool, HssError> {
    let mut scenario = load_scenario(&cli.scenario)?;
    for (path, v) in &cli.sets {
        scenario = scenario.with_override(path, *v)?;
    }
    if let Some(h) = cli.hmax {
        scenario = scenario.with_hmax(h)?;
    }
    let opts = CommandOptions {
        exec: Execution::from_jobs(cli.jobs),
        sweep: cli.sweep.clone(),
        points: (!cli.points.is_empty()).then(|| cli.points.clone()),
        port: cli.port.clone(),
    };
    let results = run_command(cli.command.into(), &scenario, &opts)?;
    let format = match cli.format {
        Some(Fmt::Csv) => Format::Csv,
        Some(Fmt::Json) => Format::Json,
        None => match cli.out.as_ref().and_then(|p| p.extension()).and_then(|e| e.to_str()) {
            Some("json") => Format::Json,
            _ => Format::Csv,
        },
    };
    let text = render(
        &results,
        ExportOptions {
            format,
            timestamp: !cli.no_timestamp,
        },
    )?;
    match &cli.out {
        Some(p) => std::fs::write(p, text).map_err(|e| HssError::Io(format!("{}: {e}", p.display())))?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(|e| HssError::Io(e.to_string()))?;
        }
    }
    Ok(results.is_stable())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(stable) if !stable && cli.fail_on_unstable => ExitCode::from(4),
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => report(&e),
    }
}
