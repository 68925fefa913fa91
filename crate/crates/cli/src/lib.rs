//! Command-line driver: TOML configs in, deterministic JSON reports and
//! field CSVs out.

pub mod calibration;
pub mod commands;
pub mod config;
pub mod error;
pub mod verify;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use qcrit::mesh::write_field_csv;
use serde::Serialize;
use serde_json::{json, Value};

use calibration::Calibration;
use config::{RunConfig, VerifyConfig};
use error::{CliError, CliResult, ErrorRecord, EXIT_OK, EXIT_UNRESOLVED};

pub const REPORT_SCHEMA: &str = "qcrit-report/1";

/// Overrides the output directory of every command.
pub const OUT_DIR_ENV: &str = "QCRIT_OUT_DIR";

const CALIBRATION_FILE: &str = "qcrit-calibration.json";

#[derive(Debug, Parser)]
#[command(name = "qcrit", version, about = "Criticality toolkit for p-Laplacian type functionals")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Principal eigenpair (and the exhaustion sequence, if configured).
    Eigen(RunArgs),
    /// Dirichlet problem with the configured load.
    Solve(RunArgs),
    /// Monotone iteration between 0 and a constant supersolution.
    Iterate(RunArgs),
    /// Null-sequence criticality probe along the exhaustion.
    Criticality(RunArgs),
    /// Minimal positive Green function at the configured pole.
    Green(RunArgs),
    /// Local Morrey norm of the potential.
    Morrey(RunArgs),
    /// Property suites.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Print the wall time on stderr.
    #[arg(long)]
    pub timing: bool,
    /// Replace the configured seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// TOML configuration.
    pub config: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Suite to run (repeatable); `all` runs every suite.
    #[arg(long = "suite")]
    pub suites: Vec<String>,
    /// Samples per exponent for the sampled inequalities.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Calibration file; generated when missing.
    #[arg(long)]
    pub calibration: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Serialize)]
pub struct Provenance {
    pub seed: u64,
    pub calibration_sha256: Option<String>,
    pub version: &'static str,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub command: String,
    pub config: Value,
    pub results: Value,
    /// CSV files written to the output directory.
    pub artifacts: Vec<String>,
    pub provenance: Provenance,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

fn output_dir(cfg: &RunConfig) -> Option<PathBuf> {
    std::env::var_os(OUT_DIR_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
        .or_else(|| cfg.output.dir.as_ref().map(PathBuf::from))
}

fn write_csvs(dir: &Path, command: &str, fields: &[(String, qcrit::GridFunction)]) -> CliResult<Vec<String>> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir.display().to_string(), e))?;
    let mut names = Vec::new();
    for (name, u) in fields {
        let file = format!("{command}_{name}.csv");
        let path = dir.join(&file);
        let mut buf = Vec::new();
        write_field_csv(u, &mut buf)?;
        std::fs::write(&path, buf).map_err(|e| CliError::io(path.display().to_string(), e))?;
        names.push(file);
    }
    Ok(names)
}

struct Finished {
    report: Report,
    /// Reason for exit code 3, if any.
    unresolved: Option<ErrorRecord>,
    lines: Vec<String>,
}

fn verify_command(args: &VerifyArgs) -> CliResult<(RunConfig, Calibration, Vec<verify::SuiteOutcome>)> {
    let mut cfg = match &args.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::verify_default(),
    };
    if let Some(s) = args.common.seed {
        cfg.seed = s;
    }
    let mut vc = cfg.verify.clone().unwrap_or(VerifyConfig {
        samples: config::default_samples(),
        suites: vec!["all".into()],
    });
    if let Some(n) = args.samples {
        vc.samples = n;
    }
    if !args.suites.is_empty() {
        vc.suites = args.suites.clone();
    }
    cfg.verify = Some(vc.clone());
    cfg.validate()?;
    let suites = verify::resolve_suites(&vc.suites)?;
    let cal_path = args
        .calibration
        .clone()
        .or_else(|| output_dir(&cfg).map(|d| d.join(CALIBRATION_FILE)))
        .unwrap_or_else(|| PathBuf::from(CALIBRATION_FILE));
    let cal = Calibration::load_or_create(&cal_path, cfg.seed)?;
    let ctx = verify::VerifyContext {
        seed: cfg.seed,
        samples: vc.samples,
        calibration: &cal,
    };
    let outcomes = suites
        .iter()
        .map(|s| verify::run_suite(s, &ctx))
        .collect::<CliResult<Vec<_>>>()?;
    Ok((cfg, cal, outcomes))
}

fn execute(cli: &Cli) -> CliResult<Finished> {
    let (name, args) = match &cli.command {
        Command::Verify(v) => {
            let (cfg, cal, outcomes) = verify_command(v)?;
            let failed: Vec<String> = outcomes.iter().filter(|o| !o.pass).map(|o| o.name.clone()).collect();
            let lines = outcomes
                .iter()
                .map(|o| format!("{} {}", if o.pass { "PASS" } else { "FAIL" }, o.name))
                .collect();
            let report = Report {
                schema: REPORT_SCHEMA,
                command: "verify".into(),
                config: serde_json::to_value(&cfg).expect("config serializes"),
                results: json!({ "pass": failed.is_empty(), "suites": outcomes }),
                artifacts: Vec::new(),
                provenance: Provenance {
                    seed: cfg.seed,
                    calibration_sha256: Some(cal.sha256),
                    version: env!("CARGO_PKG_VERSION"),
                },
            };
            let unresolved = (!failed.is_empty()).then(|| CliError::SuitesFailed(failed).record());
            return Ok(Finished {
                report,
                unresolved,
                lines,
            });
        }
        Command::Eigen(a) => ("eigen", a),
        Command::Solve(a) => ("solve", a),
        Command::Iterate(a) => ("iterate", a),
        Command::Criticality(a) => ("criticality", a),
        Command::Green(a) => ("green", a),
        Command::Morrey(a) => ("morrey", a),
    };
    let mut cfg = RunConfig::load(&args.config)?;
    if let Some(s) = args.common.seed {
        cfg.seed = s;
    }
    let outcome = match name {
        "eigen" => commands::eigen(&cfg),
        "solve" => commands::solve(&cfg),
        "iterate" => commands::iterate(&cfg),
        "criticality" => commands::criticality(&cfg),
        "green" => commands::green(&cfg),
        _ => commands::morrey(&cfg),
    }?;
    let artifacts = match output_dir(&cfg) {
        Some(dir) if cfg.output.csv => write_csvs(&dir, name, &outcome.fields)?,
        _ => Vec::new(),
    };
    let report = Report {
        schema: REPORT_SCHEMA,
        command: name.into(),
        config: serde_json::to_value(&cfg).expect("config serializes"),
        results: outcome.results,
        artifacts,
        provenance: Provenance {
            seed: cfg.seed,
            calibration_sha256: None,
            version: env!("CARGO_PKG_VERSION"),
        },
    };
    Ok(Finished {
        report,
        unresolved: outcome.unresolved.map(|note| ErrorRecord {
            code: "inconclusive",
            message: note,
            context: json!({ "command": name }),
        }),
        lines: Vec::new(),
    })
}

fn emit_error(err: &mut dyn Write, rec: &ErrorRecord) {
    let _ = writeln!(err, "{}", serde_json::to_string(rec).expect("error serializes"));
}

/// Runs one parsed invocation and returns the process exit code.
pub fn run(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let start = Instant::now();
    let common = match &cli.command {
        Command::Verify(v) => &v.common,
        Command::Eigen(a)
        | Command::Solve(a)
        | Command::Iterate(a)
        | Command::Criticality(a)
        | Command::Green(a)
        | Command::Morrey(a) => &a.common,
    };
    let finished = match execute(cli) {
        Ok(f) => f,
        Err(e) => {
            emit_error(err, &e.record());
            return e.exit_code();
        }
    };
    for l in &finished.lines {
        let _ = writeln!(err, "{l}");
    }
    let text = finished.report.to_json();
    match &common.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &text) {
                let e = CliError::io(path.display().to_string(), e);
                emit_error(err, &e.record());
                return e.exit_code();
            }
        }
        None => {
            let _ = out.write_all(text.as_bytes());
        }
    }
    if common.timing {
        let _ = writeln!(err, "wall time: {:.3} s", start.elapsed().as_secs_f64());
    }
    match finished.unresolved {
        None => EXIT_OK,
        Some(rec) => {
            emit_error(err, &rec);
            EXIT_UNRESOLVED
        }
    }
}
