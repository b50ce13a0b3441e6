//! Command-line front end. Exit codes: 0 success, 2 bad configuration or
//! input, 3 runtime failure.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::codebook::CodebookSpec;
use crate::engine::{aggregate, run_sweep, run_trial, run_trials, EngineError, SimConfig, SweepError, SweepReport};
use crate::io::{self, IoError, ReportFormat};
use crate::mobility::Scenario;
use crate::protocol::{BeamBooks, Protocol, ProtocolConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "silent-tracker", version, about = "mm-wave soft-handover beam tracking simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one trial (or several) of a configuration.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "json")]
        format: ReportFormat,
        #[arg(long, default_value_t = 1)]
        trials: u64,
    },
    /// Monte Carlo sweep over scenarios and mobile beamwidths.
    Sweep {
        /// Base configuration; the built-in topology when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "walk,rotation,vehicular")]
        scenarios: Vec<String>,
        #[arg(long, value_delimiter = ',', default_value = "20,60,omni")]
        beamwidths: Vec<String>,
        #[arg(long, default_value_t = 100)]
        trials: u64,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-run the protocol on a recorded RSS trace and write its action log.
    Replay {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Configuration supplying protocol constants and codebook sizes.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Stop the clock here instead of one slot past the last row.
        #[arg(long)]
        until_ms: Option<u64>,
    },
    /// Check a configuration file and exit.
    ValidateConfig {
        #[arg(long)]
        config: PathBuf,
    },
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn config(message: impl ToString) -> Self {
        Self { code: EXIT_CONFIG, message: message.to_string() }
    }

    fn runtime(message: impl ToString) -> Self {
        Self { code: EXIT_RUNTIME, message: message.to_string() }
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::Config(c) => Self::config(c),
            other => Self::runtime(other),
        }
    }
}

impl From<SweepError> for CliError {
    fn from(e: SweepError) -> Self {
        match e {
            SweepError::Empty(_) => Self::config(e),
            SweepError::Engine(e) => e.into(),
        }
    }
}

fn output_error(e: IoError) -> CliError {
    CliError::runtime(e)
}

fn load_config(path: &Path) -> Result<SimConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    SimConfig::from_json(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

/// `out` with `suffix` in place of its extension, e.g. `run.json` to `run.trace.csv`.
fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into());
    out.with_file_name(format!("{stem}.{suffix}"))
}

fn simulate(
    config: &Path,
    seed: Option<u64>,
    out: &Path,
    format: ReportFormat,
    trials: u64,
) -> Result<String, CliError> {
    let mut cfg = load_config(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if trials == 0 {
        return Err(CliError::config("--trials must be at least 1"));
    }
    if trials == 1 {
        let report = run_trial(&cfg, 0)?;
        io::write_report(&report, format, out).map_err(output_error)?;
        io::write_trace(&sibling(out, "trace.csv"), &report.rss_trace).map_err(output_error)?;
        io::write_action_log(&sibling(out, "actions.csv"), &report.action_log).map_err(output_error)?;
        return Ok(format!(
            "{} {}: outcome {}, {} measurements, {} actions",
            report.scenario,
            report.codebook,
            report.outcome.name(),
            report.rss_trace.len(),
            report.action_log.len()
        ));
    }
    let reports = run_trials(&cfg, trials)?;
    let cell = aggregate(cfg.mobile.mobility.scenario, &cfg.mobile.codebook.label(), &reports);
    let summary =
        format!("{} {}: success rate {:.3} over {trials} trials", cell.scenario, cell.codebook, cell.success_rate);
    let report = SweepReport { seed: cfg.seed, trials, cells: vec![cell] };
    io::write_report(&report, format, out).map_err(output_error)?;
    Ok(summary)
}

#[allow(clippy::too_many_arguments)]
fn sweep(
    config: Option<&Path>,
    scenarios: &[String],
    beamwidths: &[String],
    trials: u64,
    seed: Option<u64>,
    out: &Path,
) -> Result<String, CliError> {
    let mut base = match config {
        Some(p) => load_config(p)?,
        None => SimConfig::scenario(Scenario::Walk),
    };
    if let Some(s) = seed {
        base.seed = s;
    }
    let scenarios = scenarios
        .iter()
        .filter(|s| !s.trim().is_empty())
        .map(|s| Scenario::parse(s).ok_or_else(|| CliError::config(format!("unknown scenario {s:?}"))))
        .collect::<Result<Vec<_>, _>>()?;
    let codebooks = beamwidths
        .iter()
        .filter(|s| !s.trim().is_empty())
        .map(|s| CodebookSpec::parse(s).map_err(CliError::config))
        .collect::<Result<Vec<_>, _>>()?;
    let report = run_sweep(&base, &scenarios, &codebooks, trials)?;
    let (json_path, csv_path) = if out.extension().is_some_and(|e| e == "csv") {
        (out.with_extension("json"), out.to_path_buf())
    } else {
        (out.to_path_buf(), out.with_extension("csv"))
    };
    io::write_report(&report, ReportFormat::Json, &json_path).map_err(output_error)?;
    io::write_report(&report, ReportFormat::Csv, &csv_path).map_err(output_error)?;
    Ok(format!("{} sweep cells written to {}", report.cells.len(), json_path.display()))
}

fn replay(trace: &Path, out: &Path, config: Option<&Path>, until_ms: Option<u64>) -> Result<String, CliError> {
    let protocol = match config {
        Some(p) => {
            let r = load_config(p)?.resolve().map_err(CliError::config)?;
            Protocol::new(r.protocol, r.books)
        }
        None => Protocol::new(ProtocolConfig::default(), BeamBooks::uniform(18, 18)),
    };
    let rows = io::load_trace(trace).map_err(|e| CliError::config(format!("{}: {e}", trace.display())))?;
    let log =
        io::replay(&rows, &protocol, until_ms).map_err(|e| CliError::config(format!("{}: {e}", trace.display())))?;
    io::write_action_log(out, &log).map_err(output_error)?;
    Ok(format!("{} rows replayed, {} actions", rows.len(), log.len()))
}

fn validate(config: &Path) -> Result<String, CliError> {
    let cfg = load_config(config)?;
    Ok(format!("{}: ok ({} cells, scenario {})", config.display(), cfg.cells.len(), cfg.mobile.mobility.scenario))
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the exit code; diagnostics go to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Simulate { config, seed, out, format, trials } => simulate(config, *seed, out, *format, *trials),
        Command::Sweep { config, scenarios, beamwidths, trials, seed, out } => {
            sweep(config.as_deref(), scenarios, beamwidths, *trials, *seed, out)
        }
        Command::Replay { trace, out, config, until_ms } => replay(trace, out, config.as_deref(), *until_ms),
        Command::ValidateConfig { config } => validate(config),
    };
    match result {
        Ok(msg) => {
            println!("{msg}");
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}
