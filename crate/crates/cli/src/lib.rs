//! Batch front end: parses a subcommand and a TOML or JSON config, runs the
//! matching toolkit module, and writes CSV/JSON outputs plus a manifest.
//!
//! Exit codes: 0 on success, 2 for configuration or usage errors, 3 when
//! the computation itself fails.

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("cannot write output: {0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Output(_) => EXIT_CONFIG,
            CliError::Numeric(_) => EXIT_NUMERIC,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "scq", version, about = "Superconducting-qubit simulation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML or JSON config; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for parallel sections; all cores when omitted.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Repeat for more progress output on stderr.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Debug, Clone, PartialEq, Subcommand)]
pub enum Command {
    /// Circuit spectrum and charge dispersion.
    Spectrum,
    /// Qubit-resonator dressed levels and classical coupled oscillators.
    Couple,
    /// Driven, damped single-qubit Lindblad evolution.
    Evolve,
    /// Two-qubit gate propagators.
    Gate,
    /// GRAPE pulse optimization on a three-level transmon.
    Grape,
    /// Refocusing sequences and filter functions.
    Echo,
    /// Surface-code memory Monte Carlo.
    Qec(QecArgs),
    /// Virtual calibration experiments with fits.
    Experiment,
    /// Standard or interleaved randomized benchmarking.
    Rb,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Couple => "couple",
            Command::Evolve => "evolve",
            Command::Gate => "gate",
            Command::Grape => "grape",
            Command::Echo => "echo",
            Command::Qec(_) => "qec",
            Command::Experiment => "experiment",
            Command::Rb => "rb",
        }
    }
}

/// Flag overrides for `qec`; each replaces the matching config key.
#[derive(Debug, Clone, Default, PartialEq, Args)]
pub struct QecArgs {
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub shots: Option<usize>,
    #[arg(long)]
    pub cycles: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub config: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: u64,
    pub threads: Option<usize>,
    pub verbosity: u8,
}

impl From<Cli> for RunConfig {
    fn from(c: Cli) -> Self {
        Self {
            command: c.command,
            config: c.config,
            out: c.out,
            seed: c.seed,
            threads: c.threads,
            verbosity: c.verbose,
        }
    }
}

/// What a successful run produced.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub report: serde_json::Value,
    pub files: Vec<PathBuf>,
}

/// Parses `argv` (program name first) and runs it, printing the report to
/// stdout and errors to stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.into()) {
        Ok(summary) => {
            println!("{}", output::pretty_json(&summary.report));
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Runs a parsed configuration and writes its outputs.
pub fn execute(rc: &RunConfig) -> Result<RunSummary> {
    let job = || commands::dispatch(rc);
    let produced = match rc.threads {
        None => job()?,
        Some(0) => return Err(CliError::Config("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Config(format!("cannot start {n} threads: {e}")))?
            .install(job)?,
    };
    let files = produced.outputs.write_all(&rc.out, rc, &produced.raw_config, &produced.effective)?;
    if rc.verbosity > 0 {
        for f in &files {
            eprintln!("wrote {}", f.display());
        }
    }
    Ok(RunSummary { report: produced.report, files })
}
