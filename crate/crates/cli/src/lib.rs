//! Command-line front end: JSON scenario configs in, CSV or JSON tables out.
//!
//! Exit codes: 0 success, 1 validation failure, 2 usage or parse error,
//! 3 physical-constraint error. Command-line flags override config values.

pub mod commands;
pub mod config;
pub mod output;
pub mod units;

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use gcn_core::GcnError;
use thiserror::Error;

use config::{Format, ScenarioConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Parse(String),
    #[error("missing required field `{0}`")]
    Missing(&'static str),
    #[error("{0}")]
    Constraint(String),
    #[error(transparent)]
    Core(#[from] GcnError),
    #[error("cannot write output: {0}")]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) | CliError::Io(_) => 2,
            CliError::Missing(field) if !field.starts_with("bath.") => 2,
            _ => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "gcn", version, about = "Gate-control-noise decoherence analyses")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON scenario file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Worker threads for Monte-Carlo runs.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Analytic dephasing rates for coherence pairs.
    Rates,
    /// Worst-case rate against register length.
    Scan,
    /// Spurious and transient bus couplings.
    Couplings,
    /// Monte-Carlo coherence trace.
    Mc,
    /// Monte-Carlo against closed-form rates.
    Validate,
}

impl Command {
    fn default_format(self) -> Format {
        match self {
            Command::Validate => Format::Json,
            _ => Format::Csv,
        }
    }
}

/// Runs the program and returns its exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("gcn: error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli) -> Result<bool, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => ScenarioConfig::load(path)?,
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = Some(seed);
    }
    if let Some(output) = &cli.output {
        cfg.output = Some(output.clone());
    }
    if let Some(format) = cli.format {
        cfg.format = Some(format);
    }
    cfg.seed.get_or_insert(0);
    let format = *cfg.format.get_or_insert(cli.command.default_format());

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::Parse("--jobs must be at least 1".into()));
        }
        pool = pool.num_threads(jobs);
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::Constraint(format!("cannot start worker threads: {e}")))?;

    let outcome = pool.install(|| match cli.command {
        Command::Rates => commands::rates(&cfg),
        Command::Scan => commands::scan(&cfg),
        Command::Couplings => commands::couplings(&cfg),
        Command::Mc => commands::mc(&cfg),
        Command::Validate => commands::validate(&cfg),
    })?;

    match &cfg.output {
        Some(path) => {
            let mut out = BufWriter::new(File::create(path)?);
            outcome.report.write(&mut out, format)?;
            out.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut out = stdout.lock();
            outcome.report.write(&mut out, format)?;
            out.flush()?;
        }
    }
    Ok(outcome.passed)
}
