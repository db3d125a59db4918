//! `ecolife` — pipeline CLI: ingest, probe, correct, analyze, report.
//!
//! Exit codes: 0 success, 1 usage/input error, 2 data/contract error.

mod commands;
mod config;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ecolife::correction::CorrectionError;
use ecolife::dataset::DatasetError;
use ecolife::liveness::LivenessError;

#[derive(Debug)]
pub enum CliError {
    /// Wrong invocation or unreadable input: exit 1.
    Usage(String),
    /// The input was readable but violates a data contract: exit 2.
    Data(String),
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> CliError {
        CliError::Usage(message.into())
    }

    pub fn data(message: impl Into<String>) -> CliError {
        CliError::Data(message.into())
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) => m,
        }
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> CliError {
        match e {
            DatasetError::Io { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<LivenessError> for CliError {
    fn from(e: LivenessError) -> CliError {
        match e {
            LivenessError::Io(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<CorrectionError> for CliError {
    fn from(e: CorrectionError) -> CliError {
        CliError::Data(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> CliError {
        CliError::Usage(e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "ecolife",
    version,
    about = "Correct lifecycle data in service-ecosystem datasets and analyze their evolution"
)]
struct Cli {
    /// Worker pool size (results are identical at any size).
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse and validate a raw dataset; emit the canonical dataset and a
    /// validation report.
    Ingest(commands::ingest::IngestArgs),
    /// Classify true availability of every record (live HTTP or fixture
    /// replay); emit a verdict file.
    Probe(commands::probe::ProbeArgs),
    /// Fit the longevity distribution, estimate missing death times, and
    /// rebuild mashup compositions; emit the corrected dataset.
    Correct(commands::correct::CorrectArgs),
    /// Compute evolution metrics (rq1..rq6) over a corrected dataset.
    Analyze(commands::analyze::AnalyzeArgs),
    /// Run the whole pipeline from a config file.
    Report(commands::report::ReportArgs),
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Ingest(args) => commands::ingest::run(args),
        Command::Probe(args) => commands::probe::run(args),
        Command::Correct(args) => commands::correct::run(args),
        Command::Analyze(args) => commands::analyze::run(args),
        Command::Report(args) => commands::report::run(args),
    }
}

impl Command {
    fn config_path(&self) -> Option<&std::path::PathBuf> {
        match self {
            Command::Ingest(_) => None,
            Command::Probe(args) => args.config_path(),
            Command::Correct(args) => args.config_path(),
            Command::Analyze(args) => args.config_path(),
            Command::Report(args) => Some(args.config_path()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprintln!("{e}");
            return ExitCode::from(1);
        }
    };
    // The flag wins; a config file's `workers` is the fallback.
    let workers = cli.workers.or_else(|| {
        cli.command
            .config_path()
            .and_then(|p| config::RunConfig::load(p).ok())
            .and_then(|c| c.workers)
    });
    let run = || dispatch(cli.command);
    let result = match workers {
        Some(n) if n > 0 => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .expect("worker pool");
            pool.install(run)
        }
        _ => run(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
