//! `tdse` — config-driven driver for the numerical laboratory.
//!
//! Experiments are described by a schema-versioned TOML file and selected
//! either with a subcommand or `--experiment`; command-line flags override
//! the corresponding config fields.  Exit code 0 means every check of the
//! selected experiment passed, 1 means the run completed but a check
//! failed, and 2 means the configuration or environment was unusable.

mod config;
mod io;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::ExperimentName;

/// Driver errors.  Setup problems (bad config, unreadable files) exit
/// with 2; numerical check failures are reported in-band and exit with 1.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid config: {0}")]
    ConfigInvalid(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("run failed: {0}")]
    Run(String),
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Run(format!("csv: {e}"))
    }
}

#[derive(Parser)]
#[command(
    name = "tdse",
    version,
    about = "Experiments on the time-dependent Schrodinger operator: \
             Hamilton flow, causal solves, scattering data, weighted norms"
)]
struct Cli {
    /// Experiment configuration file (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory; overrides the config's `output_dir`.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Random seed; overrides the config's `seed`.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Levels of step-doubling refinement; overrides the config's `refine`.
    #[arg(long, global = true, value_name = "K")]
    refine: Option<u32>,
    /// Experiment to run; alternative to naming it as a subcommand.
    #[arg(long, value_enum, value_name = "NAME")]
    experiment: Option<ExperimentName>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Clone, Copy, Subcommand)]
enum Command {
    /// Trace bicharacteristics and classify their endpoints.
    Flow,
    /// March the initial-value problem and dump the field.
    Solve,
    /// Map an incoming datum through the scattering matrix.
    Scatter,
    /// Weighted norms, commutation residuals, threshold exponent.
    Norms,
    /// Run the full acceptance suite.
    VerifyAll,
}

impl Command {
    fn name(self) -> ExperimentName {
        match self {
            Command::Flow => ExperimentName::Flow,
            Command::Solve => ExperimentName::Solve,
            Command::Scatter => ExperimentName::Scatter,
            Command::Norms => ExperimentName::Norms,
            Command::VerifyAll => ExperimentName::VerifyAll,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let sub = cli.command.map(Command::name);
    if let (Some(a), Some(b)) = (sub, cli.experiment) {
        if a != b {
            eprintln!(
                "error: subcommand `{}` and --experiment {} disagree",
                a.as_str(),
                b.as_str()
            );
            return ExitCode::from(2);
        }
    }
    let experiment = sub.or(cli.experiment);

    let cfg = match config::load(
        cli.config.as_deref(),
        experiment,
        cli.out.as_deref(),
        cli.seed,
        cli.refine,
    ) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };

    match run::run(&cfg) {
        Ok(report) => {
            if report.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
