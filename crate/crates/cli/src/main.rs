mod commands;
mod config;

use std::process::ExitCode;

use clap::Parser;

use crate::commands::Status;
use crate::config::{Cli, Command};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] l2boost::Error),
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    /// 1 for invalid input or configuration, 2 for numerical failure, 3 for
    /// a violated bound.
    fn exit_code(&self) -> u8 {
        use l2boost::Error as E;
        match self {
            CliError::Core(e) => match e {
                E::BoundViolation { .. } => 3,
                E::ZeroColumn
                | E::DegenerateDenominator { .. }
                | E::ZeroSigma
                | E::NoValidIteration
                | E::SingularDesign
                | E::NoConvergence { .. }
                | E::NotPositiveDefinite
                | E::FixedPointFailure(_)
                | E::IterationOutOfRange { .. } => 2,
                _ => 1,
            },
            _ => 1,
        }
    }
}

fn run(command: Command) -> Result<Status, CliError> {
    match command {
        Command::Fit(a) => {
            let cfg = a.resolve()?;
            with_threads(cfg.threads, || commands::fit(&cfg))
        }
        Command::Simulate(a) => {
            let cfg = a.resolve()?;
            with_threads(cfg.threads, || commands::simulate(&cfg))
        }
        Command::Classify(a) => {
            let cfg = a.resolve()?;
            with_threads(cfg.threads, || commands::classify(&cfg))
        }
        Command::GreedyCheck(a) => {
            let cfg = a.resolve()?;
            with_threads(cfg.threads, || commands::greedy_check(&cfg))
        }
    }
}

fn with_threads(threads: usize, f: impl FnOnce() -> Result<Status, CliError> + Send) -> Result<Status, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    pool.install(f)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let name = cli.command.name();
    match run(cli.command) {
        Ok(status) => ExitCode::from(status.code()),
        Err(e) => {
            eprintln!("l2boost {name}: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
