//! `lotap` batch CLI. Data goes to files (and summaries to stdout); logs go
//! to stderr.
//!
//! Exit codes: 0 success, 2 usage or validation error, 3 fit stopped at
//! `max_iters` without converging (outputs still written), 4 I/O or format
//! error, 5 numerical failure.

mod args;
mod commands;
mod config;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use config::FileConfig;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    NotConverged(String),
    Io(String),
    Numeric(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::NotConverged(_) => 3,
            CliError::Io(_) => 4,
            CliError::Numeric(_) => 5,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::NotConverged(m) | CliError::Io(m) | CliError::Numeric(m) => m,
        }
    }
}

impl From<lotap::Error> for CliError {
    fn from(e: lotap::Error) -> Self {
        use lotap::Error as E;
        let msg = e.to_string();
        let mut root = &e;
        while let E::AtOrigin { source, .. } = root {
            root = source;
        }
        match root {
            E::Io(_) | E::MalformedHeader(_) | E::Truncated { .. } | E::VersionMismatch { .. } | E::Csv(_) => {
                CliError::Io(msg)
            }
            E::NonFinite(_) | E::ImaginaryResidue { .. } | E::ZeroNormTruth(_) => CliError::Numeric(msg),
            _ => CliError::Usage(msg),
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = FileConfig::load(cli.config.as_deref())?;
    let threads = config::pick("threads", cli.threads, file.threads, 0);
    log::debug!("threads = {threads} (parallel build: {})", lotap::parallel::is_parallel());
    lotap::parallel::with_threads(threads, move || match &cli.command {
        Command::Generate(a) => commands::generate(a, &file),
        Command::Fit(a) => commands::fit(a, &file),
        Command::Evaluate(a) => commands::evaluate(a, &file),
        Command::Forecast(a) => commands::forecast(a),
        Command::RankAnalysis(a) => commands::rank_analysis(a, &file),
        Command::SubspaceStability(a) => commands::subspace_stability(a, &file),
    })?
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{}", e.message());
            if !log::log_enabled!(log::Level::Error) {
                eprintln!("error: {}", e.message());
            }
            ExitCode::from(e.code())
        }
    }
}
