//! The `slowcert` command line.
//!
//! ```text
//! slowcert validate|certify|sweep|iss|alpha-star --config PATH [--seed N] [--out DIR]
//! slowcert init [--example NAME] [--config PATH]
//! ```
//!
//! Exit codes: 0 when every requested check passes, 1 when a check fails,
//! 2 for parse or configuration errors, 3 for numerical failures.
//! `SLOWCERT_THREADS` caps the worker pool.

pub mod config;
pub mod custom;
pub mod output;
pub mod pipeline;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::error::Error;

pub use config::{load_config, parse_config, template, Mode, RunConfig};
pub use pipeline::{run, Outcome};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Lib(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse { .. } | CliError::Io(_) | CliError::Usage(_) => 2,
            CliError::Lib(Error::Config(_)) => 2,
            CliError::Lib(Error::NonMonotone { .. }) => 1,
            CliError::Lib(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "slowcert",
    version,
    about = "Certificates for slowly time-varying systems"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Falsify the family hypotheses on a sampling grid.
    Validate(RunArgs),
    /// Build the certificate at each alpha and check its decrease.
    Certify(RunArgs),
    /// Decrease checks over alpha_list, summarized in one table.
    Sweep(RunArgs),
    /// Gated decrease and a disturbance simulation.
    Iss(RunArgs),
    /// Bisect for the smallest alpha at which decrease holds.
    #[command(name = "alpha-star")]
    AlphaStar(RunArgs),
    /// Print a documented configuration.
    Init {
        #[arg(long, default_value = "scalar")]
        example: String,
        /// Write here instead of standard output.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Applies `SLOWCERT_THREADS` to the global pool.
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("SLOWCERT_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|n| *n > 0).ok_or_else(|| {
        CliError::Usage(format!(
            "SLOWCERT_THREADS must be a positive integer, got '{raw}'"
        ))
    })?;
    // a pool built earlier in the process wins; that is fine for a cap
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(())
}

fn mode_of(cmd: &Command) -> Option<(Mode, &RunArgs)> {
    Some(match cmd {
        Command::Validate(a) => (Mode::Validate, a),
        Command::Certify(a) => (Mode::Certify, a),
        Command::Sweep(a) => (Mode::Sweep, a),
        Command::Iss(a) => (Mode::Iss, a),
        Command::AlphaStar(a) => (Mode::AlphaStar, a),
        Command::Init { .. } => return None,
    })
}

/// Runs a parsed command line, printing the report; returns the exit status.
pub fn execute(cli: &Cli) -> Result<bool, CliError> {
    configure_threads()?;
    let Some((mode, args)) = mode_of(&cli.command) else {
        let Command::Init { example, config } = &cli.command else {
            unreachable!()
        };
        if example != "custom" && !crate::bundles::NAMES.contains(&example.as_str()) {
            return Err(CliError::Usage(format!("unknown example '{example}'")));
        }
        let text = template(example);
        match config {
            Some(p) => std::fs::write(p, text)
                .map_err(|e| CliError::Io(format!("cannot write {}: {e}", p.display())))?,
            None => print!("{text}"),
        }
        return Ok(true);
    };
    let mut cfg = load_config(&args.config, mode)?;
    if let Some(seed) = args.seed {
        cfg.grid.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.output.dir = out.clone();
    }
    let outcome = run(&cfg)?;
    print!("{}", outcome.report);
    for p in outcome.artifacts.write(&cfg.output.dir)? {
        println!("wrote {}", p.display());
    }
    Ok(outcome.passed)
}

/// Entry point for the binary.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
