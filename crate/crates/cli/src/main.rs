//! Terminal driver for the smoothprox solver: solve one configured problem,
//! replay an experiment family, run a verification suite, or write generated
//! instances to disk.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 configuration or usage error,
//! 3 numeric failure (divergence, or a verification suite reporting a
//! violation).

mod checks_cmd;
mod config;
mod gen_cmd;
mod reproduce;
mod run;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug)]
pub enum CliError {
    Io(String),
    Config(String),
    Numeric(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Io(m) | CliError::Config(m) | CliError::Numeric(m) => m,
        }
    }
}

impl From<smoothprox::Error> for CliError {
    fn from(e: smoothprox::Error) -> Self {
        use smoothprox::Error as E;
        match e {
            E::Divergence { .. } | E::MuRatioIncrease { .. } => CliError::Numeric(e.to_string()),
            E::Io(_) => CliError::Io(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "spge",
    version,
    about = "Smoothing proximal gradient solver for box-constrained capped-l1 regression"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve the problem described by a key=value config file.
    Solve {
        /// Path to the config file. See README for the key list.
        config: PathBuf,
    },
    /// Replay a benchmark family: 1 = two-variable basins, 2 = sparse
    /// regression under an absolute-deviation loss, 3 = censored regression.
    Reproduce {
        #[arg(value_parser = clap::value_parser!(u8).range(1..=3))]
        example: u8,
        /// Instance seeds per table row (family 1: timing repetitions).
        #[arg(long, default_value_t = 20)]
        seeds: usize,
        /// Output directory. Default: runs/example<N>, or $SPGE_OUT if set.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Family 3 only: sweep all 100 penalty weights instead of three.
        #[arg(long)]
        full_grid: bool,
    },
    /// Run one verification suite against its independent oracle.
    Check {
        /// prox | grad | monitor | rate
        suite: String,
    },
    /// Generate a problem instance and write it as a text file.
    Gen(gen_cmd::GenArgs),
}

fn main() -> ExitCode {
    // Quiet by default; RUST_LOG=warn surfaces the solver's advisory
    // messages (e.g. a stepsize scale below the oracle's curvature bound).
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("error")).init();
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Solve { config } => run::cmd_solve(&config),
        Cmd::Reproduce {
            example,
            seeds,
            out,
            full_grid,
        } => reproduce::cmd_reproduce(example, seeds, out, full_grid),
        Cmd::Check { suite } => checks_cmd::cmd_check(&suite),
        Cmd::Gen(args) => gen_cmd::cmd_gen(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
