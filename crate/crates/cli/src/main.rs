//! `livsic`: density, coboundary and depth computations from a TOML run
//! configuration.
//!
//! Exit status: 0 success, 1 a verification check failed, 2 invalid
//! configuration or usage, 3 numerical failure.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::{CliError, Command};
use crate::config::{Loaded, Overrides};

#[derive(Parser)]
#[command(name = "livsic", version, about = "Transfer operators, coboundaries and cohomological depth")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Invariant density of the map (density.csv, density.json).
    Density(Common),
    /// Solve the coboundary equation for the observable (solve.json, solution.csv).
    Solve(Common),
    /// Run the depth ladder on the observable (depth.json, rung_*.csv, variation_trace.csv).
    Depth(Common),
    /// Kernel basis and, given an observable, its coefficient table (basis.json, coefficients.csv).
    Basis(Common),
    /// Randomized invariant suites; exits 1 if any check fails (verify.json).
    Verify(Common),
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long, short)]
    config: PathBuf,
    /// Output directory; defaults to `output_dir` from the config, then `livsic-out`.
    #[arg(long, env = "LIVSIC_OUT_DIR")]
    out: Option<PathBuf>,
    /// Grid size N (power of two, at least 64).
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    eps_tail: Option<f64>,
    #[arg(long)]
    eps_res: Option<f64>,
    #[arg(long)]
    j_max: Option<usize>,
    /// Twist λ in (0, 1].
    #[arg(long)]
    lambda: Option<f64>,
    /// Obstruction threshold for coefficient tables.
    #[arg(long)]
    threshold: Option<f64>,
    /// Variation exponent p ≥ 1.
    #[arg(long)]
    p: Option<f64>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            grid: self.grid,
            seed: self.seed,
            eps_tail: self.eps_tail,
            eps_res: self.eps_res,
            j_max: self.j_max,
            lambda: self.lambda,
            threshold: self.threshold,
            p: self.p,
        }
    }
}

fn run(command: Command, common: &Common) -> Result<bool, CliError> {
    let mut loaded = Loaded::from_file(&common.config)?;
    loaded.apply(&common.overrides())?;
    let out = match (&common.out, &loaded.config.output_dir) {
        (Some(dir), _) => dir.clone(),
        (None, Some(dir)) => loaded.resolve(dir),
        (None, None) => PathBuf::from("livsic-out"),
    };
    commands::execute(command, &loaded, &out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, common) = match &cli.command {
        Sub::Density(c) => (Command::Density, c),
        Sub::Solve(c) => (Command::Solve, c),
        Sub::Depth(c) => (Command::Depth, c),
        Sub::Basis(c) => (Command::Basis, c),
        Sub::Verify(c) => (Command::Verify, c),
    };
    match run(command, common) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            ExitCode::from(e.exit_status())
        }
    }
}
