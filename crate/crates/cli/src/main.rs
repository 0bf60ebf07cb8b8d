//! `coifsolve`: wavelet data, approximations, integrations, stability scans, PDE benchmarks and
//! convergence studies, written as CSV and JSON artifacts.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod output;

use commands::{
    ApproxArgs, BenchArgs, ConvergeArgs, FiltersArgs, GammaArgs, IvpArgs, PdeArgs, StabilityArgs,
};

pub const COMMANDS: &[&str] = &["filters", "approx", "gamma", "stability", "ivp", "pde", "bench", "converge"];

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Numeric(coifsolve::Error),
    #[error("run failed: {0}")]
    RunFailed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl From<coifsolve::Error> for CliError {
    fn from(e: coifsolve::Error) -> Self {
        match e {
            coifsolve::Error::UnknownBenchmark(_) | coifsolve::Error::InvalidSpec(_) => CliError::Usage(e.to_string()),
            e => CliError::Numeric(e),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "coifsolve", version, about = "Coiflet wavelet solvers for initial-boundary value problems")]
struct Cli {
    /// JSON config file; explicit flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, env = "COIFLET_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,
    /// Run sweeps on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve a filter bank and dump its integer-point tables.
    Filters(FiltersArgs),
    /// Approximation error study on an interval.
    Approx(ApproxArgs),
    /// Step weights of the time integrator.
    Gamma(GammaArgs),
    /// Boundary locus and stability-region scan.
    Stability(StabilityArgs),
    /// Integrate an ODE benchmark.
    Ivp(IvpArgs),
    /// Integrate a PDE benchmark.
    Pde(PdeArgs),
    /// Run benchmarks with their default discretizations.
    Bench(BenchArgs),
    /// Convergence study over step sizes.
    Converge(ConvergeArgs),
}

fn run(cli: Cli) -> Result<(), CliError> {
    let ctx = commands::Context { config: cli.config, out_dir: cli.out_dir, sequential: cli.sequential };
    match cli.command {
        Command::Filters(a) => commands::filters(&ctx, a),
        Command::Approx(a) => commands::approx(&ctx, a),
        Command::Gamma(a) => commands::gamma(&ctx, a),
        Command::Stability(a) => commands::stability(&ctx, a),
        Command::Ivp(a) => commands::ivp(&ctx, a),
        Command::Pde(a) => commands::pde(&ctx, a),
        Command::Bench(a) => commands::bench(&ctx, a),
        Command::Converge(a) => commands::converge(&ctx, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let CliError::Usage(_) = e {
                eprintln!("usage: coifsolve <{}> [options]; see --help", COMMANDS.join("|"));
            }
            ExitCode::from(e.exit_code())
        }
    }
}
