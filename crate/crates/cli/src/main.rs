//! `pmlab`: experiments on the planted matching model.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pmlab_core::Error;

#[derive(Parser, Debug)]
#[command(name = "pmlab", version, about = "Planted matching recovery experiments")]
struct Cli {
    /// Worker threads for trial-level parallelism; defaults to all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Overlap and weight curves from the ODE, optionally with Monte Carlo columns.
    Alpha(AlphaArgs),
    /// Finite-n trials: overlap, weight and symmetric difference per trial.
    Simulate(SimulateArgs),
    /// Population dynamics for the distributional fixed point.
    Rde(RdeArgs),
    /// Root statistics of the truncated planted tree.
    Pwit(PwitArgs),
    /// Closed-form bounds.
    Bound(BoundArgs),
}

#[derive(Args, Debug)]
pub struct AlphaArgs {
    #[arg(long)]
    pub lambda_min: f64,
    #[arg(long)]
    pub lambda_max: f64,
    #[arg(long)]
    pub steps: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Graph size of the Monte Carlo columns.
    #[arg(long, requires = "mc_trials")]
    pub mc_n: Option<usize>,
    #[arg(long, requires = "mc_n")]
    pub mc_trials: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub lambda: f64,
    #[arg(long)]
    pub trials: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct RdeArgs {
    #[arg(long)]
    pub lambda: f64,
    #[arg(long)]
    pub pool: usize,
    #[arg(long)]
    pub iters: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the final pools, one sample per line, to `<PREFIX>.X.txt` and `<PREFIX>.Y.txt`.
    #[arg(long)]
    pub dump: Option<PathBuf>,
    /// Draws of the direct overlap estimate.
    #[arg(long, default_value_t = 100_000)]
    pub draws: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BoundarySource {
    Ode,
    Rde,
}

#[derive(Args, Debug)]
pub struct PwitArgs {
    #[arg(long)]
    pub lambda: f64,
    #[arg(long, default_value_t = pmlab_core::pwit::DEFAULT_DEPTH)]
    pub depth: usize,
    #[arg(long, default_value_t = pmlab_core::pwit::DEFAULT_ARITY)]
    pub arity: usize,
    #[arg(long)]
    pub trials: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = BoundarySource::Ode)]
    pub boundary: BoundarySource,
    /// Pool size and iterations when the boundary comes from population dynamics.
    #[arg(long, default_value_t = 100_000)]
    pub pool: usize,
    #[arg(long, default_value_t = 300)]
    pub iters: usize,
}

#[derive(Args, Debug)]
pub struct BoundArgs {
    #[arg(long)]
    pub lambda: f64,
    #[arg(long)]
    pub n: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub(crate) fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Parameter(_) | Error::Parse(_) | Error::TreeTooLarge { .. }) => 2,
        Some(Error::NoSolution { .. }) => 3,
        Some(Error::Convergence { .. } | Error::Precision { .. } | Error::NumericalFailure { .. }) => 4,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(k) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            eprintln!("pmlab: cannot configure {k} threads: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match &cli.command {
        Command::Alpha(a) => commands::alpha(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Rde(a) => commands::rde(a),
        Command::Pwit(a) => commands::pwit(a),
        Command::Bound(a) => commands::bound(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pmlab: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
