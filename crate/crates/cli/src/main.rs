//! `mlrtg` command-line tool: synthesis, graph bases, solvers, diagnostics,
//! evaluation and parameter sweeps over DTF1/CSV files.
//!
//! Modes are numbered from 1 on the command line and in every file name.

mod commands;
mod config;
mod error;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{Config, List};
use crate::error::CliError;

#[derive(Parser, Debug)]
#[command(name = "mlrtg", version, about = "Multilinear low-rank tensors on graphs")]
struct Cli {
    /// `key = value` file supplying defaults for any flag.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a low-rank tensor on graphs, optionally with noise.
    Synth(SynthArgs),
    /// Build and cache per-mode graph bases for a tensor.
    Basis(BasisArgs),
    /// Run a solver on a tensor and its bases.
    Solve(SolveArgs),
    /// Run the solver over a grid of one parameter.
    Sweep(SweepArgs),
    /// Per-mode stationarity and energy concentration.
    Diagnose(DiagnoseArgs),
    /// Compare an estimate with a reference tensor.
    Eval(EvalArgs),
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Dimensions, e.g. `100,100`.
    #[arg(long)]
    pub shape: Option<List>,
    /// Multilinear rank, one value or one per mode.
    #[arg(long)]
    pub rank: Option<List>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// 1: random core on graph eigenvectors, 2: graph-filtered random tensor.
    #[arg(long)]
    pub method: Option<u8>,
    #[arg(long)]
    pub k_nn: Option<usize>,
    /// Adds Gaussian noise at this SNR (dB).
    #[arg(long)]
    pub snr: Option<f64>,
    /// Adds sparse Gaussian noise to this fraction of entries.
    #[arg(long)]
    pub sparse_fraction: Option<f64>,
    #[arg(long)]
    pub sparse_std: Option<f64>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct BasisArgs {
    #[arg(long)]
    pub tensor: PathBuf,
    /// Eigenpairs per mode, one value or one per mode.
    #[arg(long)]
    pub k: Option<List>,
    #[arg(long)]
    pub k_nn: Option<usize>,
    /// Gaussian kernel width; mean k_nn-th neighbour distance when absent.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Reports `λ_{k*} / λ_{k*+1}` per mode.
    #[arg(long)]
    pub k_star: Option<usize>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algorithm {
    Gctp,
    Gmlsvd,
    Trpcag,
    Mlsvd,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Gctp => "gctp",
            Algorithm::Gmlsvd => "gmlsvd",
            Algorithm::Trpcag => "trpcag",
            Algorithm::Mlsvd => "mlsvd",
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct SolverFlags {
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Core size per mode; bases are truncated to it.
    #[arg(long)]
    pub core: Option<List>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Splitting step; solver default when absent.
    #[arg(long)]
    pub step: Option<f64>,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[arg(value_enum)]
    pub algorithm: Algorithm,
    #[arg(long)]
    pub tensor: PathBuf,
    /// Directory written by `basis`; not used by mlsvd.
    #[arg(long)]
    pub bases: Option<PathBuf>,
    /// Multilinear rank for mlsvd.
    #[arg(long)]
    pub ranks: Option<List>,
    #[command(flatten)]
    pub solver: SolverFlags,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepParam {
    Gamma,
    K,
    Alpha,
    Knn,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(value_enum)]
    pub param: SweepParam,
    /// Grid values, e.g. `0.1,1,10`.
    #[arg(long)]
    pub grid: List,
    #[arg(long)]
    pub tensor: PathBuf,
    /// Clean tensor the metrics are computed against.
    #[arg(long)]
    pub reference: PathBuf,
    #[arg(long, value_enum, default_value = "gmlsvd")]
    pub algorithm: Algorithm,
    /// Eigenpairs per mode of the graphs built on `tensor`.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub k_nn: Option<usize>,
    #[arg(long)]
    pub k_star: Option<usize>,
    #[command(flatten)]
    pub solver: SolverFlags,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct DiagnoseArgs {
    #[arg(long)]
    pub tensor: PathBuf,
    #[arg(long)]
    pub bases: PathBuf,
    /// Leading block sizes for the concentration curve.
    #[arg(long)]
    pub k_grid: Option<List>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub estimate: PathBuf,
    #[arg(long)]
    pub reference: PathBuf,
    /// Singular values and vectors compared per mode.
    #[arg(long)]
    pub k_star: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = Config::load(cli.config.as_deref())?;
    match cli.command {
        Command::Synth(a) => commands::synth(&a, &cfg),
        Command::Basis(a) => commands::basis(&a, &cfg),
        Command::Solve(a) => commands::solve(&a, &cfg),
        Command::Sweep(a) => commands::sweep(&a, &cfg),
        Command::Diagnose(a) => commands::diagnose(&a, &cfg),
        Command::Eval(a) => commands::eval(&a, &cfg),
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
