use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "divsel", version, about = "Select information divergences by maximum EDA likelihood")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset
    Gen(GenArgs),
    /// Select the divergence parameter for a dataset
    Select(SelectArgs),
    /// Fit a beta- or alpha-divergence NMF
    Nmf(NmfArgs),
    /// Fit a gamma-divergence projective NMF
    Pnmf(PnmfArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Kind {
    Tweedie,
    Multinomial,
    Block,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Case {
    Gaussian,
    Poisson,
    Gamma,
    InverseGaussian,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub kind: Kind,
    /// Tweedie special case (alternative to --power)
    #[arg(long, value_enum, conflicts_with = "power")]
    pub case: Option<Case>,
    /// Tweedie power p in {0, 1, 2, 3} or (1, 2)
    #[arg(long, allow_hyphen_values = true)]
    pub power: Option<f64>,
    #[arg(long, default_value_t = 10.0)]
    pub mu: f64,
    #[arg(long, default_value_t = 1.0)]
    pub phi: f64,
    #[arg(long, default_value_t = 10_000)]
    pub count: usize,
    #[arg(long, default_value_t = 1000)]
    pub dim: usize,
    #[arg(long, default_value_t = 10_000_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Beta,
    Alpha,
    Gamma,
    Renyi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Scalar,
    Nmf,
    Pnmf,
    Precomputed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimatorArg {
    Medal,
    Sm,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[arg(long, value_enum)]
    pub family: FamilyArg,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value = "scalar")]
    pub model: ModelArg,
    /// Fitted approximation for --model precomputed (same shape as the data)
    #[arg(long)]
    pub mu: Option<PathBuf>,
    #[arg(long)]
    pub rank: Option<usize>,
    /// Parameter grid lo:step:hi
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
    /// Dispersion grid lo:hi:count (log-spaced)
    #[arg(long)]
    pub phi_grid: Option<String>,
    #[arg(long, default_value_t = divsel_core::quadrature::DEFAULT_ORDER)]
    pub quad_order: usize,
    #[arg(long, value_enum, default_value = "medal")]
    pub estimator: EstimatorArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Factorization iterations per grid point
    #[arg(long, default_value_t = divsel_core::factorization::DEFAULT_ITERS)]
    pub iters: usize,
    /// Remove zero entries before scoring (scalar and precomputed models)
    #[arg(long)]
    pub drop_zeros: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub curve: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct NmfArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value = "beta")]
    pub family: FamilyArg,
    #[arg(long, allow_hyphen_values = true)]
    pub param: f64,
    #[arg(long)]
    pub rank: usize,
    #[arg(long, default_value_t = divsel_core::factorization::DEFAULT_ITERS)]
    pub iters: usize,
    #[arg(long)]
    pub mask: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out_w: PathBuf,
    #[arg(long)]
    pub out_h: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PnmfArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    pub param: f64,
    #[arg(long)]
    pub rank: usize,
    #[arg(long, default_value_t = divsel_core::factorization::DEFAULT_ITERS)]
    pub iters: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Start from random factors instead of a Euclidean PNMF fit
    #[arg(long)]
    pub no_warm_start: bool,
    #[arg(long)]
    pub out_w: PathBuf,
}
