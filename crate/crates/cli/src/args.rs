use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

#[derive(Parser, Debug)]
#[command(name = "lotap", version, about = "Low-tubal-rank tensor autoregression")]
pub struct Cli {
    /// Worker threads; 0 uses one per available core.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// TOML file with default values; explicit flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Repeat for more log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Draw a synthetic series and write it with a ground-truth sidecar.
    Generate(GenerateArgs),
    /// Fit a model and write it with a convergence trace.
    Fit(FitArgs),
    /// One-step rolling-origin backtest against the persistence baseline.
    Evaluate(EvaluateArgs),
    /// Extrapolate a fitted model.
    Forecast(ForecastArgs),
    /// Tubal rank and average Tucker rank of every time point.
    RankAnalysis(RankArgs),
    /// Residual of each time point's left subspace against the first one.
    SubspaceStability(StabilityArgs),
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    /// Output series (TSR3).
    #[arg(long, short)]
    pub out: PathBuf,
    /// Ground-truth sidecar; defaults to the output path with `.truth` appended.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long)]
    pub n1: Option<usize>,
    #[arg(long)]
    pub n2: Option<usize>,
    #[arg(long)]
    pub n3: Option<usize>,
    #[arg(long)]
    pub rank: Option<usize>,
    #[arg(long)]
    pub length: Option<usize>,
    /// Noise level relative to the core norm.
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated AR coefficients of the core recurrence.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub ar_coeffs: Option<Vec<f64>>,
    #[arg(long)]
    pub burn_in: Option<usize>,
}

#[derive(Args, Debug, Default, Clone)]
pub struct FitFlags {
    #[arg(long)]
    pub rank: Option<usize>,
    /// AR order p.
    #[arg(long)]
    pub order: Option<usize>,
    /// Weight of the AR term.
    #[arg(long)]
    pub phi: Option<f64>,
    #[arg(long, value_enum)]
    pub diag: Option<Diag>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub rel_tol: Option<f64>,
    /// Seed of the factor initialization.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub estimator: Option<Estimator>,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    /// Input series (TSR3).
    #[arg(long, short)]
    pub input: PathBuf,
    /// Output model (LOTP).
    #[arg(long, short)]
    pub model: PathBuf,
    /// Convergence trace CSV; defaults to the model path with `.trace.csv` appended.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Fit only the first N time points.
    #[arg(long)]
    pub train: Option<usize>,
    #[command(flatten)]
    pub fit: FitFlags,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    /// Per-origin errors CSV.
    #[arg(long, short)]
    pub out: PathBuf,
    /// Training window length.
    #[arg(long)]
    pub train: Option<usize>,
    /// Number of forecast targets after the first window; all remaining by default.
    #[arg(long)]
    pub origins: Option<usize>,
    #[arg(long, value_enum)]
    pub refit: Option<RefitMode>,
    #[command(flatten)]
    pub fit: FitFlags,
}

#[derive(Args, Debug)]
pub struct ForecastArgs {
    /// Fitted model (LOTP).
    #[arg(long, short)]
    pub model: PathBuf,
    /// Output series (TSR3).
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub horizon: usize,
}

#[derive(Args, Debug)]
pub struct RankArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, short)]
    pub out: PathBuf,
    /// Singular values below this fraction of the largest are dropped.
    #[arg(long)]
    pub threshold: Option<f64>,
}

#[derive(Args, Debug)]
pub struct StabilityArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Number of leading time points to analyse.
    #[arg(long)]
    pub points: Option<usize>,
}

#[derive(ValueEnum, Deserialize, Debug, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum Diag {
    Full,
    Relaxed,
}

#[derive(ValueEnum, Deserialize, Debug, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    LeastSquares,
    Toeplitz,
}

#[derive(ValueEnum, Deserialize, Debug, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum RefitMode {
    Every,
    Once,
}

impl From<Diag> for lotap::lotap::DiagMode {
    fn from(d: Diag) -> Self {
        match d {
            Diag::Full => Self::Full,
            Diag::Relaxed => Self::Relaxed,
        }
    }
}

impl From<Estimator> for lotap::ar::ArEstimator {
    fn from(e: Estimator) -> Self {
        match e {
            Estimator::LeastSquares => Self::LeastSquares,
            Estimator::Toeplitz => Self::Toeplitz,
        }
    }
}

impl From<RefitMode> for lotap::eval::Refit {
    fn from(m: RefitMode) -> Self {
        match m {
            RefitMode::Every => Self::Every,
            RefitMode::Once => Self::Once,
        }
    }
}
