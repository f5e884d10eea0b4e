//! Command-line surface. Every command's arguments double as its run
//! configuration, echoed into output JSON and replayable with `aroc replay`.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(
    name = "aroc",
    version,
    about = "Covariate-adjusted ROC curves with Bayesian nonparametric models"
)]
pub struct Cli {
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true, env = "AROC_THREADS")]
    pub threads: Option<usize>,

    /// Add wall-clock runtime to JSON output (output is then not reproducible byte for byte).
    #[arg(long, global = true)]
    pub report_runtime: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Fit the B-spline DDP mixture and estimate the AROC curve.
    FitBnp(FitArgs),
    /// Fit the normal linear model (single component) and estimate the AROC curve.
    FitBsp(FitArgs),
    /// Kernel (Nadaraya-Watson location-scale) AROC estimate with bootstrap bands.
    FitKernel(KernelArgs),
    /// Pooled ROC curve ignoring covariates (Bayesian bootstrap and empirical).
    Pooled(PooledArgs),
    /// Covariate-specific thresholds over a covariate grid.
    Thresholds(ThresholdArgs),
    /// Posterior predictive skewness and kurtosis.
    Ppc(PpcArgs),
    /// Run a simulation study.
    Simulate(SimulateArgs),
    /// Write a simulated dataset as CSV.
    Generate(GenerateArgs),
    /// Re-run a configuration saved in an output JSON (its `config` field) or a bare config file.
    #[serde(skip)]
    Replay(ReplayArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::FitBnp(_) => "fit-bnp",
            Command::FitBsp(_) => "fit-bsp",
            Command::FitKernel(_) => "fit-kernel",
            Command::Pooled(_) => "pooled",
            Command::Thresholds(_) => "thresholds",
            Command::Ppc(_) => "ppc",
            Command::Simulate(_) => "simulate",
            Command::Generate(_) => "generate",
            Command::Replay(_) => "replay",
        }
    }

    /// Path of the main JSON output, if the command writes one.
    pub fn json_output(&self) -> Option<&PathBuf> {
        match self {
            Command::FitBnp(a) | Command::FitBsp(a) => a.output.output.as_ref(),
            Command::FitKernel(a) => a.output.output.as_ref(),
            Command::Pooled(a) => a.output.output.as_ref(),
            Command::Thresholds(a) => a.output.output.as_ref(),
            Command::Ppc(a) => a.output.as_ref(),
            Command::Simulate(a) => a.output.as_ref(),
            Command::Generate(_) | Command::Replay(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct DataArgs {
    /// Input CSV with a header row.
    #[arg(long, short)]
    pub input: PathBuf,
    /// Name of the disease-status column.
    #[arg(long, default_value = "status")]
    pub status: String,
    /// Status value marking diseased subjects; every other value is nondiseased.
    #[arg(long, default_value = "1")]
    pub tag: String,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct McmcArgs {
    /// Total Gibbs iterations.
    #[arg(long, default_value_t = 10_000)]
    pub nsim: usize,
    /// Burn-in iterations (discarded).
    #[arg(long, default_value_t = 2_000)]
    pub nburn: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Stick-breaking precision.
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// Mixture components (truncation level); fit-bsp always uses 1.
    #[arg(long)]
    pub components: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct BandArgs {
    /// Credible or confidence level of the bands.
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    /// Number of evenly spaced FPF grid points on [0, 1].
    #[arg(long, default_value_t = 101)]
    pub grid: usize,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct OutputArgs {
    /// JSON output file (default: stdout).
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Also write the curve as tidy CSV.
    #[arg(long)]
    pub curve_csv: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Model formula, e.g. `y ~ gender + s(age, K=0, by=gender)`.
    #[arg(long, short)]
    pub formula: String,
    #[command(flatten)]
    pub mcmc: McmcArgs,
    #[command(flatten)]
    pub band: BandArgs,
    /// Upper FPF bounds for partial areas (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub t0: Vec<f64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct KernelArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value = "y")]
    pub response: String,
    /// The single continuous covariate.
    #[arg(long)]
    pub covariate: String,
    #[arg(long, default_value_t = 500)]
    pub resamples: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[command(flatten)]
    pub band: BandArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct PooledArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value = "y")]
    pub response: String,
    /// Bayesian-bootstrap iterations.
    #[arg(long, default_value_t = 1000)]
    pub iterations: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[command(flatten)]
    pub band: BandArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ThresholdArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, short)]
    pub formula: String,
    #[command(flatten)]
    pub mcmc: McmcArgs,
    /// False positive fractions (comma separated).
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.3")]
    pub fpf: Vec<f64>,
    /// Covariate varied along the grid.
    #[arg(long)]
    pub covariate: String,
    /// Grid points over the nondiseased range of the covariate.
    #[arg(long, default_value_t = 50)]
    pub points: usize,
    /// Values for the other covariates as `name=value` (default: nondiseased
    /// median, or level 0 for factors).
    #[arg(long, value_delimiter = ',')]
    pub at: Vec<String>,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct PpcArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, short)]
    pub formula: String,
    #[command(flatten)]
    pub mcmc: McmcArgs,
    /// Replicate datasets drawn from the posterior predictive.
    #[arg(long, default_value_t = 1000)]
    pub replicates: usize,
    /// JSON summary (default: stdout).
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Per-replicate statistics as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Bnp,
    Bsp,
    Kernel,
    Pooled,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    /// Scenario I..VI.
    #[arg(long)]
    pub scenario: String,
    /// Nondiseased and diseased sample sizes.
    #[arg(long, num_args = 2, value_names = ["N_NONDISEASED", "N_DISEASED"], default_values_t = [200, 200])]
    pub sizes: Vec<usize>,
    #[arg(long, value_enum, default_value_t = EstimatorKind::Bnp)]
    pub estimator: EstimatorKind,
    /// Replicates (default 50, or 100 with --paper-scale).
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Use 100 replicates and 10000/2000 Gibbs iterations unless overridden.
    #[arg(long)]
    pub paper_scale: bool,
    #[arg(long)]
    pub nsim: Option<usize>,
    #[arg(long)]
    pub nburn: Option<usize>,
    /// Interior knots per continuous covariate (bnp).
    #[arg(long, default_value_t = 4)]
    pub knots: usize,
    #[arg(long, default_value_t = 10)]
    pub components: usize,
    /// Bootstrap resamples (kernel).
    #[arg(long, default_value_t = 500)]
    pub resamples: usize,
    /// Bayesian-bootstrap iterations (pooled).
    #[arg(long, default_value_t = 1000)]
    pub iterations: usize,
    #[arg(long, default_value_t = 2018)]
    pub seed: u64,
    #[command(flatten)]
    pub band: BandArgs,
    /// Directory for cached true curves.
    #[arg(long)]
    pub truth_cache: Option<PathBuf>,
    /// JSON aggregate (default: stdout).
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Per-replicate rows as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct GenerateArgs {
    #[arg(long)]
    pub scenario: String,
    #[arg(long, num_args = 2, value_names = ["N_NONDISEASED", "N_DISEASED"], default_values_t = [200, 200])]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// CSV output (default: stdout).
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct ReplayArgs {
    /// Output JSON of an earlier run, or a bare config.
    pub config: PathBuf,
}
