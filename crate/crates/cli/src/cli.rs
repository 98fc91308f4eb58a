use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "lsdtw", version, about = "Temporal alignment by squared-loss mutual information")]
pub struct Cli {
    /// Seed for every random choice (CV folds, synthetic data).
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output file, or output directory for `synth` and `bench`.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Suppress progress and warnings.
    #[arg(long, short, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic pair with its true alignment.
    Synth(SynthArgs),
    /// Align two sequences.
    Align(AlignArgs),
    /// Fit the density-ratio model on the pairs of a path and report SMI.
    Smi(SmiArgs),
    /// Alignment error of an estimated path against the truth.
    Eval(EvalArgs),
    /// Run a benchmark suite.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SynthKindArg {
    Multimodal,
    Nongaussian,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    pub kind: SynthKindArg,
    #[arg(long, default_value_t = 200)]
    pub nx: usize,
    #[arg(long, default_value_t = 100)]
    pub ny: usize,
    /// Noise level (non-Gaussian only).
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub eta: f64,
    /// Latent trajectory length (non-Gaussian only); defaults to max(nx, ny).
    #[arg(long)]
    pub latent_len: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Dtw,
    Ctw,
    Lsdtw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitArg {
    Auto,
    Uniform,
    Ctw,
}

#[derive(Debug, Args, Clone)]
pub struct LsdtwOpts {
    #[arg(long = "max-iter", default_value_t = 20)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 3)]
    pub cv_folds: usize,
    /// Maximum number of kernel centers.
    #[arg(long, default_value_t = 100)]
    pub center_cap: usize,
    /// Rerun cross-validation on every iteration.
    #[arg(long)]
    pub refit_cv: bool,
    #[arg(long, value_enum, default_value_t = InitArg::Auto)]
    pub init: InitArg,
    /// Start from this path (overrides --init).
    #[arg(long)]
    pub init_path: Option<PathBuf>,
}

#[derive(Debug, Args, Clone)]
pub struct CtwOpts {
    /// CCA regularization.
    #[arg(long, default_value_t = 0.01)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 50)]
    pub ctw_max_iter: usize,
}

#[derive(Debug, Args)]
pub struct AlignArgs {
    #[arg(long, value_enum)]
    pub method: MethodArg,
    pub x: PathBuf,
    pub y: PathBuf,
    #[command(flatten)]
    pub lsdtw: LsdtwOpts,
    #[command(flatten)]
    pub ctw: CtwOpts,
}

#[derive(Debug, Args)]
pub struct SmiArgs {
    pub x: PathBuf,
    pub y: PathBuf,
    /// Path JSON; defaults to the uniform path.
    pub path: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    pub cv_folds: usize,
    #[arg(long, default_value_t = 100)]
    pub center_cap: usize,
    /// Fix the kernel width for x instead of cross-validating.
    #[arg(long, requires_all = ["sigma_y", "lambda"])]
    pub sigma_x: Option<f64>,
    #[arg(long, requires_all = ["sigma_x", "lambda"])]
    pub sigma_y: Option<f64>,
    #[arg(long, requires_all = ["sigma_x", "sigma_y"])]
    pub lambda: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    pub truth: PathBuf,
    pub estimate: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Multimodal,
    NongaussianSweep,
    Retrieval,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_enum)]
    pub suite: Suite,
    /// Runs (seeds) per setting.
    #[arg(long, default_value_t = 20)]
    pub runs: usize,
    /// Noise levels as `start:step:stop` (inclusive) or a single value.
    #[arg(long)]
    pub eta: Option<String>,
    /// Retrieval count.
    #[arg(long = "N", alias = "n", default_value_t = 10)]
    pub retrieve: usize,
    /// Comma-separated subset of dtw,ctw,lsdtw.
    #[arg(long, value_delimiter = ',', default_values = ["dtw", "ctw", "lsdtw"])]
    pub methods: Vec<MethodArg>,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Sequence lengths for the synthetic suites.
    #[arg(long)]
    pub nx: Option<usize>,
    #[arg(long)]
    pub ny: Option<usize>,
    /// LSDTW initialization; `truth` starts from the true path.
    #[arg(long, value_enum)]
    pub lsdtw_init: Option<BenchInit>,
    /// Retrieval: labeled query sequences as `<dir>/<label>/*.csv`.
    #[arg(long, requires = "database")]
    pub queries: Option<PathBuf>,
    /// Retrieval: labeled database sequences as `<dir>/<label>/*.csv`.
    #[arg(long, requires = "queries")]
    pub database: Option<PathBuf>,
    /// Retrieval: synthetic classes and instances per class and split.
    #[arg(long, default_value_t = 3)]
    pub classes: usize,
    #[arg(long, default_value_t = 10)]
    pub per_class: usize,
    #[arg(long, default_value_t = 30)]
    pub len: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BenchInit {
    Auto,
    Uniform,
    Ctw,
    Truth,
}
