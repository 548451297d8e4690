//! Command-line surface.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "okfeb", version, about = "Online kernel feature extraction on a support-vector budget")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic dataset as LIBSVM or CSV text.
    Synth(SynthArgs),
    /// Track the feature subspace over a stream and report the LS fit.
    Track(TrackArgs),
    /// Track the subspace and report how well the features reproduce the kernel.
    Approx(ApproxArgs),
    /// Online classification on extracted features.
    Classify(ClassifyArgs),
    /// Online regression on extracted features.
    Regress(RegressArgs),
    /// Fit on a finite dataset and check the kernel-approximation bounds.
    CheckBounds(CheckBoundsArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Synthetic {
    /// Two concentric labeled spheres in ℝ³.
    TwoSpheres,
    /// Unlabeled spheroid stream whose long axis switches halfway.
    Spheroids,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum InputFormat {
    Libsvm,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Dataset {
    Adult,
    Cadata,
    Slice,
    Year,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum KernelKind {
    Gaussian,
    Polynomial,
    Linear,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum StepKind {
    /// `c/n`
    Harmonic,
    /// `c/n²`
    HarmonicSq,
    /// `1/‖q_n‖`
    InvQnorm,
    /// `c`
    Constant,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Removal {
    /// Smallest recency-weighted factor row norm.
    MinNorm,
    /// Exhaustive search over the projection distortion.
    BruteForce,
    /// Oldest support vector.
    Fifo,
}

#[derive(Clone, Debug, Args)]
pub struct SynthArgs {
    #[arg(value_enum)]
    pub kind: Synthetic,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    /// Noise level of the two-sphere generator.
    #[arg(long, default_value_t = 0.1)]
    pub sigma: f64,
    #[arg(long, value_enum, default_value_t = InputFormat::Libsvm)]
    pub format: InputFormat,
    #[arg(long, env = "OKFEB_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Destination file; standard output when absent.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Clone, Debug, Args)]
pub struct InputArgs {
    /// Input file (`-` for standard input).
    #[arg(long, short, conflicts_with = "synthetic")]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = InputFormat::Libsvm)]
    pub format: InputFormat,
    /// Feature dimension of LIBSVM input.
    #[arg(long)]
    pub dim: Option<usize>,
    /// CSV input carries the label in its first column.
    #[arg(long)]
    pub labels: bool,
    /// Generate the stream instead of reading it.
    #[arg(long, value_enum)]
    pub synthetic: Option<Synthetic>,
    /// Length of a synthetic stream.
    #[arg(long, default_value_t = 5000)]
    pub n: usize,
    /// Noise level of the two-sphere generator.
    #[arg(long, default_value_t = 0.1)]
    pub sigma: f64,
    /// Shuffle the stream with the run seed.
    #[arg(long)]
    pub shuffle: bool,
    /// Standardize every coordinate to zero mean and unit variance.
    #[arg(long)]
    pub standardize: bool,
}

#[derive(Clone, Debug, Args)]
pub struct ModelArgs {
    /// Apply the published defaults of a benchmark dataset.
    #[arg(long, value_enum)]
    pub dataset: Option<Dataset>,
    #[arg(long, value_enum, default_value_t = KernelKind::Gaussian)]
    pub kernel: KernelKind,
    /// Gaussian width: `κ(x, y) = exp(−‖x − y‖² / γ)`.
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long, default_value_t = 2)]
    pub degree: u32,
    #[arg(long, default_value_t = 1.0)]
    pub offset: f64,
    /// Subspace rank `r`.
    #[arg(long)]
    pub rank: Option<usize>,
    /// Support-vector budget `B`; defaults to `2r`.
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long, default_value_t = 1e-3)]
    pub lambda: f64,
    /// Recency forgetting factor in `(0, 1]`.
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    /// Censoring threshold: a number, or `auto` to steer toward `--target-rate`.
    #[arg(long, default_value = "0")]
    pub epsilon: String,
    /// Admission rate targeted by `--epsilon auto`.
    #[arg(long, default_value_t = 0.5)]
    pub target_rate: f64,
    #[arg(long, value_enum, default_value_t = StepKind::InvQnorm)]
    pub step: StepKind,
    /// Scale `c` of the harmonic and constant schedules.
    #[arg(long, default_value_t = 1.0)]
    pub step_scale: f64,
    #[arg(long, value_enum, default_value_t = Removal::MinNorm)]
    pub removal: Removal,
    #[arg(long, env = "OKFEB_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Clone, Debug, Args)]
pub struct OutputArgs {
    /// Metrics destination; standard output when absent.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Write CSV rows instead of JSON lines.
    #[arg(long)]
    pub csv: bool,
    /// Emit one record every this many samples (and after the last one).
    #[arg(long, default_value_t = 1)]
    pub every: usize,
    /// Report the kernel mismatch over sliding windows of this many samples.
    #[arg(long)]
    pub window: Option<usize>,
    /// Include per-step wall time; makes the output nondeterministic.
    #[arg(long)]
    pub timing: bool,
}

#[derive(Clone, Debug, Args)]
pub struct TrackArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Sample indices that open new summary segments, e.g. `1001,2001`.
    #[arg(long, value_delimiter = ',')]
    pub segments: Vec<usize>,
}

#[derive(Clone, Debug, Args)]
pub struct ApproxArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Largest stream for which the full kernel matrix is compared at the end.
    #[arg(long, default_value_t = 2000)]
    pub max_n: usize,
}

#[derive(Clone, Debug, Args)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// SVM cost `C`; the Pegasos regularizer is `1/C`.
    #[arg(long = "svm-c")]
    pub svm_c: Option<f64>,
}

#[derive(Clone, Debug, Args)]
pub struct RegressArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Ridge term of the LMS update.
    #[arg(long, default_value_t = 1e-4)]
    pub lms_lambda: f64,
    /// Fixed LMS step; by default `0.5 / (max ‖z‖² + λ)`.
    #[arg(long)]
    pub lms_step: Option<f64>,
}

#[derive(Clone, Debug, Args)]
pub struct CheckBoundsArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Metrics destination; standard output when absent.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Refuse datasets larger than this (the check is quadratic in memory).
    #[arg(long, default_value_t = 2000)]
    pub max_n: usize,
    /// Ridge parameter of the kernel-regression stability check.
    #[arg(long, default_value_t = 0.1)]
    pub ridge_lambda: f64,
}
