//! Resolution of command-line flags into library objects.

use std::fmt;

use okfeb::budget::{BudgetPolicy, CensorPolicy, RemovalRule};
use okfeb::data::{Sample, Source, StreamConfig};
use okfeb::kernel::KernelSpec;
use okfeb::subspace::{FactorInit, StepSchedule};
use okfeb::{Error, Extractor};

use crate::args::{Dataset, InputArgs, InputFormat, KernelKind, ModelArgs, Removal, StepKind, Synthetic};

/// Failure category, reported in the error record and mapped to the exit code.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Parse,
    Io,
    Numeric,
    Bound,
}

impl ErrorKind {
    pub fn name(self) -> &'static str {
        match self {
            ErrorKind::Config => "config",
            ErrorKind::Parse => "parse",
            ErrorKind::Io => "io",
            ErrorKind::Numeric => "numeric",
            ErrorKind::Bound => "bound",
        }
    }

    pub fn exit_code(self) -> u8 {
        match self {
            ErrorKind::Config => 2,
            ErrorKind::Bound => 3,
            _ => 1,
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError { kind: ErrorKind::Config, message: message.into() }
    }

    pub fn bound(message: impl Into<String>) -> Self {
        CliError { kind: ErrorKind::Bound, message: message.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let kind = match e {
            Error::Parse { .. } => ErrorKind::Parse,
            Error::Io(_) => ErrorKind::Io,
            Error::InvalidParameter(_)
            | Error::Precondition(_)
            | Error::EmptyInput
            | Error::DimensionMismatch { .. } => ErrorKind::Config,
            _ => ErrorKind::Numeric,
        };
        CliError { kind, message: e.to_string() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError { kind: ErrorKind::Io, message: e.to_string() }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError { kind: ErrorKind::Io, message: e.to_string() }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError { kind: ErrorKind::Io, message: e.to_string() }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Published settings of the benchmark datasets. The budget is a multiple
/// `num/den` of the rank, rounded up.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DatasetDefaults {
    pub dim: usize,
    pub rank: usize,
    pub budget_ratio: (usize, usize),
    pub gamma: f64,
    pub svm_c: Option<f64>,
}

pub fn dataset_defaults(d: Dataset) -> DatasetDefaults {
    match d {
        Dataset::Adult => DatasetDefaults { dim: 123, rank: 50, budget_ratio: (6, 5), gamma: 20.0, svm_c: Some(10.0) },
        Dataset::Cadata => DatasetDefaults { dim: 8, rank: 5, budget_ratio: (3, 2), gamma: 7e7, svm_c: Some(0.01) },
        Dataset::Slice => DatasetDefaults { dim: 384, rank: 10, budget_ratio: (6, 5), gamma: 50.0, svm_c: None },
        Dataset::Year => DatasetDefaults { dim: 90, rank: 10, budget_ratio: (6, 5), gamma: 5e7, svm_c: None },
    }
}

const DEFAULT_RANK: usize = 10;
const DEFAULT_GAMMA: f64 = 1.0;
const DEFAULT_SVM_C: f64 = 10.0;

/// Fully resolved extractor settings.
#[derive(Clone, Debug)]
pub struct Settings {
    pub kernel: KernelSpec<f64>,
    pub rank: usize,
    pub lambda: f64,
    pub censor: CensorPolicy<f64>,
    pub budget_policy: BudgetPolicy<f64>,
    pub schedule: StepSchedule<f64>,
    pub seed: u64,
    pub svm_c: f64,
    pub warnings: Vec<String>,
}

impl Settings {
    pub fn resolve(m: &ModelArgs, svm_c: Option<f64>) -> CliResult<Self> {
        let defaults = m.dataset.map(dataset_defaults);
        let rank = m.rank.or(defaults.map(|d| d.rank)).unwrap_or(DEFAULT_RANK);
        if rank == 0 {
            return Err(CliError::config("rank must be at least 1"));
        }
        let (num, den) = defaults.map_or((2, 1), |d| d.budget_ratio);
        let budget = m.budget.unwrap_or((rank * num).div_ceil(den));
        let mut warnings = Vec::new();
        if 2 * budget < 3 * rank {
            warnings.push(format!("budget {budget} is below 1.5x the rank {rank}; the subspace may be starved"));
        }
        let gamma = m.gamma.or(defaults.map(|d| d.gamma)).unwrap_or(DEFAULT_GAMMA);
        let kernel = match m.kernel {
            KernelKind::Gaussian => KernelSpec::gaussian(gamma)?,
            KernelKind::Polynomial => KernelSpec::polynomial(m.degree, m.offset)?,
            KernelKind::Linear => KernelSpec::Linear,
        };
        let censor = match m.epsilon.trim() {
            "auto" => CensorPolicy::adaptive(m.target_rate)?,
            text => {
                let eps: f64 = text
                    .parse()
                    .map_err(|_| CliError::config(format!("epsilon must be a number or 'auto', got '{text}'")))?;
                CensorPolicy::fixed(eps)?
            }
        };
        let rule = match m.removal {
            Removal::MinNorm => RemovalRule::RecencyMinNorm,
            Removal::BruteForce => RemovalRule::BruteForce,
            Removal::Fifo => RemovalRule::Fifo,
        };
        let budget_policy = BudgetPolicy::new(budget, m.beta, rule)?;
        let scale = m.step_scale;
        if scale <= 0.0 || !scale.is_finite() {
            return Err(CliError::config(format!("step scale must be positive, got {scale}")));
        }
        let schedule = match m.step {
            StepKind::Harmonic => StepSchedule::harmonic(scale),
            StepKind::HarmonicSq => StepSchedule::harmonic_sq(scale),
            StepKind::InvQnorm => StepSchedule::inv_feature_norm(),
            StepKind::Constant => StepSchedule::constant(scale),
        };
        let svm_c = svm_c.or(defaults.and_then(|d| d.svm_c)).unwrap_or(DEFAULT_SVM_C);
        Ok(Settings { kernel, rank, lambda: m.lambda, censor, budget_policy, schedule, seed: m.seed, svm_c, warnings })
    }

    pub fn extractor(&self) -> CliResult<Extractor> {
        Ok(Extractor::new(
            self.kernel,
            self.rank,
            self.lambda,
            self.censor.clone(),
            self.budget_policy,
            self.schedule,
            FactorInit::random(self.seed),
        )?)
    }
}

/// Loads the stream described by the input flags.
pub fn load_samples(input: &InputArgs, model: &ModelArgs) -> CliResult<(Vec<Sample<f64>>, Vec<String>)> {
    let source = match (&input.input, input.synthetic) {
        (_, Some(Synthetic::TwoSpheres)) => Source::TwoSpheres { n: input.n, sigma: input.sigma, seed: model.seed },
        (_, Some(Synthetic::Spheroids)) => Source::DynamicSpheroids { n: input.n, seed: model.seed },
        (Some(path), None) => match input.format {
            InputFormat::Libsvm => {
                let dim = input
                    .dim
                    .or(model.dataset.map(|d| dataset_defaults(d).dim))
                    .ok_or_else(|| CliError::config("LIBSVM input needs --dim or --dataset"))?;
                Source::Libsvm { path: path.clone(), dim }
            }
            InputFormat::Csv => Source::Csv { path: path.clone(), labeled: input.labels },
        },
        (None, None) => return Err(CliError::config("no input: pass --input or --synthetic")),
    };
    let mut cfg = StreamConfig::new(source);
    cfg.shuffle_seed = input.shuffle.then_some(model.seed);
    cfg.standardize = input.standardize;
    let (samples, constant) = cfg.load().map_err(|e| match (e, &input.input) {
        (Error::Io(io), Some(path)) => {
            CliError::from(std::io::Error::new(io.kind(), format!("{}: {io}", path.display())))
        }
        (e, _) => CliError::from(e),
    })?;
    let warnings = if constant.is_empty() {
        Vec::new()
    } else {
        vec![format!("constant coordinates left unscaled: {constant:?}")]
    };
    Ok((samples, warnings))
}

/// Labels of a stream that must be fully labeled.
pub fn require_labels(samples: &[Sample<f64>], task: &str) -> CliResult<Vec<f64>> {
    samples
        .iter()
        .enumerate()
        .map(|(i, s)| {
            s.y.ok_or_else(|| CliError::config(format!("{task} needs labeled input; sample {} has none", i + 1)))
        })
        .collect()
}
