//! Subcommand pipelines.

use std::io::Write;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use okfeb::approx::{
    approx_kernel_matrix, check_kernel_mismatch_bound, check_ridge_stability_bound, error_records, extract_all,
    kernel_mismatch, FeatureMap, WindowedMismatch,
};
use okfeb::data::{gen_dynamic_spheroids, gen_two_spheres, write_libsvm, Sample};
use okfeb::learners::{Lms, Pegasos};
use okfeb::Report;
use serde::Serialize;

use crate::args::{
    ApproxArgs, CheckBoundsArgs, ClassifyArgs, InputFormat, OutputArgs, RegressArgs, SynthArgs, Synthetic, TrackArgs,
};
use crate::config::{load_samples, require_labels, CliError, CliResult, Settings};
use crate::report::{emit_summary, open_output, warn, MetricsLine, SegmentStats, Sink, Summary};

pub fn synth(args: &SynthArgs) -> CliResult<()> {
    let mut samples: Vec<Sample<f64>> = match args.kind {
        Synthetic::TwoSpheres => gen_two_spheres(args.n, args.sigma, args.seed)?,
        Synthetic::Spheroids => gen_dynamic_spheroids(args.n, args.seed)?,
    };
    let mut out = open_output(args.output.as_deref())?;
    match args.format {
        InputFormat::Libsvm => {
            // LIBSVM lines always carry a label; unlabeled streams get 0.
            for s in samples.iter_mut().filter(|s| s.y.is_none()) {
                s.y = Some(0.0);
            }
            write_libsvm(&samples, &mut out)?;
        }
        InputFormat::Csv => {
            let mut w = csv::Writer::from_writer(&mut out);
            for s in &samples {
                let row: Vec<String> = s.y.iter().chain(s.x.iter()).map(|v| v.to_string()).collect();
                w.write_record(&row)?;
            }
            w.flush()?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Supervised learner fed with the features of each sample.
enum Learner {
    Unsupervised,
    Classifier { svm: Pegasos<f64>, labels: Vec<f64>, correct: usize },
    Regressor { lms: Lms<f64>, targets: Vec<f64>, sq_err: f64 },
}

impl Learner {
    fn uses_features(&self) -> bool {
        !matches!(self, Learner::Unsupervised)
    }

    /// Predicts sample `i` from `z`, then trains on it. Returns the running
    /// accuracy or mean squared error.
    fn observe(&mut self, i: usize, z: &DVector<f64>) -> CliResult<(Option<f64>, Option<f64>)> {
        let seen = (i + 1) as f64;
        match self {
            Learner::Unsupervised => Ok((None, None)),
            Learner::Classifier { svm, labels, correct } => {
                let y = labels[i];
                if svm.classify(z)? == y {
                    *correct += 1;
                }
                svm.step(z, y)?;
                Ok((Some(*correct as f64 / seen), None))
            }
            Learner::Regressor { lms, targets, sq_err } => {
                let y = targets[i];
                let resid = y - lms.predict(z)?;
                *sq_err += resid * resid;
                lms.step(z, y)?;
                Ok((None, Some(*sq_err / seen)))
            }
        }
    }
}

struct StreamOutcome {
    summary: Summary,
    extractor: okfeb::Extractor,
}

fn run_stream(
    command: &'static str,
    samples: &[Sample<f64>],
    settings: &Settings,
    out: &OutputArgs,
    window: Option<usize>,
    segments: Vec<usize>,
    mut learner: Learner,
) -> CliResult<StreamOutcome> {
    if out.every == 0 {
        return Err(CliError::config("--every must be at least 1"));
    }
    let started = Instant::now();
    let mut ex = settings.extractor()?;
    let mut sink = Sink::open(out.output.as_deref(), out.csv)?;
    let mut windows = window.map(WindowedMismatch::new).transpose()?;
    let mut stats = SegmentStats::new(segments);
    let (mut fit_sum, mut admitted) = (0.0, 0usize);
    let (mut accuracy, mut mse) = (None, None);

    for (i, sample) in samples.iter().enumerate() {
        let t0 = Instant::now();
        let map = if learner.uses_features() { ex.model().map(FeatureMap::from_model).transpose()? } else { None };
        let res = ex.step(&sample.x)?;
        if learner.uses_features() {
            let z = match &map {
                Some(m) => m.map(&res.q)?,
                None => DVector::zeros(settings.rank),
            };
            (accuracy, mse) = learner.observe(i, &z)?;
        }
        let elapsed = t0.elapsed();

        let model = ex.model().expect("model exists after the first step");
        let window_mismatch = match windows.as_mut() {
            Some(w) => w.push(&sample.x, model)?,
            None => None,
        };
        fit_sum += res.fit;
        admitted += usize::from(!res.censored);
        stats.push(res.n, res.fit);
        if res.n % out.every == 0 || res.n == samples.len() {
            sink.write(&MetricsLine {
                n: res.n,
                ls_fit: res.fit,
                censored: res.censored,
                sv_count: res.sv_count,
                removed_index: res.removed_index,
                cum_avg_fit: fit_sum / res.n as f64,
                elapsed_ns: out.timing.then_some(elapsed.as_nanos() as u64),
                accuracy,
                mse,
                window_mismatch,
            })?;
        }
    }
    sink.finish()?;

    let n = samples.len();
    let summary = Summary {
        command,
        samples: n,
        admitted,
        sv_count: ex.model().map_or(0, |m| m.len()),
        cum_avg_fit: (n > 0).then(|| fit_sum / n as f64),
        segments: stats.finish(),
        accuracy,
        mse,
        mean_window_mismatch: windows.and_then(|w| w.mean()),
        kernel_mismatch: None,
        runtime_s: started.elapsed().as_secs_f64(),
    };
    Ok(StreamOutcome { summary, extractor: ex })
}

fn prepare(settings: &Settings, warnings: Vec<String>) {
    for w in settings.warnings.iter().chain(&warnings) {
        warn(w);
    }
}

pub fn track(args: &TrackArgs) -> CliResult<()> {
    let settings = Settings::resolve(&args.model, None)?;
    let (samples, warnings) = load_samples(&args.input, &args.model)?;
    prepare(&settings, warnings);
    let outcome = run_stream(
        "track",
        &samples,
        &settings,
        &args.output,
        args.output.window,
        args.segments.clone(),
        Learner::Unsupervised,
    )?;
    emit_summary(&outcome.summary)
}

pub fn approx(args: &ApproxArgs) -> CliResult<()> {
    let settings = Settings::resolve(&args.model, None)?;
    let (samples, warnings) = load_samples(&args.input, &args.model)?;
    prepare(&settings, warnings);
    let window = Some(args.output.window.unwrap_or(100));
    let mut outcome =
        run_stream("approx", &samples, &settings, &args.output, window, Vec::new(), Learner::Unsupervised)?;
    if let Some(model) = outcome.extractor.model() {
        if samples.len() <= args.max_n {
            let xs: Vec<_> = samples.iter().map(|s| s.x.clone()).collect();
            let k = model.kernel().kernel_matrix(&xs)?;
            let k_hat = approx_kernel_matrix(model, &extract_all(model, &xs)?)?;
            outcome.summary.kernel_mismatch = Some(kernel_mismatch(&k, &k_hat)?);
        } else {
            warn(&format!(
                "stream of {} samples exceeds --max-n {}; full kernel comparison skipped",
                samples.len(),
                args.max_n
            ));
        }
    }
    emit_summary(&outcome.summary)
}

pub fn classify(args: &ClassifyArgs) -> CliResult<()> {
    let settings = Settings::resolve(&args.model, args.svm_c)?;
    let (samples, warnings) = load_samples(&args.input, &args.model)?;
    let labels = require_labels(&samples, "classify")?;
    if let Some((i, y)) = labels.iter().enumerate().find(|(_, y)| y.abs() != 1.0) {
        return Err(CliError::config(format!("classify needs labels +1 or -1; sample {} has {y}", i + 1)));
    }
    prepare(&settings, warnings);
    let learner = Learner::Classifier { svm: Pegasos::new(settings.rank, settings.svm_c)?, labels, correct: 0 };
    let outcome = run_stream("classify", &samples, &settings, &args.output, args.output.window, Vec::new(), learner)?;
    emit_summary(&outcome.summary)
}

pub fn regress(args: &RegressArgs) -> CliResult<()> {
    let settings = Settings::resolve(&args.model, None)?;
    let (samples, warnings) = load_samples(&args.input, &args.model)?;
    let targets = require_labels(&samples, "regress")?;
    prepare(&settings, warnings);
    let mut lms = Lms::new(settings.rank, args.lms_lambda)?;
    if let Some(mu) = args.lms_step {
        lms = lms.with_step(mu)?;
    }
    let learner = Learner::Regressor { lms, targets, sq_err: 0.0 };
    let outcome = run_stream("regress", &samples, &settings, &args.output, args.output.window, Vec::new(), learner)?;
    emit_summary(&outcome.summary)
}

#[derive(Serialize)]
struct BoundLine {
    bound: &'static str,
    lhs: f64,
    rhs: f64,
    holds: bool,
    slack: f64,
    hypothesis_ok: bool,
}

impl BoundLine {
    fn new(bound: &'static str, r: &Report) -> Self {
        BoundLine { bound, lhs: r.lhs, rhs: r.rhs, holds: r.holds, slack: r.slack, hypothesis_ok: r.hypothesis_ok }
    }
}

pub fn check_bounds(args: &CheckBoundsArgs) -> CliResult<()> {
    let settings = Settings::resolve(&args.model, None)?;
    let (samples, warnings) = load_samples(&args.input, &args.model)?;
    if samples.is_empty() {
        return Err(CliError::config("check-bounds needs at least one sample"));
    }
    if samples.len() > args.max_n {
        return Err(CliError::config(format!("dataset has {} samples, above --max-n {}", samples.len(), args.max_n)));
    }
    prepare(&settings, warnings);

    let mut ex = settings.extractor()?;
    for s in &samples {
        ex.step(&s.x)?;
    }
    let model = ex.model().expect("model exists after the first step");
    let xs: Vec<_> = samples.iter().map(|s| s.x.clone()).collect();
    let q: DMatrix<f64> = extract_all(model, &xs)?;
    let k = model.kernel().kernel_matrix(&xs)?;
    let k_hat = approx_kernel_matrix(model, &q)?;
    let errors = error_records(model, &xs, &q, None)?;

    let mut reports = vec![BoundLine::new("kernel_mismatch", &check_kernel_mismatch_bound(&errors, &k, &k_hat)?)];
    if samples.iter().all(|s| s.y.is_some()) {
        let y = DVector::from_iterator(samples.len(), samples.iter().map(|s| s.y.unwrap_or_default()));
        let ridge = check_ridge_stability_bound(&k, &k_hat, &y, args.ridge_lambda)?;
        reports.push(BoundLine::new("ridge_stability", &ridge));
    } else {
        warn("unlabeled input: ridge stability check skipped");
    }

    let mut sink = Sink::open(args.output.as_deref(), false)?;
    for r in &reports {
        sink.write(r)?;
    }
    sink.finish()?;

    let failed: Vec<_> = reports.iter().filter(|r| r.hypothesis_ok && !r.holds).map(|r| r.bound).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::bound(format!("bound violated: {}", failed.join(", "))))
    }
}
