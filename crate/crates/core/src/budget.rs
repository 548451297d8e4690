//! Censored, budgeted streaming extraction.
//!
//! Each sample is projected onto the current subspace. Samples that already
//! fit well (LS fit below `ε`) are censored and leave the subspace untouched.
//! Admitted samples join the support, trigger a nonparametric step and, when
//! the support exceeds `B`, one support vector is evicted.

use std::collections::VecDeque;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::subspace::{FactorInit, FeatureVector, StepSchedule, SubspaceModel};
use crate::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CensorMode {
    Fixed,
    Adaptive,
}

/// Censoring threshold, fixed or steered toward a target admission rate.
///
/// In adaptive mode `ε = mean(recent fits) · c`, where the correction `c`
/// integrates `(observed rate / target rate)^gain` after every decision. The
/// threshold starts at zero, so the first samples are always admitted.
#[derive(Clone, Debug, PartialEq)]
pub struct CensorPolicy<T> {
    mode: CensorMode,
    epsilon: T,
    window: usize,
    target_rate: T,
    gain: T,
    correction: T,
    fits: VecDeque<T>,
    admissions: VecDeque<bool>,
}

const CORRECTION_RANGE: (f64, f64) = (1e-6, 1e6);

impl<T: Real> CensorPolicy<T> {
    pub fn fixed(epsilon: T) -> Result<Self> {
        if !(epsilon >= T::zero()) {
            return Err(Error::InvalidParameter(format!("epsilon must be non-negative, got {epsilon}")));
        }
        Ok(Self::build(CensorMode::Fixed, epsilon, T::one()))
    }

    /// Never censors.
    pub fn admit_all() -> Self {
        Self::build(CensorMode::Fixed, T::zero(), T::one())
    }

    /// `target_rate` is the desired fraction of admitted samples, in `(0, 1]`.
    pub fn adaptive(target_rate: T) -> Result<Self> {
        if !(target_rate > T::zero() && target_rate <= T::one()) {
            return Err(Error::InvalidParameter(format!("target rate must lie in (0, 1], got {target_rate}")));
        }
        Ok(Self::build(CensorMode::Adaptive, T::zero(), target_rate))
    }

    fn build(mode: CensorMode, epsilon: T, target_rate: T) -> Self {
        CensorPolicy {
            mode,
            epsilon,
            window: 100,
            target_rate,
            gain: T::lit(0.05),
            correction: T::one(),
            fits: VecDeque::new(),
            admissions: VecDeque::new(),
        }
    }

    /// Moving-window length for the adaptive statistics.
    pub fn with_window(mut self, window: usize) -> Result<Self> {
        if window == 0 {
            return Err(Error::InvalidParameter("window must be at least 1".into()));
        }
        self.window = window;
        Ok(self)
    }

    /// Exponent applied to the rate ratio on each correction.
    pub fn with_gain(mut self, gain: T) -> Result<Self> {
        if !(gain > T::zero()) || !gain.is_finite() {
            return Err(Error::InvalidParameter(format!("gain must be positive, got {gain}")));
        }
        self.gain = gain;
        Ok(self)
    }

    pub fn mode(&self) -> CensorMode {
        self.mode
    }

    pub fn epsilon(&self) -> T {
        self.epsilon
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn target_rate(&self) -> T {
        self.target_rate
    }

    /// Fits currently held in the moving window.
    pub fn history(&self) -> impl Iterator<Item = &T> {
        self.fits.iter()
    }

    /// True when the sample should be censored (`fit < ε`). Adaptive mode
    /// also records the fit.
    pub fn censor_decide(&mut self, fit: T) -> bool {
        if self.mode == CensorMode::Adaptive {
            push_bounded(&mut self.fits, fit, self.window);
        }
        fit < self.epsilon
    }

    /// Records whether the last decided sample was admitted.
    pub fn record_admission(&mut self, admitted: bool) {
        if self.mode == CensorMode::Adaptive {
            push_bounded(&mut self.admissions, admitted, self.window);
        }
    }

    /// Recomputes `ε` from the window. Fixed mode returns `ε` unchanged.
    pub fn adapt_threshold(&mut self) -> T {
        if self.mode == CensorMode::Fixed {
            return self.epsilon;
        }
        if self.fits.is_empty() {
            self.epsilon = T::zero();
            return self.epsilon;
        }
        if !self.admissions.is_empty() {
            let admitted = self.admissions.iter().filter(|a| **a).count();
            let observed = T::from_usize_lossy(admitted) / T::from_usize_lossy(self.admissions.len());
            // floor keeps the ratio finite once admissions dry up
            let floor = T::one() / T::from_usize_lossy(self.window);
            let ratio = observed.max(floor) / self.target_rate;
            let (lo, hi) = CORRECTION_RANGE;
            self.correction = (self.correction * ratio.powf(self.gain)).clamp(T::lit(lo), T::lit(hi));
        }
        let mean = self.fits.iter().fold(T::zero(), |a, b| a + *b) / T::from_usize_lossy(self.fits.len());
        let mut next = mean * self.correction;
        let prev = self.epsilon;
        if prev > T::zero() {
            next = next.clamp(prev * T::lit(0.5), prev * T::lit(2.0));
        }
        self.epsilon = next;
        next
    }
}

fn push_bounded<V>(buf: &mut VecDeque<V>, v: V, cap: usize) {
    if buf.len() == cap {
        buf.pop_front();
    }
    buf.push_back(v);
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RemovalRule {
    /// Smallest `η_i ‖a_i‖₂`.
    RecencyMinNorm,
    /// Exhaustive minimizer of [`distortion_of_removal`].
    BruteForce,
    /// Oldest support vector.
    Fifo,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BudgetPolicy<T> {
    /// Maximum support size; `usize::MAX` disables maintenance.
    pub budget: usize,
    /// Recency forgetting factor in `(0, 1]`.
    pub beta: T,
    pub rule: RemovalRule,
}

impl<T: Real> BudgetPolicy<T> {
    pub fn new(budget: usize, beta: T, rule: RemovalRule) -> Result<Self> {
        if budget == 0 {
            return Err(Error::InvalidParameter("budget must be at least 1".into()));
        }
        if !(beta > T::zero() && beta <= T::one()) {
            return Err(Error::InvalidParameter(format!("beta must lie in (0, 1], got {beta}")));
        }
        Ok(BudgetPolicy { budget, beta, rule })
    }

    pub fn unbounded() -> Self {
        BudgetPolicy { budget: usize::MAX, beta: T::one(), rule: RemovalRule::RecencyMinNorm }
    }
}

/// Outcome of one streaming step.
#[derive(Clone, Debug, PartialEq)]
pub struct StepResult<T: Real> {
    /// 1-based sample index.
    pub n: usize,
    pub q: FeatureVector<T>,
    /// Unscaled LS fit against the subspace before the step.
    pub fit: T,
    pub censored: bool,
    pub removed_index: Option<usize>,
    pub sv_count: usize,
}

/// One streaming step on an initialized model.
pub fn okfeb_step<T: Real>(
    model: &mut SubspaceModel<T>,
    x: &DVector<T>,
    censor: &mut CensorPolicy<T>,
    budget: &BudgetPolicy<T>,
    schedule: &StepSchedule<T>,
) -> Result<StepResult<T>> {
    let p = model.project(x)?;
    let fit = model.fit_of(&p)?;
    let n = model.samples_seen() + 1;
    let censored = censor.censor_decide(fit);
    censor.record_admission(!censored);
    censor.adapt_threshold();
    let q = p.q.clone();
    if censored {
        model.skip_sample();
        return Ok(StepResult { n, q, fit, censored, removed_index: None, sv_count: model.len() });
    }
    let mu = schedule.step(n, &p.q);
    model.degrade_recency(budget.beta);
    model.nonparametric_update_projected(x, p, mu)?;
    let removed_index = if model.len() > budget.budget { Some(maintain_budget(model, budget)?) } else { None };
    Ok(StepResult { n, q, fit, censored, removed_index, sv_count: model.len() })
}

/// Evicts one support vector from a model holding exactly `B + 1`.
pub fn maintain_budget<T: Real>(model: &mut SubspaceModel<T>, budget: &BudgetPolicy<T>) -> Result<usize> {
    if budget.budget == usize::MAX || model.len() != budget.budget + 1 {
        return Err(Error::Precondition(format!(
            "budget maintenance needs |S| = B + 1, got |S| = {} with B = {}",
            model.len(),
            budget.budget
        )));
    }
    let idx = select_removal(model, budget.rule)?;
    model.remove_support(idx)?;
    Ok(idx)
}

/// Index the rule would evict. Ties go to the smallest index.
pub fn select_removal<T: Real>(model: &SubspaceModel<T>, rule: RemovalRule) -> Result<usize> {
    match rule {
        RemovalRule::Fifo => Ok(0),
        RemovalRule::RecencyMinNorm => {
            let a = model.factor();
            let scores = model.support().iter().enumerate().map(|(i, sv)| sv.eta * a.row(i).norm());
            Ok(argmin(scores))
        }
        RemovalRule::BruteForce => {
            let scores = (0..model.len()).map(|i| distortion_of_removal(model, i)).collect::<Result<Vec<_>>>()?;
            Ok(argmin(scores.into_iter()))
        }
    }
}

fn argmin<T: Real>(scores: impl Iterator<Item = T>) -> usize {
    let mut best = (0, None::<T>);
    for (i, s) in scores.enumerate() {
        if best.1.is_none_or(|b| s < b) {
            best = (i, Some(s));
        }
    }
    best.0
}

/// `‖Φ_S A − Φ_{S∖i} A_{∖i}‖²_HS`, evaluated through the trace expression
/// `tr{AᵀK_S A − 2A_{∖i}ᵀK(S∖i, S)A + A_{∖i}ᵀK(S∖i, S∖i)A_{∖i}}`.
pub fn distortion_of_removal<T: Real>(model: &SubspaceModel<T>, i: usize) -> Result<T> {
    let s = model.len();
    if i >= s {
        return Err(Error::IndexOutOfRange { index: i, len: s });
    }
    let a = model.factor();
    let k = model.support_gram();
    let r = a.ncols();
    let full = model.projected_gram().trace();
    let mut cross = T::zero();
    let mut kept = T::zero();
    for c in 0..r {
        for j in (0..s).filter(|&j| j != i) {
            let mut row_all = T::zero();
            let mut row_kept = T::zero();
            for m in 0..s {
                let v = k.get(j, m) * a[(m, c)];
                row_all += v;
                if m != i {
                    row_kept += v;
                }
            }
            cross += a[(j, c)] * row_all;
            kept += a[(j, c)] * row_kept;
        }
    }
    Ok(full - (cross + cross) + kept)
}

/// Streaming extractor: owns the model and the censoring state.
#[derive(Clone, Debug)]
pub struct OkFeb<T: Real> {
    kernel: KernelSpec<T>,
    rank: usize,
    lambda: T,
    init: FactorInit,
    pub censor: CensorPolicy<T>,
    pub budget: BudgetPolicy<T>,
    pub schedule: StepSchedule<T>,
    model: Option<SubspaceModel<T>>,
}

impl<T: Real> OkFeb<T> {
    pub fn new(
        kernel: KernelSpec<T>,
        rank: usize,
        lambda: T,
        censor: CensorPolicy<T>,
        budget: BudgetPolicy<T>,
        schedule: StepSchedule<T>,
        init: FactorInit,
    ) -> Result<Self> {
        kernel.validate()?;
        if rank == 0 {
            return Err(Error::InvalidParameter("rank must be at least 1".into()));
        }
        if lambda < T::zero() || !lambda.is_finite() {
            return Err(Error::InvalidParameter(format!("lambda must be finite and non-negative, got {lambda}")));
        }
        Ok(OkFeb { kernel, rank, lambda, init, censor, budget, schedule, model: None })
    }

    pub fn kernel(&self) -> &KernelSpec<T> {
        &self.kernel
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn model(&self) -> Option<&SubspaceModel<T>> {
        self.model.as_ref()
    }

    pub fn into_model(self) -> Option<SubspaceModel<T>> {
        self.model
    }

    /// Processes one sample. The first sample seeds the model and reports
    /// `q = 0` with fit `κ(x, x)`.
    pub fn step(&mut self, x: &DVector<T>) -> Result<StepResult<T>> {
        match self.model.as_mut() {
            Some(model) => okfeb_step(model, x, &mut self.censor, &self.budget, &self.schedule),
            None => {
                let fit = self.kernel.eval(x, x)?;
                self.model = Some(SubspaceModel::new(self.kernel, x.clone(), self.rank, self.lambda, self.init)?);
                Ok(StepResult {
                    n: 1,
                    q: FeatureVector::zeros(self.rank),
                    fit,
                    censored: false,
                    removed_index: None,
                    sv_count: 1,
                })
            }
        }
    }
}
