//! The virtual subspace `L̄ = Φ_S A` and its solvers.
//!
//! [`SubspaceModel`] stores the support vectors `S`, the factor `A`
//! (`|S| × r`) and the support Gram `K_S`, plus the cached projected Gram
//! `AᵀK_S A` and the Cholesky factor of `AᵀK_S A + λI` used for feature
//! extraction. Three solvers act on it:
//!
//! * [`batch_bkfe`]: alternating closed-form minimization over a whole
//!   dataset.
//! * [`SubspaceModel::parametric_update`]: an SGD step on `L̄` written back
//!   as a bordered update of `A`.
//! * [`SubspaceModel::nonparametric_update`]: an SGD step taken directly on
//!   `A`, which is `L̄`'s step preconditioned by `Φ Φᵀ`.
//!
//! [`OnlineTracker`] drives either online rule over an unbudgeted stream.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_dim, Error, Result};
use crate::kernel::KernelSpec;
use crate::linalg::spd_factor;
use crate::{Real, SupportGram};

/// Regularized projection coefficients `q` of one lifted sample.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector<T: Real> {
    pub q: DVector<T>,
}

impl<T: Real> FeatureVector<T> {
    pub fn new(q: DVector<T>) -> Self {
        FeatureVector { q }
    }

    pub fn zeros(rank: usize) -> Self {
        FeatureVector { q: DVector::zeros(rank) }
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    pub fn norm(&self) -> T {
        self.q.norm()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepMode {
    /// `c / n`
    Harmonic,
    /// `c / n²`
    HarmonicSq,
    /// `c / ‖q‖₂`
    InvFeatureNorm,
    /// `c`
    Constant,
}

/// Step-size rule for the online updates. `n` is the index of the sample
/// being processed (1-based).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepSchedule<T> {
    pub mode: StepMode,
    pub scale: T,
}

impl<T: Real> StepSchedule<T> {
    pub fn new(mode: StepMode, scale: T) -> Result<Self> {
        if !(scale > T::zero()) || !scale.is_finite() {
            return Err(Error::InvalidParameter(format!("step scale must be positive, got {scale}")));
        }
        Ok(StepSchedule { mode, scale })
    }

    pub fn harmonic(scale: T) -> Self {
        StepSchedule { mode: StepMode::Harmonic, scale }
    }

    pub fn harmonic_sq(scale: T) -> Self {
        StepSchedule { mode: StepMode::HarmonicSq, scale }
    }

    pub fn inv_feature_norm() -> Self {
        StepSchedule { mode: StepMode::InvFeatureNorm, scale: T::one() }
    }

    pub fn constant(scale: T) -> Self {
        StepSchedule { mode: StepMode::Constant, scale }
    }

    /// A zero feature under [`StepMode::InvFeatureNorm`] yields a zero step.
    pub fn step(&self, n: usize, q: &FeatureVector<T>) -> T {
        let nf = T::from_usize_lossy(n.max(1));
        match self.mode {
            StepMode::Harmonic => self.scale / nf,
            StepMode::HarmonicSq => self.scale / (nf * nf),
            StepMode::InvFeatureNorm => {
                let norm = q.norm();
                if norm > T::zero() {
                    self.scale / norm
                } else {
                    T::zero()
                }
            }
            StepMode::Constant => self.scale,
        }
    }
}

/// How the first row of `A` is initialized.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FactorInit {
    /// All ones.
    Ones,
    /// I.i.d. `uniform(0, 1) · scale`, seeded.
    Random { seed: u64, scale: f64 },
}

impl FactorInit {
    pub fn random(seed: u64) -> Self {
        FactorInit::Random { seed, scale: 0.1 }
    }

    pub(crate) fn matrix<T: Real>(&self, rows: usize, cols: usize) -> DMatrix<T> {
        match *self {
            FactorInit::Ones => DMatrix::from_element(rows, cols, T::one()),
            FactorInit::Random { seed, scale } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                // row-major draw order so that the first row is stable across shapes
                let mut m = DMatrix::zeros(rows, cols);
                for i in 0..rows {
                    for j in 0..cols {
                        m[(i, j)] = T::lit(rng.random::<f64>() * scale);
                    }
                }
                m
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SupportVector<T: Real> {
    pub x: DVector<T>,
    /// Recency weight in `(0, 1]`; 1 for the newest admission.
    pub eta: T,
}

/// Kernel evaluations of one sample against the current support.
#[derive(Clone, Debug)]
pub(crate) struct Projection<T: Real> {
    pub q: FeatureVector<T>,
    /// `k(x_S, x)`
    pub kvec: DVector<T>,
    /// `Aᵀ k(x_S, x)`
    pub coupling: DVector<T>,
    /// `κ(x, x)`
    pub self_k: T,
}

/// Consistency of the cached quantities against a from-scratch recompute.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AuditReport<T> {
    /// `max |K_S - kernel_matrix(S)|`
    pub gram_error: T,
    /// `‖AᵀK_S A (cached) - AᵀK_S A‖_F / max(1, ‖AᵀK_S A‖_F)`
    pub projection_error: T,
    /// `‖M_cache (AᵀK_S A + λI) - I‖_F`, `None` when no factorization is cached.
    pub inverse_error: Option<T>,
}

#[derive(Clone, Debug)]
pub struct SubspaceModel<T: Real> {
    kernel: KernelSpec<T>,
    support: Vec<SupportVector<T>>,
    factor: DMatrix<T>,
    gram: SupportGram<T>,
    lambda: T,
    samples_seen: usize,
    kernel_factor: Option<DMatrix<T>>,
    projected: DMatrix<T>,
    system: Option<Cholesky<T, Dyn>>,
}

fn validate_lambda<T: Real>(lambda: T) -> Result<()> {
    if lambda < T::zero() || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!("lambda must be finite and non-negative, got {lambda}")));
    }
    Ok(())
}

fn validate_point<T: Real>(x: &DVector<T>) -> Result<()> {
    if x.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !x.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidParameter("sample has non-finite entries".into()));
    }
    Ok(())
}

impl<T: Real> SubspaceModel<T> {
    /// Starts a model from its first sample: `S = {x}`, `A` one row, `n = 1`.
    pub fn new(kernel: KernelSpec<T>, first: DVector<T>, rank: usize, lambda: T, init: FactorInit) -> Result<Self> {
        if rank == 0 {
            return Err(Error::InvalidParameter("rank must be at least 1".into()));
        }
        Self::from_parts(kernel, vec![first], init.matrix(1, rank), lambda, 1)
    }

    /// Builds a model from an explicit support set and factor.
    pub fn from_parts(
        kernel: KernelSpec<T>,
        support: Vec<DVector<T>>,
        factor: DMatrix<T>,
        lambda: T,
        samples_seen: usize,
    ) -> Result<Self> {
        kernel.validate()?;
        validate_lambda(lambda)?;
        if support.is_empty() {
            return Err(Error::EmptyInput);
        }
        check_dim(support.len(), factor.nrows())?;
        if factor.ncols() == 0 {
            return Err(Error::InvalidParameter("rank must be at least 1".into()));
        }
        let d = support[0].len();
        for x in &support {
            validate_point(x)?;
            check_dim(d, x.len())?;
        }
        let gram = SupportGram::from_matrix(&kernel.kernel_matrix(&support)?)?;
        let rank = factor.ncols();
        let mut model = SubspaceModel {
            kernel,
            support: support.into_iter().map(|x| SupportVector { x, eta: T::one() }).collect(),
            factor,
            gram,
            lambda,
            samples_seen: samples_seen.max(1),
            kernel_factor: None,
            projected: DMatrix::zeros(rank, rank),
            system: None,
        };
        model.recompute_projection()?;
        model.refresh_system();
        Ok(model)
    }

    pub fn kernel(&self) -> &KernelSpec<T> {
        &self.kernel
    }

    pub fn support(&self) -> &[SupportVector<T>] {
        &self.support
    }

    pub fn support_points(&self) -> Vec<DVector<T>> {
        self.support.iter().map(|s| s.x.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.support[0].x.len()
    }

    pub fn rank(&self) -> usize {
        self.factor.ncols()
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    /// Global sample counter `n` (samples seen, censored ones included).
    pub fn samples_seen(&self) -> usize {
        self.samples_seen
    }

    /// The factor `A` (`|S| × r`).
    pub fn factor(&self) -> &DMatrix<T> {
        &self.factor
    }

    /// Dense copy of the support Gram `K_S`.
    pub fn gram(&self) -> DMatrix<T> {
        self.gram.to_matrix()
    }

    pub fn support_gram(&self) -> &SupportGram<T> {
        &self.gram
    }

    /// Cached `AᵀK_S A`.
    pub fn projected_gram(&self) -> &DMatrix<T> {
        &self.projected
    }

    /// Whether `(AᵀK_S A + λI)` currently has a valid cached factorization.
    pub fn has_valid_system(&self) -> bool {
        self.system.is_some()
    }

    /// `(AᵀK_S A + λI)⁻¹` from the cached factorization. Test and audit use
    /// only; extraction solves against the factor.
    pub fn cached_inverse(&self) -> Option<DMatrix<T>> {
        self.system.as_ref().map(|c| c.inverse())
    }

    /// Recency weights, oldest support vector first.
    pub fn recency(&self) -> Vec<T> {
        self.support.iter().map(|s| s.eta).collect()
    }

    /// Overwrites the recency weights.
    pub fn set_recency(&mut self, etas: &[T]) -> Result<()> {
        check_dim(self.support.len(), etas.len())?;
        for (s, &eta) in self.support.iter_mut().zip(etas) {
            if !(eta > T::zero() && eta <= T::one()) {
                return Err(Error::InvalidParameter(format!("recency weight {eta} outside (0, 1]")));
            }
            s.eta = eta;
        }
        Ok(())
    }

    /// Multiplies every recency weight by `beta`.
    pub fn degrade_recency(&mut self, beta: T) {
        for s in &mut self.support {
            s.eta *= beta;
        }
    }

    /// Counts a sample that did not change the subspace.
    pub fn skip_sample(&mut self) {
        self.samples_seen += 1;
    }

    fn recompute_projection(&mut self) -> Result<()> {
        let ka = self.gram.mul_mat(&self.factor)?;
        self.projected = symmetrize(self.factor.tr_mul(&ka));
        self.kernel_factor = Some(ka);
        Ok(())
    }

    fn refresh_system(&mut self) {
        let r = self.rank();
        let mut m = self.projected.clone();
        for i in 0..r {
            m[(i, i)] += self.lambda;
        }
        self.system = spd_factor(&m, self.lambda > T::zero());
    }

    pub(crate) fn project(&self, x: &DVector<T>) -> Result<Projection<T>> {
        check_dim(self.dim(), x.len())?;
        let kvec = self.kernel.kernel_vector_iter(self.support.iter().map(|s| &s.x), x, self.len())?;
        let coupling = self.factor.tr_mul(&kvec);
        let system = self.system.as_ref().ok_or(Error::Singular)?;
        let q = system.solve(&coupling);
        if !q.iter().all(|v| v.is_finite()) {
            return Err(Error::Singular);
        }
        let self_k = self.kernel.eval_slices(x.as_slice(), x.as_slice());
        Ok(Projection { q: FeatureVector::new(q), kvec, coupling, self_k })
    }

    /// `q = (AᵀK_S A + λI)⁻¹ Aᵀ k(x_S, x)`.
    pub fn extract_feature(&self, x: &DVector<T>) -> Result<FeatureVector<T>> {
        Ok(self.project(x)?.q)
    }

    /// Unscaled LS fit `κ(x,x) - 2kᵀAq + qᵀAᵀK_S Aq = ‖φ(x) - L̄q‖²`.
    pub fn ls_fit(&self, x: &DVector<T>, q: &FeatureVector<T>) -> Result<T> {
        check_dim(self.dim(), x.len())?;
        check_dim(self.rank(), q.dim())?;
        let kvec = self.kernel.kernel_vector_iter(self.support.iter().map(|s| &s.x), x, self.len())?;
        let coupling = self.factor.tr_mul(&kvec);
        let self_k = self.kernel.eval_slices(x.as_slice(), x.as_slice());
        self.fit_from(self_k, &coupling, q)
    }

    pub(crate) fn fit_from(&self, self_k: T, coupling: &DVector<T>, q: &FeatureVector<T>) -> Result<T> {
        let cross = coupling.dot(&q.q);
        let quad = q.q.dot(&(&self.projected * &q.q));
        let fit = self_k - (cross + cross) + quad;
        clamp_fit(fit, self_k.abs() + (cross + cross).abs() + quad.abs())
    }

    pub(crate) fn fit_of(&self, p: &Projection<T>) -> Result<T> {
        self.fit_from(p.self_k, &p.coupling, &p.q)
    }

    fn check_update_args(&self, q: &FeatureVector<T>, mu: T) -> Result<()> {
        check_dim(self.rank(), q.dim())?;
        if mu < T::zero() || !mu.is_finite() {
            return Err(Error::InvalidParameter(format!("step size must be finite and non-negative, got {mu}")));
        }
        Ok(())
    }

    /// Parametric SGD step: `A ← [A − μA(qqᵀ + (λ/n)I); μqᵀ]`, with `x`
    /// admitted to the support.
    ///
    /// `AᵀK_S A` is carried forward in `O(r³)` rather than recomputed.
    pub fn parametric_update(&mut self, x: &DVector<T>, q: &FeatureVector<T>, mu: T) -> Result<()> {
        self.check_update_args(q, mu)?;
        check_dim(self.dim(), x.len())?;
        validate_point(x)?;
        let kvec = self.kernel.kernel_vector_iter(self.support.iter().map(|s| &s.x), x, self.len())?;
        let coupling = self.factor.tr_mul(&kvec);
        let self_k = self.kernel.eval_slices(x.as_slice(), x.as_slice());

        self.samples_seen += 1;
        let r = self.rank();
        let s = self.len();
        let reg = self.lambda / T::from_usize_lossy(self.samples_seen);
        let qq = &q.q * q.q.transpose();
        let mut contraction = DMatrix::identity(r, r) - (&qq * mu);
        for i in 0..r {
            contraction[(i, i)] -= mu * reg;
        }

        let mut next = DMatrix::zeros(s + 1, r);
        next.rows_mut(0, s).copy_from(&(&self.factor * &contraction));
        next.row_mut(s).copy_from(&(q.q.transpose() * mu));

        let cb = contraction.tr_mul(&coupling);
        let cross = &cb * q.q.transpose() * mu;
        let projected = contraction.tr_mul(&(&self.projected * &contraction))
            + &cross
            + cross.transpose()
            + qq * (mu * mu * self_k);

        if !next.iter().all(|v| v.is_finite()) || !projected.iter().all(|v| v.is_finite()) {
            self.samples_seen -= 1;
            return Err(Error::Divergence { iteration: self.samples_seen + 1 });
        }
        self.gram.push(kvec.as_slice(), self_k)?;
        self.support.push(SupportVector { x: x.clone(), eta: T::one() });
        self.factor = next;
        self.projected = symmetrize(projected);
        self.kernel_factor = None;
        self.refresh_system();
        Ok(())
    }

    /// Coefficients `H` of the parametric gradient `Ḡ = Φ_{S∪{x}} H` for the
    /// next sample: `H = [A(qqᵀ + (λ/n)I); −qᵀ]` with `n` the index `x` would
    /// receive.
    pub fn parametric_direction(&self, q: &FeatureVector<T>) -> Result<DMatrix<T>> {
        check_dim(self.rank(), q.dim())?;
        let (s, r) = (self.len(), self.rank());
        let reg = self.lambda / T::from_usize_lossy(self.samples_seen + 1);
        let mut inner = &q.q * q.q.transpose();
        for i in 0..r {
            inner[(i, i)] += reg;
        }
        let mut h = DMatrix::zeros(s + 1, r);
        h.rows_mut(0, s).copy_from(&(&self.factor * inner));
        h.row_mut(s).copy_from(&(-q.q.transpose()));
        Ok(h)
    }

    /// Nonparametric gradient on `S ∪ {x}` for the next sample:
    /// `G = K[A;0]qqᵀ − k qᵀ + (λ/n)K[A;0]`.
    pub fn nonparametric_gradient(&self, x: &DVector<T>, q: &FeatureVector<T>) -> Result<DMatrix<T>> {
        check_dim(self.rank(), q.dim())?;
        let p = self.project(x)?;
        let ka = self.kernel_factor_or_compute()?;
        Ok(self.gradient_from(&ka, &p.kvec, &p.coupling, p.self_k, q, self.samples_seen + 1))
    }

    fn kernel_factor_or_compute(&self) -> Result<DMatrix<T>> {
        match &self.kernel_factor {
            Some(ka) => Ok(ka.clone()),
            None => self.gram.mul_mat(&self.factor),
        }
    }

    /// `G = (P q − k̃) qᵀ + (λ/n) P` with `P = K_{S∪x}[A;0] = [K_S A; kᵀA]`
    /// and `k̃ = [k; κ]`.
    fn gradient_from(
        &self,
        ka: &DMatrix<T>,
        kvec: &DVector<T>,
        coupling: &DVector<T>,
        self_k: T,
        q: &FeatureVector<T>,
        n: usize,
    ) -> DMatrix<T> {
        let (s, r) = (self.len(), self.rank());
        let mut p = DMatrix::zeros(s + 1, r);
        p.rows_mut(0, s).copy_from(ka);
        p.row_mut(s).copy_from(&coupling.transpose());
        let mut resid = &p * &q.q;
        for i in 0..s {
            resid[i] -= kvec[i];
        }
        resid[s] -= self_k;
        let reg = self.lambda / T::from_usize_lossy(n);
        resid * q.q.transpose() + p * reg
    }

    /// Nonparametric SGD step: `A ← [A; 0] − μG` on `S ∪ {x}`.
    pub fn nonparametric_update(&mut self, x: &DVector<T>, q: &FeatureVector<T>, mu: T) -> Result<()> {
        self.check_update_args(q, mu)?;
        check_dim(self.dim(), x.len())?;
        validate_point(x)?;
        let kvec = self.kernel.kernel_vector_iter(self.support.iter().map(|s| &s.x), x, self.len())?;
        let coupling = self.factor.tr_mul(&kvec);
        let self_k = self.kernel.eval_slices(x.as_slice(), x.as_slice());
        self.apply_nonparametric(x, q, mu, kvec, coupling, self_k)
    }

    pub(crate) fn nonparametric_update_projected(&mut self, x: &DVector<T>, p: Projection<T>, mu: T) -> Result<()> {
        self.check_update_args(&p.q, mu)?;
        validate_point(x)?;
        let Projection { q, kvec, coupling, self_k } = p;
        self.apply_nonparametric(x, &q, mu, kvec, coupling, self_k)
    }

    fn apply_nonparametric(
        &mut self,
        x: &DVector<T>,
        q: &FeatureVector<T>,
        mu: T,
        kvec: DVector<T>,
        coupling: DVector<T>,
        self_k: T,
    ) -> Result<()> {
        let ka = match self.kernel_factor.take() {
            Some(ka) => ka,
            None => self.gram.mul_mat(&self.factor)?,
        };
        let n = self.samples_seen + 1;
        let g = self.gradient_from(&ka, &kvec, &coupling, self_k, q, n);
        let s = self.len();
        let r = self.rank();
        let mut next = DMatrix::zeros(s + 1, r);
        next.rows_mut(0, s).copy_from(&self.factor);
        next -= g * mu;
        if !next.iter().all(|v| v.is_finite()) {
            self.kernel_factor = Some(ka);
            return Err(Error::Divergence { iteration: n });
        }
        self.samples_seen = n;

        self.gram.push(kvec.as_slice(), self_k)?;
        self.support.push(SupportVector { x: x.clone(), eta: T::one() });
        self.factor = next;
        self.recompute_projection()?;
        self.refresh_system();
        Ok(())
    }

    /// Drops support vector `idx`: its row of `A`, its row and column of
    /// `K_S`, and its recency weight.
    pub fn remove_support(&mut self, idx: usize) -> Result<SupportVector<T>> {
        if idx >= self.len() {
            return Err(Error::IndexOutOfRange { index: idx, len: self.len() });
        }
        if self.len() == 1 {
            return Err(Error::Precondition("cannot remove the only support vector".into()));
        }
        let row = self.factor.row(idx).into_owned();
        if let Some(ka) = self.kernel_factor.take() {
            // K_{\i} A_{\i} = (K A − K[:, i] a_i) without row i
            let col = self.gram.column(idx);
            let updated = ka - col * &row;
            self.kernel_factor = Some(updated.remove_row(idx));
        }
        self.gram.remove(idx)?;
        self.factor = std::mem::replace(&mut self.factor, DMatrix::zeros(0, 0)).remove_row(idx);
        let removed = self.support.remove(idx);
        match &self.kernel_factor {
            Some(ka) => self.projected = symmetrize(self.factor.tr_mul(ka)),
            None => self.recompute_projection()?,
        }
        self.refresh_system();
        Ok(removed)
    }

    /// Recomputes `K_S`, `AᵀK_S A` and the cached inverse from scratch and
    /// reports how far the incrementally maintained values drifted.
    pub fn audit(&self) -> Result<AuditReport<T>> {
        let fresh = self.kernel.kernel_matrix(&self.support_points())?;
        let gram_error = (self.gram.to_matrix() - &fresh).amax();
        let projected = self.factor.transpose() * &fresh * &self.factor;
        let projection_error = (&self.projected - &projected).norm() / projected.norm().max(T::one());
        let inverse_error = self.cached_inverse().map(|inv| {
            let mut m = projected.clone();
            for i in 0..self.rank() {
                m[(i, i)] += self.lambda;
            }
            (inv * m - DMatrix::identity(self.rank(), self.rank())).norm()
        });
        Ok(AuditReport { gram_error, projection_error, inverse_error })
    }
}

fn symmetrize<T: Real>(m: DMatrix<T>) -> DMatrix<T> {
    let t = m.transpose();
    (m + t) * T::lit(0.5)
}

fn clamp_fit<T: Real>(fit: T, magnitude: T) -> Result<T> {
    if fit >= T::zero() {
        return Ok(fit);
    }
    let tol = T::tol(1e-9) * magnitude.max(T::one());
    if fit >= -tol {
        Ok(T::zero())
    } else {
        Err(Error::Consistency(format!("negative LS fit {fit}")))
    }
}

/// Regularized objective over a dataset:
/// `(1/2N)Σ[κ(x,x) − 2kᵀAq + qᵀAᵀKAq] + (λ/2N)[tr(AᵀKA) + Σ‖q‖²]`.
pub fn objective<T: Real>(
    xs: &[DVector<T>],
    factor: &DMatrix<T>,
    features: &DMatrix<T>,
    kernel: &KernelSpec<T>,
    lambda: T,
) -> Result<T> {
    let k = kernel.kernel_matrix(xs)?;
    objective_with_gram(&k, factor, features, lambda)
}

/// [`objective`] with a precomputed Gram matrix. `features` is `r × N`.
pub fn objective_with_gram<T: Real>(
    k: &DMatrix<T>,
    factor: &DMatrix<T>,
    features: &DMatrix<T>,
    lambda: T,
) -> Result<T> {
    let n = k.nrows();
    check_dim(n, factor.nrows())?;
    check_dim(n, features.ncols())?;
    check_dim(factor.ncols(), features.nrows())?;
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let ka = k * factor;
    let projected = factor.tr_mul(&ka);
    let cross = ka.component_mul(&features.transpose()).sum();
    let quad = (&projected * features).component_mul(features).sum();
    let nn = T::from_usize_lossy(n);
    let half = T::lit(0.5);
    let fit = k.trace() - (cross + cross) + quad;
    let reg = projected.trace() + features.norm_squared();
    Ok(half * fit / nn + half * lambda * reg / nn)
}

/// Frobenius norm of the full gradient of [`objective_with_gram`] in
/// `(A, Q)`.
pub fn stationarity<T: Real>(k: &DMatrix<T>, factor: &DMatrix<T>, features: &DMatrix<T>, lambda: T) -> T {
    let n = T::from_usize_lossy(k.nrows());
    let r = factor.ncols();
    let ka = k * factor;
    let mut m = factor.tr_mul(&ka);
    for i in 0..r {
        m[(i, i)] += lambda;
    }
    let grad_q = (m * features - ka.transpose()) / n;
    let mut qq = features * features.transpose();
    for i in 0..r {
        qq[(i, i)] += lambda;
    }
    let grad_a = k * (factor * qq - features.transpose()) / n;
    (grad_q.norm_squared() + grad_a.norm_squared()).sqrt()
}

#[derive(Clone, Debug, PartialEq)]
pub struct BatchConfig<T> {
    pub rank: usize,
    pub lambda: T,
    pub max_iter: usize,
    /// Stop once the objective changes by less than this.
    pub tol: T,
    /// Optionally also require the gradient norm to fall below this before
    /// declaring convergence.
    pub stationarity_tol: Option<T>,
    pub seed: u64,
}

impl<T: Real> BatchConfig<T> {
    pub fn new(rank: usize, lambda: T) -> Self {
        BatchConfig { rank, lambda, max_iter: 50, tol: T::lit(1e-10), stationarity_tol: None, seed: 0 }
    }
}

#[derive(Clone, Debug)]
pub struct BatchResult<T: Real> {
    /// `A`, `N × r`.
    pub factor: DMatrix<T>,
    /// `Q`, `r × N`.
    pub features: DMatrix<T>,
    /// Objective after each full iteration.
    pub objective_trace: Vec<T>,
    pub iterations: usize,
    pub converged: bool,
    /// Gradient norm at the returned iterate.
    pub stationarity: T,
}

impl<T: Real> BatchResult<T> {
    /// Per-sample unscaled LS fits `‖φ(x_ν) − ΦAq_ν‖²` against `gram`.
    pub fn fits(&self, gram: &DMatrix<T>) -> Vec<T> {
        let ka = gram * &self.factor;
        let projected = self.factor.tr_mul(&ka);
        (0..gram.nrows())
            .map(|v| {
                let q = self.features.column(v);
                let cross = ka.row(v).transpose().dot(&q);
                let quad = q.dot(&(&projected * q));
                (gram[(v, v)] - (cross + cross) + quad).max(T::zero())
            })
            .collect()
    }
}

/// Batch solver alternating the two closed-form block minimizers
/// `Q = (AᵀKA + λI)⁻¹AᵀK` and `A = Qᵀ(QQᵀ + λI)⁻¹`.
pub fn batch_bkfe<T: Real>(xs: &[DVector<T>], kernel: &KernelSpec<T>, cfg: &BatchConfig<T>) -> Result<BatchResult<T>> {
    let k = kernel.kernel_matrix(xs)?;
    batch_bkfe_with_gram(&k, cfg)
}

pub fn batch_bkfe_with_gram<T: Real>(k: &DMatrix<T>, cfg: &BatchConfig<T>) -> Result<BatchResult<T>> {
    let n = k.nrows();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    check_dim(n, k.ncols())?;
    if cfg.rank == 0 || cfg.max_iter == 0 {
        return Err(Error::InvalidParameter("rank and max_iter must be at least 1".into()));
    }
    if !(cfg.lambda > T::zero()) {
        return Err(Error::InvalidParameter("batch solver needs lambda > 0".into()));
    }
    let r = cfg.rank;
    let mut factor: DMatrix<T> = FactorInit::Random { seed: cfg.seed, scale: 0.1 }.matrix(n, r);
    let mut features = DMatrix::zeros(r, n);
    let mut trace = Vec::with_capacity(cfg.max_iter);
    let mut converged = false;
    let mut iterations = 0;

    for it in 1..=cfg.max_iter {
        iterations = it;
        let ka = k * &factor;
        let mut m = factor.tr_mul(&ka);
        for i in 0..r {
            m[(i, i)] += cfg.lambda;
        }
        let chol = spd_factor(&symmetrize(m), true).ok_or(Error::Singular)?;
        features = chol.solve(&ka.transpose());

        let mut qq = &features * features.transpose();
        for i in 0..r {
            qq[(i, i)] += cfg.lambda;
        }
        let chol = spd_factor(&symmetrize(qq), true).ok_or(Error::Singular)?;
        factor = chol.solve(&features).transpose();

        let obj = objective_with_gram(k, &factor, &features, cfg.lambda)?;
        if !obj.is_finite() {
            return Err(Error::Divergence { iteration: it });
        }
        let small_change = trace.last().is_some_and(|prev: &T| (*prev - obj).abs() < cfg.tol);
        trace.push(obj);
        if small_change {
            let stationary = match cfg.stationarity_tol {
                Some(tol) => stationarity(k, &factor, &features, cfg.lambda) <= tol,
                None => true,
            };
            if stationary {
                converged = true;
                break;
            }
        }
    }
    let stationarity = stationarity(k, &factor, &features, cfg.lambda);
    Ok(BatchResult { factor, features, objective_trace: trace, iterations, converged, stationarity })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UpdateRule {
    Parametric,
    Nonparametric,
}

/// One processed sample of an [`OnlineTracker`].
#[derive(Clone, Debug, PartialEq)]
pub struct TrackStep<T: Real> {
    pub n: usize,
    pub q: FeatureVector<T>,
    /// LS fit of the sample against the subspace before the update.
    pub fit: T,
}

/// Unbudgeted online tracker: every sample joins the support.
#[derive(Clone, Debug)]
pub struct OnlineTracker<T: Real> {
    kernel: KernelSpec<T>,
    rank: usize,
    lambda: T,
    rule: UpdateRule,
    schedule: StepSchedule<T>,
    init: FactorInit,
    model: Option<SubspaceModel<T>>,
}

impl<T: Real> OnlineTracker<T> {
    pub fn new(
        kernel: KernelSpec<T>,
        rank: usize,
        lambda: T,
        rule: UpdateRule,
        schedule: StepSchedule<T>,
        init: FactorInit,
    ) -> Result<Self> {
        kernel.validate()?;
        validate_lambda(lambda)?;
        if rank == 0 {
            return Err(Error::InvalidParameter("rank must be at least 1".into()));
        }
        Ok(OnlineTracker { kernel, rank, lambda, rule, schedule, init, model: None })
    }

    pub fn model(&self) -> Option<&SubspaceModel<T>> {
        self.model.as_ref()
    }

    pub fn into_model(self) -> Option<SubspaceModel<T>> {
        self.model
    }

    pub fn process(&mut self, x: &DVector<T>) -> Result<TrackStep<T>> {
        let Some(model) = self.model.as_mut() else {
            validate_point(x)?;
            let fit = self.kernel.eval_slices(x.as_slice(), x.as_slice());
            self.model = Some(SubspaceModel::new(self.kernel, x.clone(), self.rank, self.lambda, self.init)?);
            return Ok(TrackStep { n: 1, q: FeatureVector::zeros(self.rank), fit });
        };
        let p = model.project(x)?;
        let fit = model.fit_of(&p)?;
        let n = model.samples_seen() + 1;
        let mu = self.schedule.step(n, &p.q);
        let q = p.q.clone();
        match self.rule {
            UpdateRule::Parametric => model.parametric_update(x, &q, mu)?,
            UpdateRule::Nonparametric => model.nonparametric_update_projected(x, p, mu)?,
        }
        Ok(TrackStep { n, q, fit })
    }
}

/// Average LS fit `(1/N)Σ‖φ(x_ν) − L̄ q_ν‖²` of stored features against the
/// model's current subspace.
pub fn cumulative_fit<T: Real>(
    model: &SubspaceModel<T>,
    xs: &[DVector<T>],
    features: &[FeatureVector<T>],
) -> Result<T> {
    check_dim(xs.len(), features.len())?;
    if xs.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut total = T::zero();
    for (x, q) in xs.iter().zip(features) {
        total += model.ls_fit(x, q)?;
    }
    Ok(total / T::from_usize_lossy(xs.len()))
}
