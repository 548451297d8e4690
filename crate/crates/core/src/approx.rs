//! Finite features, kernel-matrix approximation and bound checks.
//!
//! A fitted subspace induces the approximate kernel
//! `K̂ = QᵀAᵀK_S AQ`. [`FeatureMap`] factors it as `ZᵀZ` with
//! `r`-dimensional columns `z = (AᵀK_S A)^{1/2} q`, so linear learners on `z`
//! behave exactly like kernel learners on `K̂`.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_dim, Error, Result};
use crate::kernel::psd_sqrt_factor;
use crate::learners::ridge_closed_form;
use crate::subspace::{FeatureVector, SubspaceModel};
use crate::Real;

/// `z = G q` with `G = (AᵀK_S A)^{1/2}`, frozen at construction.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMap<T: Real> {
    root: DMatrix<T>,
}

impl<T: Real> FeatureMap<T> {
    pub fn from_model(model: &SubspaceModel<T>) -> Result<Self> {
        Ok(FeatureMap { root: psd_sqrt_factor(model.projected_gram())? })
    }

    pub fn dim(&self) -> usize {
        self.root.nrows()
    }

    pub fn root(&self) -> &DMatrix<T> {
        &self.root
    }

    pub fn map(&self, q: &FeatureVector<T>) -> Result<DVector<T>> {
        check_dim(self.dim(), q.dim())?;
        Ok(&self.root * &q.q)
    }

    /// Maps every column of `q` (`r × N`).
    pub fn map_columns(&self, q: &DMatrix<T>) -> Result<DMatrix<T>> {
        check_dim(self.dim(), q.nrows())?;
        Ok(&self.root * q)
    }
}

pub fn feature_map_z<T: Real>(model: &SubspaceModel<T>, q: &FeatureVector<T>) -> Result<DVector<T>> {
    FeatureMap::from_model(model)?.map(q)
}

/// Features of every sample as the columns of an `r × N` matrix.
pub fn extract_all<T: Real>(model: &SubspaceModel<T>, xs: &[DVector<T>]) -> Result<DMatrix<T>> {
    let mut q = DMatrix::zeros(model.rank(), xs.len());
    for (j, x) in xs.iter().enumerate() {
        q.set_column(j, &model.extract_feature(x)?.q);
    }
    Ok(q)
}

/// `K̂ = QᵀAᵀK_S AQ` for features `Q` (`r × N`).
pub fn approx_kernel_matrix<T: Real>(model: &SubspaceModel<T>, q: &DMatrix<T>) -> Result<DMatrix<T>> {
    check_dim(model.rank(), q.nrows())?;
    let k_hat = q.transpose() * (model.projected_gram() * q);
    let t = k_hat.transpose();
    Ok((k_hat + t) * T::lit(0.5))
}

/// `(1/N)‖K − K̂‖_F`.
pub fn kernel_mismatch<T: Real>(k: &DMatrix<T>, k_hat: &DMatrix<T>) -> Result<T> {
    check_dim(k.nrows(), k_hat.nrows())?;
    check_dim(k.ncols(), k_hat.ncols())?;
    if k.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok((k - k_hat).norm() / T::from_usize_lossy(k.nrows()))
}

/// Sliding-window kernel mismatch accumulated along a stream.
///
/// Feed each sample together with the model state right after it was
/// processed. Once more than `window` samples have been seen, every new
/// sample closes a window of the last `window` samples, whose `K̂` is
/// evaluated with features extracted against that model state.
#[derive(Clone, Debug)]
pub struct WindowedMismatch<T: Real> {
    window: usize,
    recent: VecDeque<DVector<T>>,
    seen: usize,
    total: T,
    windows: usize,
}

impl<T: Real> WindowedMismatch<T> {
    pub fn new(window: usize) -> Result<Self> {
        if window < 2 {
            return Err(Error::InvalidParameter("window must hold at least 2 samples".into()));
        }
        Ok(WindowedMismatch { window, recent: VecDeque::with_capacity(window), seen: 0, total: T::zero(), windows: 0 })
    }

    /// Adds a sample; returns the mismatch of the window it closes, if any.
    pub fn push(&mut self, x: &DVector<T>, model: &SubspaceModel<T>) -> Result<Option<T>> {
        if self.recent.len() == self.window {
            self.recent.pop_front();
        }
        self.recent.push_back(x.clone());
        self.seen += 1;
        if self.seen <= self.window {
            return Ok(None);
        }
        let xs: Vec<_> = self.recent.iter().cloned().collect();
        let k = model.kernel().kernel_matrix(&xs)?;
        let k_hat = approx_kernel_matrix(model, &extract_all(model, &xs)?)?;
        let m = kernel_mismatch(&k, &k_hat)?;
        self.total += m;
        self.windows += 1;
        Ok(Some(m))
    }

    pub fn windows(&self) -> usize {
        self.windows
    }

    /// Average over closed windows, `None` before the first one.
    pub fn mean(&self) -> Option<T> {
        (self.windows > 0).then(|| self.total / T::from_usize_lossy(self.windows))
    }
}

/// Average windowed mismatch over a stream and the model states recorded
/// after each of its samples.
pub fn windowed_mismatch<T: Real>(xs: &[DVector<T>], trajectory: &[SubspaceModel<T>], window: usize) -> Result<T> {
    check_dim(xs.len(), trajectory.len())?;
    if xs.len() <= window {
        return Err(Error::InvalidParameter(format!(
            "stream of {} samples is too short for window {window}",
            xs.len()
        )));
    }
    let mut acc = WindowedMismatch::new(window)?;
    for (x, model) in xs.iter().zip(trajectory) {
        acc.push(x, model)?;
    }
    acc.mean().ok_or(Error::EmptyInput)
}

/// Approximation error of one sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorRecord<T> {
    /// `‖φ(x) − φ̂(x)‖²`
    pub e: T,
    pub y: Option<T>,
}

/// LS fit of each sample against the features in `q` (`r × N`).
pub fn error_records<T: Real>(
    model: &SubspaceModel<T>,
    xs: &[DVector<T>],
    q: &DMatrix<T>,
    labels: Option<&[T]>,
) -> Result<Vec<ErrorRecord<T>>> {
    check_dim(xs.len(), q.ncols())?;
    if let Some(ys) = labels {
        check_dim(xs.len(), ys.len())?;
    }
    xs.iter()
        .enumerate()
        .map(|(i, x)| {
            let e = model.ls_fit(x, &FeatureVector::new(q.column(i).into_owned()))?;
            Ok(ErrorRecord { e, y: labels.map(|ys| ys[i]) })
        })
        .collect()
}

/// Outcome of a runtime inequality check `lhs ≤ rhs`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundReport<T> {
    pub lhs: T,
    pub rhs: T,
    /// `lhs ≤ rhs + 1e-9`
    pub holds: bool,
    /// `rhs − lhs`
    pub slack: T,
    /// Whether the inputs satisfy the assumptions the bound is stated under.
    pub hypothesis_ok: bool,
}

impl<T: Real> BoundReport<T> {
    fn new(lhs: T, rhs: T, hypothesis_ok: bool) -> Self {
        BoundReport { lhs, rhs, holds: lhs <= rhs + T::lit(1e-9), slack: rhs - lhs, hypothesis_ok }
    }
}

/// `(1/N)‖K − K̂‖_F ≤ √ē(√ē + 2)` with `ē` the mean approximation error.
/// Assumes `e_i ∈ [0, 1]` and `|K_ij| ≤ 1`.
pub fn check_kernel_mismatch_bound<T: Real>(
    errors: &[ErrorRecord<T>],
    k: &DMatrix<T>,
    k_hat: &DMatrix<T>,
) -> Result<BoundReport<T>> {
    check_dim(k.nrows(), errors.len())?;
    let lhs = kernel_mismatch(k, k_hat)?;
    let mean = errors.iter().fold(T::zero(), |a, r| a + r.e) / T::from_usize_lossy(errors.len());
    let root = mean.max(T::zero()).sqrt();
    let rhs = root * (root + T::lit(2.0));
    let hypothesis_ok =
        errors.iter().all(|r| r.e >= T::zero() && r.e <= T::one()) && k.iter().all(|v| v.abs() <= T::one());
    Ok(BoundReport::new(lhs, rhs, hypothesis_ok))
}

/// `‖β* − β̂*‖ ≤ B_y ‖K − K̂‖₂ / (λ²N)` for the ridge solutions
/// `β = (K + λNI)⁻¹y` on the exact and approximate kernels.
pub fn check_ridge_stability_bound<T: Real>(
    k: &DMatrix<T>,
    k_hat: &DMatrix<T>,
    y: &DVector<T>,
    lambda: T,
) -> Result<BoundReport<T>> {
    check_dim(k.nrows(), k_hat.nrows())?;
    check_dim(k.nrows(), y.len())?;
    if !(lambda > T::zero()) {
        return Err(Error::InvalidParameter(format!("lambda must be positive, got {lambda}")));
    }
    let n = T::from_usize_lossy(k.nrows());
    let beta = ridge_closed_form(k, y, lambda)?;
    let beta_hat = ridge_closed_form(k_hat, y, lambda)?;
    let lhs = (beta - beta_hat).norm();
    let b_y = y.amax();
    let rhs = b_y * spectral_norm(&(k - k_hat))? / (lambda * lambda * n);
    Ok(BoundReport::new(lhs, rhs, true))
}

/// Largest absolute eigenvalue of a symmetric matrix by power iteration
/// (relative tolerance `1e-8`, at most 10 000 iterations).
pub fn spectral_norm<T: Real>(m: &DMatrix<T>) -> Result<T> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
    }
    if m.is_empty() {
        return Ok(T::zero());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut v = DVector::from_fn(m.nrows(), |_, _| T::lit(rng.random_range(0.5..1.5)));
    v /= v.norm();
    let tol = T::lit(1e-8);
    let mut est = T::zero();
    for _ in 0..10_000 {
        let w = m * &v;
        let norm = w.norm();
        if norm == T::zero() {
            return Ok(T::zero());
        }
        // two steps per check so sign-alternating dominant pairs still settle
        let next = w / norm;
        let w2 = m * &next;
        let norm2 = w2.norm();
        if norm2 == T::zero() {
            return Ok(norm);
        }
        let converged = (norm2 - est).abs() <= tol * norm2;
        est = norm2;
        v = w2 / norm2;
        if converged {
            return Ok(est);
        }
    }
    Ok(est)
}
