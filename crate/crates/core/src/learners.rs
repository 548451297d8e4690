//! Linear learners over extracted features.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};
use crate::linalg::spd_factor;
use crate::Real;

/// `g(z) = wᵀz` plus the number of updates applied.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearModel<T: Real> {
    pub w: DVector<T>,
    pub t: usize,
}

impl<T: Real> LinearModel<T> {
    pub fn zeros(dim: usize) -> Self {
        LinearModel { w: DVector::zeros(dim), t: 0 }
    }

    pub fn predict(&self, z: &DVector<T>) -> Result<T> {
        check_dim(self.w.len(), z.len())?;
        Ok(self.w.dot(z))
    }

    /// `sign(wᵀz)` with `sign(0) = +1`.
    pub fn classify(&self, z: &DVector<T>) -> Result<T> {
        Ok(if self.predict(z)? >= T::zero() { T::one() } else { -T::one() })
    }
}

/// One Pegasos step on the hinge objective with `λ_p = 1/C`:
/// `w ← (1 − 1/t)w + [y wᵀz < 1] (C/t) y z`.
pub fn svm_step<T: Real>(m: &mut LinearModel<T>, z: &DVector<T>, y: T, c: T) -> Result<()> {
    check_dim(m.w.len(), z.len())?;
    if y != T::one() && y != -T::one() {
        return Err(Error::InvalidParameter(format!("class label must be +1 or -1, got {y}")));
    }
    if !(c > T::zero()) || !c.is_finite() {
        return Err(Error::InvalidParameter(format!("C must be positive, got {c}")));
    }
    let margin = y * m.w.dot(z);
    m.t += 1;
    let t = T::from_usize_lossy(m.t);
    m.w *= T::one() - T::one() / t;
    if margin < T::one() {
        m.w.axpy(c / t * y, z, T::one());
    }
    Ok(())
}

/// Pegasos classifier. By default each step ends with a projection onto the
/// ball `‖w‖ ≤ √C`, which contains the optimum.
#[derive(Clone, Debug, PartialEq)]
pub struct Pegasos<T: Real> {
    pub model: LinearModel<T>,
    c: T,
    project: bool,
}

impl<T: Real> Pegasos<T> {
    pub fn new(dim: usize, c: T) -> Result<Self> {
        if !(c > T::zero()) || !c.is_finite() {
            return Err(Error::InvalidParameter(format!("C must be positive, got {c}")));
        }
        Ok(Pegasos { model: LinearModel::zeros(dim), c, project: true })
    }

    pub fn without_projection(mut self) -> Self {
        self.project = false;
        self
    }

    pub fn c(&self) -> T {
        self.c
    }

    pub fn step(&mut self, z: &DVector<T>, y: T) -> Result<()> {
        svm_step(&mut self.model, z, y, self.c)?;
        if self.project {
            let radius = self.c.sqrt();
            let norm = self.model.w.norm();
            if norm > radius {
                self.model.w *= radius / norm;
            }
        }
        Ok(())
    }

    pub fn classify(&self, z: &DVector<T>) -> Result<T> {
        self.model.classify(z)
    }
}

/// `w ← w + μ[(y − wᵀz)z − λ_reg w]`. Returns the pre-update residual.
pub fn lms_step<T: Real>(m: &mut LinearModel<T>, z: &DVector<T>, y: T, mu: T, lambda_reg: T) -> Result<T> {
    check_dim(m.w.len(), z.len())?;
    if !y.is_finite() || !z.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidParameter("LMS inputs must be finite".into()));
    }
    let resid = y - m.w.dot(z);
    m.w *= T::one() - mu * lambda_reg;
    m.w.axpy(mu * resid, z, T::one());
    m.t += 1;
    Ok(resid)
}

/// Regularized LMS regressor. Without an explicit step the step is
/// `0.5 / (max ‖z‖² + λ_reg)` over the features seen so far.
#[derive(Clone, Debug, PartialEq)]
pub struct Lms<T: Real> {
    pub model: LinearModel<T>,
    lambda_reg: T,
    step: Option<T>,
    max_sq_norm: T,
}

impl<T: Real> Lms<T> {
    pub fn new(dim: usize, lambda_reg: T) -> Result<Self> {
        if lambda_reg < T::zero() || !lambda_reg.is_finite() {
            return Err(Error::InvalidParameter(format!("regularization must be non-negative, got {lambda_reg}")));
        }
        Ok(Lms { model: LinearModel::zeros(dim), lambda_reg, step: None, max_sq_norm: T::zero() })
    }

    pub fn with_step(mut self, mu: T) -> Result<Self> {
        if mu < T::zero() || !mu.is_finite() {
            return Err(Error::InvalidParameter(format!("step must be non-negative, got {mu}")));
        }
        self.step = Some(mu);
        Ok(self)
    }

    pub fn step_size(&self) -> T {
        self.step.unwrap_or_else(|| {
            let denom = self.max_sq_norm + self.lambda_reg;
            if denom > T::zero() {
                T::lit(0.5) / denom
            } else {
                T::zero()
            }
        })
    }

    pub fn step(&mut self, z: &DVector<T>, y: T) -> Result<T> {
        self.max_sq_norm = self.max_sq_norm.max(z.norm_squared());
        let mu = self.step_size();
        lms_step(&mut self.model, z, y, mu, self.lambda_reg)
    }

    pub fn predict(&self, z: &DVector<T>) -> Result<T> {
        self.model.predict(z)
    }
}

/// `β = (K + λNI)⁻¹ y`.
pub fn ridge_closed_form<T: Real>(k: &DMatrix<T>, y: &DVector<T>, lambda: T) -> Result<DVector<T>> {
    check_dim(k.nrows(), k.ncols())?;
    check_dim(k.nrows(), y.len())?;
    if !(lambda > T::zero()) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!("lambda must be positive, got {lambda}")));
    }
    let n = k.nrows();
    let mut shifted = k.clone();
    let shift = lambda * T::from_usize_lossy(n);
    for i in 0..n {
        shifted[(i, i)] += shift;
    }
    match spd_factor(&shifted, false) {
        Some(chol) => Ok(chol.solve(y)),
        // indefinite approximations can still be well-posed after the shift
        None => shifted.lu().solve(y).ok_or(Error::Singular),
    }
}
