//! Closed-form kernels and Gram assembly.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};
use crate::Real;

/// Kernel function family with its parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KernelSpec<T> {
    /// `exp(-‖x - y‖² / gamma)`. `gamma` is in units of squared input
    /// distance (`gamma = 2σ²` in the usual bandwidth notation).
    Gaussian { gamma: T },
    /// `(xᵀy + offset)^degree`.
    Polynomial { degree: u32, offset: T },
    /// `xᵀy`.
    Linear,
}

impl<T: Real> KernelSpec<T> {
    pub fn gaussian(gamma: T) -> Result<Self> {
        let spec = KernelSpec::Gaussian { gamma };
        spec.validate()?;
        Ok(spec)
    }

    pub fn polynomial(degree: u32, offset: T) -> Result<Self> {
        let spec = KernelSpec::Polynomial { degree, offset };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Gaussian { gamma } if !(gamma > T::zero()) || !gamma.is_finite() => {
                Err(Error::InvalidParameter(format!("gaussian gamma must be positive, got {gamma}")))
            }
            KernelSpec::Polynomial { degree: 0, .. } => {
                Err(Error::InvalidParameter("polynomial degree must be at least 1".into()))
            }
            KernelSpec::Polynomial { offset, .. } if !offset.is_finite() => {
                Err(Error::InvalidParameter("polynomial offset must be finite".into()))
            }
            _ => Ok(()),
        }
    }

    /// True when `|κ(x, y)| ≤ 1` holds for every input, which is what the
    /// kernel-mismatch bound assumes.
    pub fn is_bounded_by_one(&self) -> bool {
        matches!(self, KernelSpec::Gaussian { .. })
    }

    /// `κ(x, y)`.
    pub fn eval(&self, x: &DVector<T>, y: &DVector<T>) -> Result<T> {
        check_dim(x.len(), y.len())?;
        if x.is_empty() {
            return Err(Error::EmptyInput);
        }
        Ok(self.eval_slices(x.as_slice(), y.as_slice()))
    }

    #[inline]
    pub(crate) fn eval_slices(&self, x: &[T], y: &[T]) -> T {
        match *self {
            KernelSpec::Gaussian { gamma } => {
                let sq = x.iter().zip(y).fold(T::zero(), |acc, (a, b)| {
                    let d = *a - *b;
                    acc + d * d
                });
                (-sq / gamma).exp()
            }
            KernelSpec::Polynomial { degree, offset } => {
                let base = crate::gram::dot(x, y) + offset;
                base.powi(degree as i32)
            }
            KernelSpec::Linear => crate::gram::dot(x, y),
        }
    }

    /// `[κ(b, x) for b in basis]`.
    pub fn kernel_vector(&self, basis: &[DVector<T>], x: &DVector<T>) -> Result<DVector<T>> {
        if basis.is_empty() {
            return Err(Error::EmptyInput);
        }
        self.kernel_vector_iter(basis.iter(), x, basis.len())
    }

    pub(crate) fn kernel_vector_iter<'a, I>(&self, basis: I, x: &DVector<T>, len: usize) -> Result<DVector<T>>
    where
        I: Iterator<Item = &'a DVector<T>>,
    {
        let mut out = DVector::zeros(len);
        for (slot, b) in out.iter_mut().zip(basis) {
            check_dim(x.len(), b.len())?;
            *slot = self.eval_slices(b.as_slice(), x.as_slice());
        }
        Ok(out)
    }

    /// Pairwise Gram matrix of `xs`.
    pub fn kernel_matrix(&self, xs: &[DVector<T>]) -> Result<DMatrix<T>> {
        let n = xs.len();
        if n == 0 {
            return Err(Error::EmptyInput);
        }
        let d = xs[0].len();
        for x in xs {
            check_dim(d, x.len())?;
        }
        let mut k = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = self.eval_slices(xs[i].as_slice(), xs[j].as_slice());
                k[(i, j)] = v;
                k[(j, i)] = v;
            }
        }
        Ok(k)
    }

    /// Cross Gram `K[i, j] = κ(rows[i], cols[j])`.
    pub fn cross_matrix(&self, rows: &[DVector<T>], cols: &[DVector<T>]) -> Result<DMatrix<T>> {
        let mut k = DMatrix::zeros(rows.len(), cols.len());
        for (i, a) in rows.iter().enumerate() {
            for (j, b) in cols.iter().enumerate() {
                check_dim(a.len(), b.len())?;
                k[(i, j)] = self.eval_slices(a.as_slice(), b.as_slice());
            }
        }
        Ok(k)
    }
}

/// Square-root factor `G` of a symmetric PSD matrix, with `GᵀG = M`.
///
/// Uses the symmetric eigendecomposition `M = V Λ Vᵀ` and returns the
/// symmetric root `V Λ^{1/2} Vᵀ`. Eigenvalues in `[-tol, 0)` with
/// `tol = 1e-10 ‖M‖_F` are clamped to zero; anything below is rejected.
pub fn psd_sqrt_factor<T: Real>(m: &DMatrix<T>) -> Result<DMatrix<T>> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
    }
    if m.is_empty() {
        return Ok(m.clone());
    }
    let scale = m.norm();
    let tol = T::tol(1e-10) * scale;
    let asym = (m - m.transpose()).norm();
    if asym > tol {
        return Err(Error::InvalidParameter(format!("matrix is not symmetric (asymmetry {asym})")));
    }
    let eig = m.clone().symmetric_eigen();
    let mut roots = eig.eigenvalues.clone();
    for v in roots.iter_mut() {
        if *v < -tol {
            return Err(Error::NotPsd { eigenvalue: v.as_f64(), tolerance: tol.as_f64() });
        }
        *v = if *v > T::zero() { v.sqrt() } else { T::zero() };
    }
    let vecs = &eig.eigenvectors;
    let scaled = vecs * DMatrix::from_diagonal(&roots);
    Ok(scaled * vecs.transpose())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_vec(rng: &mut ChaCha8Rng, d: usize) -> DVector<f64> {
        DVector::from_fn(d, |_, _| rng.random_range(-2.0..2.0))
    }

    #[test]
    fn gaussian_examples() {
        let k = KernelSpec::gaussian(100.0).unwrap();
        let x = dvector![0.3, -1.2, 4.0];
        assert_eq!(k.eval(&x, &x).unwrap(), 1.0);
        let a = dvector![1.0f64, 0.0, 0.0];
        let b = dvector![0.0, 1.0, 0.0];
        // exp(-2/100) by hand
        assert!((k.eval(&a, &b).unwrap() - 0.980_198_673_306_755_3).abs() < 1e-12);
    }

    #[test]
    fn linear_and_polynomial() {
        let x = dvector![1.0, 2.0];
        let y = dvector![3.0, 4.0];
        assert_eq!(KernelSpec::Linear.eval(&x, &y).unwrap(), 11.0);
        let p = KernelSpec::polynomial(2, 1.0).unwrap();
        assert_eq!(p.eval(&x, &y).unwrap(), 144.0);
    }

    #[test]
    fn invalid_specs_and_dimensions() {
        assert!(KernelSpec::gaussian(0.0).is_err());
        assert!(KernelSpec::gaussian(-1.0).is_err());
        assert!(KernelSpec::<f64>::polynomial(0, 1.0).is_err());
        let k = KernelSpec::Linear;
        assert!(matches!(k.eval(&dvector![1.0], &dvector![1.0, 2.0]), Err(Error::DimensionMismatch { .. })));
        assert!(k.kernel_vector(&[], &dvector![1.0]).is_err());
        assert!(k.kernel_matrix(&[dvector![1.0], dvector![1.0, 2.0]]).is_err());
    }

    #[test]
    fn kernel_vector_matches_scalar_evaluations() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let k = KernelSpec::gaussian(2.0).unwrap();
        let basis: Vec<_> = (0..5).map(|_| rand_vec(&mut rng, 3)).collect();
        let x = rand_vec(&mut rng, 3);
        let v = k.kernel_vector(&basis, &x).unwrap();
        for (i, b) in basis.iter().enumerate() {
            let d2: f64 = b.iter().zip(x.iter()).map(|(p, q)| (p - q).powi(2)).sum();
            assert!((v[i] - (-d2 / 2.0).exp()).abs() < 1e-12);
        }
        let lin = KernelSpec::Linear.kernel_vector(&basis[..2], &x).unwrap();
        assert_eq!(lin[0], basis[0].dot(&x));
        assert_eq!(lin[1], basis[1].dot(&x));
        assert_eq!(k.kernel_vector(std::slice::from_ref(&x), &x).unwrap()[0], 1.0);
    }

    #[test]
    fn kernel_matrix_small_cases() {
        let k = KernelSpec::gaussian(100.0).unwrap();
        let x = dvector![1.0, 2.0, 3.0];
        assert_eq!(k.kernel_matrix(std::slice::from_ref(&x)).unwrap(), DMatrix::from_element(1, 1, 1.0));
        assert_eq!(k.kernel_matrix(&[x.clone(), x]).unwrap(), DMatrix::from_element(2, 2, 1.0));
    }

    #[test]
    fn kernel_matrix_is_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let k = KernelSpec::gaussian(1.5).unwrap();
        let xs: Vec<_> = (0..4).map(|_| rand_vec(&mut rng, 3)).collect();
        let m = k.kernel_matrix(&xs).unwrap();
        assert_eq!(m, m.transpose());
        let min = m.symmetric_eigenvalues().min();
        assert!(min >= -1e-10);
    }

    #[test]
    fn sqrt_factor_examples() {
        let i3 = DMatrix::<f64>::identity(3, 3);
        let g = psd_sqrt_factor(&i3).unwrap();
        assert!((g.transpose() * &g - &i3).norm() < 1e-12);

        let d = DMatrix::from_diagonal(&dvector![4.0f64, 9.0]);
        let g = psd_sqrt_factor(&d).unwrap();
        assert!((g.transpose() * &g - &d).norm() < 1e-12);
        assert!((g[(0, 0)] - 2.0).abs() < 1e-12 && (g[(1, 1)] - 3.0).abs() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = DMatrix::from_fn(5, 5, |_, _| rng.random_range(-1.0..1.0));
        let m = a.transpose() * &a;
        let g = psd_sqrt_factor(&m).unwrap();
        assert!((g.transpose() * &g - &m).norm() / m.norm() <= 1e-8);
    }

    #[test]
    fn sqrt_factor_rejects_indefinite_and_clamps_noise() {
        let m = DMatrix::from_diagonal(&dvector![1.0, -0.5]);
        assert!(matches!(psd_sqrt_factor(&m), Err(Error::NotPsd { .. })));
        let m = DMatrix::from_diagonal(&dvector![1.0, -1e-14]);
        let g = psd_sqrt_factor(&m).unwrap();
        assert_eq!(g[(1, 1)], 0.0);
    }
}
