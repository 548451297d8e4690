//! Symmetric positive-definite solves shared by the solvers.

use nalgebra::{Cholesky, DMatrix, Dyn};

use crate::Real;

/// Cholesky factor of a symmetric positive-definite matrix.
///
/// With `jitter` set, a failed factorization is retried with
/// `1e-12 · tr/r · 10^k` added to the diagonal (k = 0..8). Without it, a
/// failure or a numerically zero pivot is reported as `None`.
pub(crate) fn spd_factor<T: Real>(m: &DMatrix<T>, jitter: bool) -> Option<Cholesky<T, Dyn>> {
    let n = m.nrows();
    if let Some(ch) = m.clone().cholesky() {
        if jitter || pivots_ok(&ch, m) {
            return Some(ch);
        }
        return None;
    }
    if !jitter || n == 0 {
        return None;
    }
    let tr = m.trace();
    let mut delta = if tr > T::zero() { T::lit(1e-12) * tr / T::from_usize_lossy(n) } else { T::lit(1e-12) };
    for _ in 0..8 {
        let mut shifted = m.clone();
        for i in 0..n {
            shifted[(i, i)] += delta;
        }
        if let Some(ch) = shifted.cholesky() {
            return Some(ch);
        }
        delta *= T::lit(10.0);
    }
    None
}

fn pivots_ok<T: Real>(ch: &Cholesky<T, Dyn>, m: &DMatrix<T>) -> bool {
    let l = ch.l_dirty();
    let scale = m.diagonal().iter().fold(T::zero(), |a, v| a.max(v.abs()));
    let floor = T::tol(1e-13) * scale;
    (0..m.nrows()).all(|i| l[(i, i)] * l[(i, i)] > floor)
}
