use std::fmt::{Debug, Display};

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Floating-point scalar the numerics are generic over.
///
/// Implemented for `f32` and `f64` only. Tolerances quoted throughout the
/// crate (1e-9, 1e-10, ...) assume `f64`; with `f32` they are widened to a
/// small multiple of machine epsilon by [`Real::tol`].
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal.
    #[inline]
    fn lit(v: f64) -> Self {
        nalgebra::convert(v)
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).unwrap_or_else(|| Self::lit(n as f64))
    }

    /// `max(tol, 64 ε)`: an absolute tolerance that stays meaningful in `f32`.
    #[inline]
    fn tol(tol: f64) -> Self {
        let eps = Self::default_epsilon() * Self::lit(64.0);
        let t = Self::lit(tol);
        if t > eps {
            t
        } else {
            eps
        }
    }
}

impl Real for f32 {}
impl Real for f64 {}
