//! Scalar abstraction shared by every numeric routine in the crate.

use std::iter::Sum;

use ndarray::NdFloat;
use num_traits::FromPrimitive;

/// Real floating-point scalar the recovery engines are generic over.
///
/// Implemented for `f32` and `f64`. One-time factorizations (SVD,
/// Cholesky) always run in `f64` and are cast back.
pub trait Real: NdFloat + FromPrimitive + Sum + Default {
    /// Converts an `f64` literal into `Self`.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).expect("finite scalar converts to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}
