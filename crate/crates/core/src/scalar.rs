//! Scalar abstraction: every kernel, spectral, and estimator routine is
//! generic over the floating-point type through this trait.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar (f32 or f64) used throughout the crate.
pub trait Scalar:
    Float + NumAssign + FromPrimitive + ToPrimitive + Sum + Debug + Display + Send + Sync + 'static
{
    /// Convert an `f64` constant (tolerance, literal) into `Self`, rounding
    /// if necessary.
    fn from_f64_const(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 constant")
    }

    /// Convert a dimension or index into `Self`.
    fn from_usize_exact(v: usize) -> Self {
        Self::from_usize(v).expect("usize fits in scalar")
    }

    /// Lossy view as `f64` for diagnostics and reporting.
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Scalar for T where
    T: Float
        + NumAssign
        + FromPrimitive
        + ToPrimitive
        + Sum
        + Debug
        + Display
        + Send
        + Sync
        + 'static
{
}
