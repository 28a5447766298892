//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point type the signal chain and plant models are generic over.
///
/// Implemented for `f32` and `f64`. Anything tolerance-sensitive (filter
/// design, regression) is exercised in `f64`; `f32` is supported for
/// embedded-style streaming use.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + NumAssign + Copy + Default + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` literal. Every literal used in the crate is
    /// representable in both supported types, so this never fails.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Clamps `x` into `[lo, hi]`; NaN maps to `lo`.
#[inline]
pub fn clamp<T: Scalar>(x: T, lo: T, hi: T) -> T {
    if x.is_nan() || x < lo {
        lo
    } else if x > hi {
        hi
    } else {
        x
    }
}

#[inline]
pub fn clamp_unit<T: Scalar>(x: T) -> T {
    clamp(x, T::zero(), T::one())
}
