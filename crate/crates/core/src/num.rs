//! Scalar abstractions.
//!
//! Scaling arithmetic only needs a field ([`Field`]), so allometric transforms work
//! over exact rationals as well as floats. Everything that takes roots, sines or
//! exponentials requires [`Scalar`], which is implemented for `f32` and `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, Num, ToPrimitive};

/// Ordered field: the minimum needed to apply scale factors.
pub trait Field: Num + Copy + PartialOrd + Debug {}

impl<T: Num + Copy + PartialOrd + Debug> Field for T {}

/// Floating point scalar used by every model that is not pure ratio algebra.
pub trait Scalar:
    Field + Float + FloatConst + FromPrimitive + ToPrimitive + Display + Default + Sum + Send + Sync + 'static
{
    /// Converts an `f64` literal. Infallible for `f32`/`f64`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn tau() -> Self {
        Self::TAU()
    }
}

impl<T> Scalar for T where
    T: Field
        + Float
        + FloatConst
        + FromPrimitive
        + ToPrimitive
        + Display
        + Default
        + Sum
        + Send
        + Sync
        + 'static
{
}

/// `|a - b| <= tol * max(|a|, |b|)`, with exact equality accepted for zeros.
pub fn rel_eq<T: Scalar>(a: T, b: T, tol: T) -> bool {
    if a == b {
        return true;
    }
    (a - b).abs() <= tol * a.abs().max(b.abs())
}
