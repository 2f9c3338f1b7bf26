//! Scalar abstraction for the numerical kernels.
//!
//! Everything downstream (curves, assembly, factorizations, Bessel
//! evaluations) is generic over [`Real`], so the whole pipeline can be
//! instantiated with `f32` or `f64`. The crate root exports `f64` aliases,
//! which is what the command-line tools and the acceptance tolerances assume;
//! `f32` remains useful for cheap smoke tests of the generic code paths.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating-point scalar usable by every solver in this crate.
///
/// A blanket implementation covers any type with the listed bounds, in
/// particular `f32` and `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Shorthand for lossy conversion from an `f64` literal or intermediate.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 constant must convert into the scalar type")
    }

    /// Lossy view of the value as `f64`, for reporting and diagnostics.
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar must be representable as f64")
    }
}

impl<T> Real for T where
    T: Float
        + FloatConst
        + FromPrimitive
        + AddAssign
        + SubAssign
        + MulAssign
        + DivAssign
        + Sum
        + Debug
        + Display
        + LowerExp
        + Send
        + Sync
        + 'static
{
}

/// Converts an `f64` constant into the working scalar type.
///
/// Free-function form of [`Real::of`] that reads better inside formulas:
/// `real::<T>(0.5) * kappa` instead of `T::of(0.5) * kappa`.
pub fn real<T: Real>(x: f64) -> T {
    T::of(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blanket_impl_covers_both_widths() {
        fn sum_halves<T: Real>(n: usize) -> T {
            (0..n).map(|_| real::<T>(0.5)).sum()
        }
        assert_eq!(sum_halves::<f64>(4), 2.0);
        assert_eq!(sum_halves::<f32>(4), 2.0);
    }

    #[test]
    fn of_round_trips_constants() {
        assert_eq!(f64::of(std::f64::consts::PI).as_f64(), std::f64::consts::PI);
    }
}
