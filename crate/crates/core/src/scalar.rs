//! Floating-point scalar abstraction: all estimator math is generic over `Scalar`
//! (`f32` or `f64`); the crate-root aliases pin the double-precision defaults.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Real scalar type the complex linear algebra and estimators run on.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
}

impl<T> Scalar for T where
    T: Float
        + FloatConst
        + FromPrimitive
        + ToPrimitive
        + NumAssign
        + Sum
        + Debug
        + Display
        + Send
        + Sync
        + 'static
{
}

/// Convert an `f64` constant into the working scalar. Exact for `f64`,
/// rounded for `f32`.
#[inline]
pub fn sc<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("f64 constant converts to any float scalar")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conversion_is_exact_for_f64() {
        assert_eq!(sc::<f64>(0.123456789), 0.123456789);
    }

    #[test]
    fn f32_instantiation_compiles() {
        let x: f32 = sc(1.5);
        assert_eq!(x, 1.5f32);
    }
}
