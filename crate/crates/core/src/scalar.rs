//! Floating-point scalar abstraction for the estimation and bounds math.

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Scalar type the solvers and bounds are generic over: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + NumAssign + FromPrimitive + ToPrimitive + core::fmt::Debug + Send + Sync
{
}

impl<T> Real for T where
    T: Float + FloatConst + NumAssign + FromPrimitive + ToPrimitive + core::fmt::Debug + Send + Sync
{
}

/// Convert an `f64` constant into the working scalar.
#[inline]
pub fn real<F: Real>(x: f64) -> F {
    F::from_f64(x).expect("f64 constant representable in scalar type")
}
