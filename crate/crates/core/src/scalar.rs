//! Scalar abstraction for the numeric kernels.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar the numeric kernels are generic over.
///
/// `f32` and `f64` both satisfy the bound; the crate-root aliases fix
/// `f64` for the end-to-end pipeline.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Send + Sync + 'static
{
}

impl<T> Real for T where
    T: Float
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

/// Lossless-enough conversion from `f64` used for tolerances and config
/// values entering a generic kernel.
pub fn real_from_f64<F: Real>(value: f64) -> F {
    F::from_f64(value).expect("f64 converts into any Real scalar")
}

/// Conversion from usize counts into the scalar domain.
pub fn real_from_usize<F: Real>(value: usize) -> F {
    F::from_usize(value).expect("usize converts into any Real scalar")
}
