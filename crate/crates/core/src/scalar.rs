//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
    /// Absolute magnitude below which a phase-shift sum is treated as zero.
    fn degenerate_eps() -> Self;

    /// Converts an `f64` literal. Every finite `f64` converts for both impls.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable")
    }

    #[inline]
    fn two_pi() -> Self {
        Self::TAU()
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite float converts to f64")
    }
}

impl Real for f32 {
    fn degenerate_eps() -> Self {
        1e-4
    }
}

impl Real for f64 {
    fn degenerate_eps() -> Self {
        1e-12
    }
}
