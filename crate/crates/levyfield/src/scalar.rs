use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating scalar used throughout the numerical core (`f32` or `f64`).
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Default
    + Debug
    + Display
    + rustfft::FftNum
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn c(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("finite scalar")
    }

    /// Machine epsilon scaled by a modest safety factor; used as a relative floor.
    #[inline]
    fn tiny_rel() -> Self {
        Self::epsilon() * Self::c(64.0)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `base^exp` for an integer exponent, evaluated with `powi` so that negative scales are exact
/// for power-of-two bases.
#[inline]
pub fn ipow<T: Real>(base: T, exp: i32) -> T {
    base.powi(exp)
}
