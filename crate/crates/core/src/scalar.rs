//! Scalar abstraction shared by every numerical module.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, NumCast};

/// Real scalar the pricing and expansion code is written against.
///
/// Everything except the complementary error function comes from
/// `num-traits`; `erfc` is supplied per type because `Float` has no
/// special functions.
pub trait Real:
    Float + FloatConst + Debug + Display + Send + Sync + 'static
{
    fn erfc(self) -> Self;
}

impl Real for f64 {
    #[inline]
    fn erfc(self) -> Self {
        libm::erfc(self)
    }
}

impl Real for f32 {
    #[inline]
    fn erfc(self) -> Self {
        libm::erfcf(self)
    }
}

/// Converts an `f64` literal into the working scalar.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    <T as NumCast>::from(x).expect("f64 literal representable in scalar type")
}

/// Lossy conversion used for error payloads and reporting.
#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}
