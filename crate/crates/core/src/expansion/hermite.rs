//! Scaled Hermite terms of the implied-volatility corrections.

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// Physicists' Hermite polynomial `H_n(z)` for `n <= 4`.
pub fn hermite_poly<T: Real>(n: usize, z: T) -> Result<T> {
    let z2 = z * z;
    Ok(match n {
        0 => T::one(),
        1 => lit::<T>(2.0) * z,
        2 => lit::<T>(4.0) * z2 - lit(2.0),
        3 => lit::<T>(8.0) * z2 * z - lit::<T>(12.0) * z,
        4 => lit::<T>(16.0) * z2 * z2 - lit::<T>(48.0) * z2 + lit(12.0),
        _ => return Err(Error::Argument(format!("Hermite order {n} not supported (max 4)"))),
    })
}

/// `Theta = (x - k - sigma0^2 ttm / 2) / (sigma0 sqrt(2 ttm))`.
pub fn hermite_argument<T: Real>(x: T, k: T, sigma0: T, ttm: T) -> T {
    (x - k - lit::<T>(0.5) * sigma0 * sigma0 * ttm) / (sigma0 * (lit::<T>(2.0) * ttm).sqrt())
}

/// `(-1 / (sigma0 sqrt(2 ttm)))^n H_n(Theta)`.
pub fn scaled_hermite<T: Real>(n: usize, x: T, k: T, sigma0: T, ttm: T) -> Result<T> {
    if !(sigma0 > T::zero() && ttm > T::zero()) {
        return Err(Error::Argument(format!(
            "scaled Hermite needs sigma0 > 0 and ttm > 0, got {sigma0}, {ttm}"
        )));
    }
    let theta = hermite_argument(x, k, sigma0, ttm);
    let scale = -T::one() / (sigma0 * (lit::<T>(2.0) * ttm).sqrt());
    Ok(scale.powi(n as i32) * hermite_poly(n, theta)?)
}

/// `[H_0 .. H_4]` scaled, for one strike.
pub fn scaled_hermite_all<T: Real>(x: T, k: T, sigma0: T, ttm: T) -> Result<[T; 5]> {
    let mut out = [T::zero(); 5];
    for (n, slot) in out.iter_mut().enumerate() {
        *slot = scaled_hermite(n, x, k, sigma0, ttm)?;
    }
    Ok(out)
}
