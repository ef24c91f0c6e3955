//! Black caplet formula on the settlement-forward measure, vega and
//! implied volatility inversion.

use crate::error::{Bound, Error, Result};
use crate::scalar::{lit, to_f64, Real};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlackInputs<T> {
    /// Log forward rate.
    pub x: T,
    /// Log strike.
    pub k: T,
    /// Time to reset `T - t`.
    pub ttm: T,
    /// Accrual fraction `Tbar - T`.
    pub tau: T,
    pub sigma: T,
}

impl<T: Real> BlackInputs<T> {
    pub fn new(x: T, k: T, ttm: T, tau: T, sigma: T) -> Result<Self> {
        let ok = x.is_finite()
            && k.is_finite()
            && ttm > T::zero()
            && ttm.is_finite()
            && tau > T::zero()
            && tau.is_finite()
            && sigma > T::zero()
            && sigma.is_finite();
        if !ok {
            return Err(Error::Argument(format!(
                "invalid Black inputs x={x} k={k} ttm={ttm} tau={tau} sigma={sigma}"
            )));
        }
        Ok(Self { x, k, ttm, tau, sigma })
    }

    pub fn with_sigma(&self, sigma: T) -> Self {
        Self { sigma, ..*self }
    }

    fn d_plus_minus(&self) -> (T, T) {
        let sd = self.sigma * self.ttm.sqrt();
        let m = (self.x - self.k) / sd;
        let half = lit::<T>(0.5) * sd;
        (m + half, m - half)
    }
}

/// Standard normal distribution function.
pub fn norm_cdf<T: Real>(z: T) -> T {
    lit::<T>(0.5) * (-z * T::FRAC_1_SQRT_2()).erfc()
}

/// Standard normal density.
pub fn norm_pdf<T: Real>(z: T) -> T {
    let inv_sqrt_2pi = T::FRAC_1_SQRT_2() * T::FRAC_2_SQRT_PI() * lit(0.5);
    inv_sqrt_2pi * (lit::<T>(-0.5) * z * z).exp()
}

/// `tau (e^x N(d+) - e^k N(d-))`.
///
/// In the money the price is assembled as intrinsic value plus the
/// out-of-the-money put, so the time value keeps full relative accuracy.
pub fn black_price<T: Real>(inp: &BlackInputs<T>) -> T {
    let (dp, dm) = inp.d_plus_minus();
    let (fx, fk) = (inp.x.exp(), inp.k.exp());
    if inp.x > inp.k {
        let put = fk * norm_cdf(-dm) - fx * norm_cdf(-dp);
        inp.tau * ((fx - fk) + put)
    } else {
        inp.tau * (fx * norm_cdf(dp) - fk * norm_cdf(dm))
    }
}

/// `d price / d sigma = tau e^x phi(d+) sqrt(ttm)`.
pub fn black_vega<T: Real>(inp: &BlackInputs<T>) -> T {
    let (dp, _) = inp.d_plus_minus();
    inp.tau * inp.x.exp() * norm_pdf(dp) * inp.ttm.sqrt()
}

/// `d^2 price / d sigma^2 = vega d+ d- / sigma`.
pub fn black_vomma<T: Real>(inp: &BlackInputs<T>) -> T {
    let (dp, dm) = inp.d_plus_minus();
    black_vega(inp) * dp * dm / inp.sigma
}

pub const SIGMA_MIN: f64 = 1e-8;
pub const SIGMA_MAX: f64 = 5.0;
pub const MAX_ITERATIONS: usize = 200;

/// Black volatility reproducing `price`.
///
/// Newton steps on a shrinking bracket in `[1e-8, 5]`, falling back to
/// bisection whenever a step leaves the bracket. Succeeds once the price
/// residual is at most `1e-12 tau e^x`.
pub fn implied_vol_from_price<T: Real>(price: T, x: T, k: T, ttm: T, tau: T) -> Result<T> {
    let probe = BlackInputs::new(x, k, ttm, tau, T::one())?;
    let upper = tau * x.exp();
    let lower = tau * (x.exp() - k.exp()).max(T::zero());
    if !price.is_finite() || price <= lower {
        return Err(Error::ArbitrageBounds {
            price: to_f64(price),
            bound: Bound::Lower,
            value: to_f64(lower),
        });
    }
    if price >= upper {
        return Err(Error::ArbitrageBounds {
            price: to_f64(price),
            bound: Bound::Upper,
            value: to_f64(upper),
        });
    }
    let tol = lit::<T>(1e-12) * upper;
    let (mut lo, mut hi) = (lit::<T>(SIGMA_MIN), lit::<T>(SIGMA_MAX));
    let f = |s: T| black_price(&probe.with_sigma(s)) - price;
    let f_lo = f(lo);
    if f_lo.abs() <= tol {
        return Ok(lo);
    }
    let f_hi = f(hi);
    if f_hi.abs() <= tol {
        return Ok(hi);
    }
    if f_lo > T::zero() || f_hi < T::zero() {
        return Err(Error::Convergence {
            iterations: 0,
            residual: to_f64(if f_lo > T::zero() { f_lo } else { f_hi }),
        });
    }

    // Start where the at-the-money approximation puts the volatility.
    let m = (x - k).abs();
    let guess = (lit::<T>(2.0) * m / ttm).sqrt().max(lit(0.2));
    let mut sigma = guess.min(hi).max(lo);
    let mut residual = f(sigma);
    for _ in 0..MAX_ITERATIONS {
        if residual.abs() <= tol {
            return Ok(sigma);
        }
        if residual > T::zero() {
            hi = sigma;
        } else {
            lo = sigma;
        }
        let vega = black_vega(&probe.with_sigma(sigma));
        let newton = sigma - residual / vega;
        sigma = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            lit::<T>(0.5) * (lo + hi)
        };
        residual = f(sigma);
        if hi - lo <= T::epsilon() * sigma {
            // Bracket at rounding level; the residual cannot improve further.
            if residual.abs() <= tol {
                return Ok(sigma);
            }
            break;
        }
    }
    Err(Error::Convergence {
        iterations: MAX_ITERATIONS,
        residual: to_f64(residual),
    })
}
