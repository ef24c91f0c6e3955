//! Model parameters and contract description.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{lit, to_f64, Real};

/// Quadratic Ornstein-Uhlenbeck short-rate model
/// `dY = kappa (theta - Y) dt + delta dW`, `r = q + Y^2`, started at `y0`.
///
/// In the generic quadratic term-structure notation this is the scalar case
/// with drift intercept `kappa * theta`, drift slope `-kappa`, volatility
/// `delta` and unit quadratic loading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QouParams<T> {
    pub kappa: T,
    pub theta: T,
    pub delta: T,
    pub q: T,
    pub y0: T,
}

impl<T: Real> QouParams<T> {
    pub fn new(kappa: T, theta: T, delta: T, q: T, y0: T) -> Result<Self> {
        let p = Self {
            kappa,
            theta,
            delta,
            q,
            y0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let all_finite = [self.kappa, self.theta, self.delta, self.q, self.y0]
            .iter()
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::Params("parameters must be finite".into()));
        }
        if self.kappa <= T::zero() {
            return Err(Error::Params(format!("kappa must be > 0, got {}", self.kappa)));
        }
        if self.delta <= T::zero() {
            return Err(Error::Params(format!("delta must be > 0, got {}", self.delta)));
        }
        if self.theta < T::zero() {
            return Err(Error::Params(format!("theta must be >= 0, got {}", self.theta)));
        }
        if self.q < T::zero() {
            return Err(Error::Params(format!("q must be >= 0, got {}", self.q)));
        }
        Ok(())
    }

    /// Drift intercept `kappa * theta`.
    #[inline]
    pub fn drift_intercept(&self) -> T {
        self.kappa * self.theta
    }

    /// Short rate `q + y^2` implied by a factor value.
    #[inline]
    pub fn short_rate(&self, y: T) -> T {
        self.q + y * y
    }

    /// `mu = 2 sqrt(kappa^2 + 2 delta^2)`.
    #[inline]
    pub fn mu(&self) -> T {
        lit::<T>(2.0) * (self.kappa * self.kappa + lit::<T>(2.0) * self.delta * self.delta).sqrt()
    }

    pub fn cast<U: Real>(&self) -> QouParams<U> {
        QouParams {
            kappa: lit(to_f64(self.kappa)),
            theta: lit(to_f64(self.theta)),
            delta: lit(to_f64(self.delta)),
            q: lit(to_f64(self.q)),
            y0: lit(to_f64(self.y0)),
        }
    }
}

impl QouParams<f64> {
    /// Base-case parameter set
    /// (`q = 0, kappa = 0.9, theta = 0.25/0.9, delta = 0.2, y = sqrt(0.08)`).
    pub fn base_case() -> Self {
        Self {
            kappa: 0.9,
            theta: 0.25 / 0.9,
            delta: 0.2,
            q: 0.0,
            y0: 0.08f64.sqrt(),
        }
    }

    /// Parameter set equivalent to a CIR short rate
    /// (`kappa = 0.045, delta = sqrt(0.035), y = sqrt(0.08), theta = q = 0`).
    pub fn cir_case() -> Self {
        Self {
            kappa: 0.045,
            theta: 0.0,
            delta: 0.035f64.sqrt(),
            q: 0.0,
            y0: 0.08f64.sqrt(),
        }
    }
}

/// Terminal data `(nu, Omega)` of the exponential-quadratic transform
/// `E exp(-int r + nu Y_T + Omega Y_T^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TerminalData<T> {
    pub nu: Complex<T>,
    pub omega: Complex<T>,
}

impl<T: Real> TerminalData<T> {
    pub fn new(nu: Complex<T>, omega: Complex<T>) -> Result<Self> {
        let finite = |z: Complex<T>| z.re.is_finite() && z.im.is_finite();
        if !finite(nu) || !finite(omega) {
            return Err(Error::Argument("terminal data must be finite".into()));
        }
        Ok(Self { nu, omega })
    }

    pub fn real(nu: T, omega: T) -> Self {
        Self {
            nu: Complex::new(nu, T::zero()),
            omega: Complex::new(omega, T::zero()),
        }
    }

    pub fn zero() -> Self {
        Self::real(T::zero(), T::zero())
    }
}

/// Caplet dates and strike: valuation `t`, reset `reset`, settlement
/// `settle`, log-strike `log_strike`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContractSpec<T> {
    pub t: T,
    pub reset: T,
    pub settle: T,
    pub log_strike: T,
}

impl<T: Real> ContractSpec<T> {
    pub fn new(t: T, reset: T, settle: T, log_strike: T) -> Result<Self> {
        let spec = Self {
            t,
            reset,
            settle,
            log_strike,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t.is_finite() && self.reset.is_finite() && self.settle.is_finite()) {
            return Err(Error::Argument("contract dates must be finite".into()));
        }
        if self.t > self.reset {
            return Err(Error::Argument(format!(
                "valuation time {} is after the reset date {}",
                self.t, self.reset
            )));
        }
        if self.settle <= self.reset {
            return Err(Error::Argument(format!(
                "settlement {} must be strictly after reset {}",
                self.settle, self.reset
            )));
        }
        if !self.log_strike.is_finite() {
            return Err(Error::Argument("log-strike must be finite".into()));
        }
        Ok(())
    }

    /// Tenor `settle - reset`.
    #[inline]
    pub fn tau(&self) -> T {
        self.settle - self.reset
    }

    /// Time to reset `reset - t`.
    #[inline]
    pub fn ttm(&self) -> T {
        self.reset - self.t
    }

    pub fn with_log_strike(&self, log_strike: T) -> Self {
        Self { log_strike, ..*self }
    }
}
