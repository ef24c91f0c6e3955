//! Zero-coupon bonds, the curve coefficients and the log-forward map.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::model::{ContractSpec, QouParams, TerminalData};
use crate::riccati::{solve_closed_form, RiccatiConfig, RiccatiSolver};
use crate::scalar::{lit, to_f64, Real};

/// `(F, G, H)(t; T, 0, 0)`, the exponents of the bond price.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveCoeffs<T> {
    pub frak_f: T,
    pub frak_g: T,
    pub frak_h: T,
}

impl<T: Real> CurveCoeffs<T> {
    pub fn zero() -> Self {
        Self {
            frak_f: T::zero(),
            frak_g: T::zero(),
            frak_h: T::zero(),
        }
    }

    /// `F + G y + H y^2`, minus the log bond price.
    pub fn exponent(&self, y: T) -> T {
        self.frak_f + self.frak_g * y + self.frak_h * y * y
    }
}

const REAL_RESIDUE_TOL: f64 = 1e-12;

/// `Gamma(t, y; T, nu, Omega) = exp(-F - G y - H y^2)`.
pub fn gamma_fn<T: Real>(
    params: &QouParams<T>,
    t: T,
    y: T,
    maturity: T,
    data: &TerminalData<T>,
) -> Result<Complex<T>> {
    let v = solve_closed_form(params, t, maturity, data)?;
    Ok((-(v.f + v.g * y + v.h * (y * y))).exp())
}

/// Curve coefficients from an already built solver.
pub fn curve_coeffs_with<T: Real>(solver: &RiccatiSolver<T>) -> Result<CurveCoeffs<T>> {
    let v = solver.solve(&TerminalData::zero())?;
    let residue = v.max_imag();
    if residue > lit(REAL_RESIDUE_TOL) {
        return Err(Error::ImaginaryResidue {
            residue: to_f64(residue),
            tolerance: REAL_RESIDUE_TOL,
            context: "curve coefficients",
        });
    }
    Ok(CurveCoeffs {
        frak_f: v.f.re,
        frak_g: v.g.re,
        frak_h: v.h.re,
    })
}

pub fn curve_coeffs<T: Real>(params: &QouParams<T>, t: T, maturity: T) -> Result<CurveCoeffs<T>> {
    let solver = RiccatiSolver::new(params, t, maturity, RiccatiConfig::default())?;
    curve_coeffs_with(&solver)
}

fn checked_bond<T: Real>(c: &CurveCoeffs<T>, y: T) -> Result<T> {
    let b = (-c.exponent(y)).exp();
    if b > T::one() + lit(1e-10) {
        return Err(Error::ModelConsistency(format!(
            "bond price {b} exceeds one, implying negative rates"
        )));
    }
    Ok(b)
}

/// `B_t^T` given the factor value `y` at `t`.
pub fn bond_price<T: Real>(params: &QouParams<T>, t: T, y: T, maturity: T) -> Result<T> {
    checked_bond(&curve_coeffs(params, t, maturity)?, y)
}

/// Bond log-volatility loading `-delta (G + 2 H y)`.
pub fn bond_vol_gamma<T: Real>(params: &QouParams<T>, t: T, y: T, maturity: T) -> Result<T> {
    let (g, h) = crate::riccati::curve_loadings(params, t, maturity)?;
    Ok(-params.delta * (g + lit::<T>(2.0) * h * y))
}

fn xi_from_delta<T: Real>(big_delta: T, tau: T) -> Result<T> {
    if !(big_delta > T::zero()) {
        return Err(Error::NonPositiveForwardRate {
            exponent: to_f64(big_delta),
        });
    }
    Ok((big_delta.exp_m1() / tau).ln())
}

/// Curve coefficients at `t` for the reset and settlement bonds of a contract.
///
/// Built once per `(t, T, Tbar)` and shared read-only across strikes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePair<T> {
    pub reset: CurveCoeffs<T>,
    pub settle: CurveCoeffs<T>,
    pub tau: T,
}

impl<T: Real> CurvePair<T> {
    pub fn new(params: &QouParams<T>, spec: &ContractSpec<T>) -> Result<Self> {
        spec.validate()?;
        Ok(Self {
            reset: curve_coeffs(params, spec.t, spec.reset)?,
            settle: curve_coeffs(params, spec.t, spec.settle)?,
            tau: spec.tau(),
        })
    }

    /// `Delta = log(B^T / B^Tbar)` at factor value `y`.
    pub fn log_bond_ratio(&self, y: T) -> T {
        (self.settle.frak_f - self.reset.frak_f)
            + (self.settle.frak_g - self.reset.frak_g) * y
            + (self.settle.frak_h - self.reset.frak_h) * y * y
    }

    pub fn xi(&self, y: T) -> Result<T> {
        xi_from_delta(self.log_bond_ratio(y), self.tau)
    }

    pub fn settle_bond(&self, y: T) -> Result<T> {
        checked_bond(&self.settle, y)
    }

    pub fn reset_bond(&self, y: T) -> Result<T> {
        checked_bond(&self.reset, y)
    }
}

/// Log simple forward rate `x = log((B^T / B^Tbar - 1) / tau)` at `spec.t`.
pub fn log_forward_rate_xi<T: Real>(params: &QouParams<T>, spec: &ContractSpec<T>, y: T) -> Result<T> {
    CurvePair::new(params, spec)?.xi(y)
}
