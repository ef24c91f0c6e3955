//! Explicit zeroth-, first- and second-order implied volatility terms.

use crate::error::{Error, Result};
use crate::model::{ContractSpec, QouParams};
use crate::scalar::{lit, to_f64, Real};

use super::coeffs::{GeneratorCoefficients, QouCoefficients};
use super::hermite::scaled_hermite_all;
use super::integrals::{IntegralTable, DEFAULT_GRID};

/// Expansion terms at one strike.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IvApprox<T> {
    pub sigma0: T,
    pub sigma1: T,
    pub sigma2: T,
    pub sigma10: T,
    pub sigma01: T,
    pub sigma20: T,
    pub sigma11: T,
    pub sigma02: T,
    /// Partial sums `sigma0`, `sigma0 + sigma1`, `sigma0 + sigma1 + sigma2`.
    pub sbar: [T; 3],
}

impl<T: Real> IvApprox<T> {
    /// Partial sum of the given order, clamped to 2.
    pub fn bar(&self, order: usize) -> T {
        self.sbar[order.min(2)]
    }

    /// Copy with every term above `order` set to zero.
    pub fn truncated(&self, order: usize) -> Self {
        let z = T::zero();
        let mut out = *self;
        if order < 2 {
            out.sigma2 = z;
            out.sigma20 = z;
            out.sigma11 = z;
            out.sigma02 = z;
        }
        if order < 1 {
            out.sigma1 = z;
            out.sigma10 = z;
            out.sigma01 = z;
        }
        out.sbar = [out.sigma0, out.sigma0 + out.sigma1, out.sigma0 + out.sigma1 + out.sigma2];
        out
    }
}

/// `sqrt(2 int c00 / (T - t))`.
pub fn sigma0<T: Real>(table: &IntegralTable<T>) -> Result<T> {
    if !(table.c00 > T::zero()) {
        return Err(Error::DegenerateDiffusion {
            integral: to_f64(table.c00),
        });
    }
    Ok((lit::<T>(2.0) * table.c00 / table.ttm).sqrt())
}

/// `(sigma10, sigma01)` given the scaled Hermite terms of the strike.
pub fn sigma1<T: Real>(table: &IntegralTable<T>, s0: T, hm: &[T; 5]) -> (T, T) {
    let pre = T::one() / (table.ttm * s0);
    let two = lit::<T>(2.0);
    let s10 = pre * table.c10_cc * (two * hm[1] - T::one());
    let s01 = pre * (table.c01_cf + table.c01_ch * hm[1]);
    (s10, s01)
}

/// `(sigma20, sigma11, sigma02)` given the first-order parts.
///
/// The Hermite coefficients are the ones reproduced by the operator-algebra
/// check in the test suite.
pub fn sigma2<T: Real>(table: &IntegralTable<T>, s0: T, hm: &[T; 5], s10: T, s01: T) -> (T, T, T) {
    let tb = table;
    let [_, h1, h2, h3, h4] = *hm;
    let l = |x: f64| lit::<T>(x);
    let one = T::one();
    let pre = one / (tb.ttm * s0);
    let sub = |a: T| a * (tb.ttm * s0 * (h2 - h1) + one / s0);

    let s20 = pre
        * (tb.c20_cc2 * (l(4.0) * h2 - l(4.0) * h1 + one)
            + l(2.0) * tb.c20_cc
            + tb.o_c10cc_c10cc * (l(4.0) * h4 - l(8.0) * h3 + l(5.0) * h2 - h1)
            + tb.o_c10cc_c10 * (l(6.0) * h2 - l(6.0) * h1 + one))
        - l(0.5) * sub(s10 * s10);

    let (a, b) = (tb.c11_cc_ch, tb.c11_cc_cf);
    let s11 = pre
        * (l(2.0) * a * h2 + (l(2.0) * b - a) * h1 - b
            + tb.c11_ch
            + l(2.0) * tb.o_c10cc_c01ch * h4
            + (l(2.0) * tb.o_c10cc_c01cf - l(3.0) * tb.o_c10cc_c01ch) * h3
            + (tb.o_c10cc_c01ch - l(3.0) * tb.o_c10cc_c01cf + tb.o_c10ch_c01) * h2
            + (tb.o_c10cc_c01cf - tb.o_c10ch_c01) * h1
            + l(2.0) * tb.o_c01ch_c10cc * h4
            + (l(2.0) * tb.o_c01cf_c10cc - l(3.0) * tb.o_c01ch_c10cc) * h3
            + (tb.o_c01ch_c10cc - l(3.0) * tb.o_c01cf_c10cc + l(3.0) * tb.o_c01ch_c10) * h2
            + (l(2.0) * tb.o_c01cf_c10 + tb.o_c01cf_c10cc - l(2.0) * tb.o_c01ch_c10) * h1
            - tb.o_c01cf_c10
            + tb.o_f10cc_c01 * (l(2.0) * h1 - one)
            + tb.o_h10cc_c01 * (l(2.0) * h2 - h1))
        - sub(s10 * s01);

    let (p1, p2, p3) = (tb.o_c01ch_c01ch, tb.o_c01cf_c01ch, tb.o_c01ch_c01cf);
    let (p4, p5) = (tb.o_c01cg_c01, tb.o_c01cf_c01cf);
    let s02 = pre
        * (tb.c02_ch2 * h2
            + l(2.0) * tb.c02_chcf * h1
            + tb.c02_cf2
            + l(2.0) * tb.c02_cg
            + p1 * h4
            + (p2 + p3 - p1) * h3
            + (l(2.0) * p4 + p5 - p2 - p3) * h2
            - (l(2.0) * p4 + p5) * h1
            + tb.o_f01ch_c01 * h1
            + tb.o_f01cf_c01
            + tb.o_h01ch_c01 * h2
            + tb.o_h01cf_c01 * h1)
        - l(0.5) * sub(s01 * s01);

    (s20, s11, s02)
}

/// Expansion for one `(t, T)` pair and expansion point, reusable across
/// strikes.
#[derive(Debug, Clone)]
pub struct IvExpansion<T> {
    table: IntegralTable<T>,
    x: T,
    sigma0: T,
}

impl<T: Real> IvExpansion<T> {
    pub fn new<G: GeneratorCoefficients<T> + ?Sized>(gen: &G, t: T, reset: T, x: T, grid_size: usize) -> Result<Self> {
        let table = IntegralTable::build(gen, t, reset, grid_size)?;
        let sigma0 = sigma0(&table)?;
        Ok(Self { table, x, sigma0 })
    }

    /// QOU expansion about the contract's log forward rate and `y`.
    pub fn for_contract(params: &QouParams<T>, spec: &ContractSpec<T>, y: T, grid_size: usize) -> Result<Self> {
        let gen = QouCoefficients::new(params, spec, y)?;
        Self::new(&gen, spec.t, spec.reset, gen.x(), grid_size)
    }

    pub fn table(&self) -> &IntegralTable<T> {
        &self.table
    }

    pub fn log_forward(&self) -> T {
        self.x
    }

    pub fn sigma0(&self) -> T {
        self.sigma0
    }

    pub fn approx(&self, k: T) -> Result<IvApprox<T>> {
        let s0 = self.sigma0;
        let hm = scaled_hermite_all(self.x, k, s0, self.table.ttm)?;
        let (s10, s01) = sigma1(&self.table, s0, &hm);
        let (s20, s11, s02) = sigma2(&self.table, s0, &hm, s10, s01);
        let s1 = s10 + s01;
        let s2 = s20 + s11 + s02;
        Ok(IvApprox {
            sigma0: s0,
            sigma1: s1,
            sigma2: s2,
            sigma10: s10,
            sigma01: s01,
            sigma20: s20,
            sigma11: s11,
            sigma02: s02,
            sbar: [s0, s0 + s1, s0 + s1 + s2],
        })
    }
}

/// Implied volatility approximation of the given order at `spec.log_strike`.
pub fn ivol_approx<T: Real>(order: usize, params: &QouParams<T>, spec: &ContractSpec<T>, y: T) -> Result<IvApprox<T>> {
    if order > 2 {
        return Err(Error::Argument(format!("expansion order {order} not supported (max 2)")));
    }
    let exp = IvExpansion::for_contract(params, spec, y, DEFAULT_GRID)?;
    Ok(exp.approx(spec.log_strike)?.truncated(order))
}
