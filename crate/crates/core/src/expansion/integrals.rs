//! Strike-independent time integrals of the expansion.
//!
//! Notation: `Cc, Ch, Cf, Cg` are the running integrals from `t` of
//! `c00, h00, f00, g00`; `O(a, b) = int_t^T ds1 a(s1) int_{s1}^T ds2 b(s2)`.

use crate::error::{Error, Result};
use crate::quadrature::UniformGrid;
use crate::scalar::{to_f64, Real};

use super::coeffs::GeneratorCoefficients;

pub const DEFAULT_GRID: usize = 401;

/// Every scalar integral the first- and second-order terms need.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegralTable<T> {
    pub ttm: T,
    /// `int c00`
    pub c00: T,
    /// `int c10 Cc`
    pub c10_cc: T,
    /// `int c01 Cf`, `int c01 Ch`
    pub c01_cf: T,
    pub c01_ch: T,

    /// `int c20 Cc^2`, `int c20 Cc`
    pub c20_cc2: T,
    pub c20_cc: T,
    /// `O(c10 Cc, c10 Cc)`, `O(c10 Cc, c10)`
    pub o_c10cc_c10cc: T,
    pub o_c10cc_c10: T,

    /// `int c11 Cc Ch`, `int c11 Cc Cf`, `int c11 Ch`
    pub c11_cc_ch: T,
    pub c11_cc_cf: T,
    pub c11_ch: T,
    pub o_c10cc_c01ch: T,
    pub o_c10cc_c01cf: T,
    pub o_c10ch_c01: T,
    pub o_c01ch_c10cc: T,
    pub o_c01cf_c10cc: T,
    pub o_c01ch_c10: T,
    pub o_c01cf_c10: T,
    pub o_f10cc_c01: T,
    pub o_h10cc_c01: T,

    /// `int c02 Ch^2`, `int c02 Ch Cf`, `int c02 Cf^2`, `int c02 Cg`
    pub c02_ch2: T,
    pub c02_chcf: T,
    pub c02_cf2: T,
    pub c02_cg: T,
    pub o_c01ch_c01ch: T,
    pub o_c01cf_c01ch: T,
    pub o_c01ch_c01cf: T,
    pub o_c01cg_c01: T,
    pub o_c01cf_c01cf: T,
    pub o_f01ch_c01: T,
    pub o_f01cf_c01: T,
    pub o_h01ch_c01: T,
    pub o_h01cf_c01: T,
}

fn mul<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x * y).collect()
}

impl<T: Real> IntegralTable<T> {
    /// Tabulates the coefficients on `grid_size` uniform nodes of `[t, T]`.
    pub fn build<G: GeneratorCoefficients<T> + ?Sized>(gen: &G, t: T, reset: T, grid_size: usize) -> Result<Self> {
        if grid_size < 101 || grid_size % 2 == 0 {
            return Err(Error::Argument(format!(
                "expansion grid must be odd and >= 101, got {grid_size}"
            )));
        }
        if !(reset > t) {
            return Err(Error::Argument(format!(
                "expansion needs a positive time to reset, got t = {t}, T = {reset}"
            )));
        }
        let grid = UniformGrid::new(t, reset, grid_size)?;
        let n = grid.len();
        let mut cols: [Vec<T>; 13] = Default::default();
        for col in cols.iter_mut() {
            col.reserve(n);
        }
        for &s in grid.nodes() {
            let ts = gen.taylor_at(s)?;
            if !ts.is_finite() {
                return Err(Error::NonFinite {
                    what: "generator Taylor coefficient",
                    time: to_f64(s),
                });
            }
            let vals = [
                ts.c.v00, ts.c.v10, ts.c.v01, ts.c.v20, ts.c.v11, ts.c.v02, ts.f.v00, ts.f.v10, ts.f.v01, ts.g.v00,
                ts.h.v00, ts.h.v10, ts.h.v01,
            ];
            for (col, v) in cols.iter_mut().zip(vals) {
                col.push(v);
            }
        }
        let [c00, c10, c01, c20, c11, c02, f00, f10, f01, g00, h00, h10, h01] = cols;

        let cc = grid.cumulative(&c00);
        let ch = grid.cumulative(&h00);
        let cf = grid.cumulative(&f00);
        let cg = grid.cumulative(&g00);
        let int = |v: &[T]| grid.integrate(v);
        let ord = |a: &[T], b: &[T]| grid.ordered(a, b);

        let c10cc = mul(&c10, &cc);
        let c10ch = mul(&c10, &ch);
        let c01ch = mul(&c01, &ch);
        let c01cf = mul(&c01, &cf);
        let c01cg = mul(&c01, &cg);

        Ok(Self {
            ttm: reset - t,
            c00: int(&c00),
            c10_cc: int(&c10cc),
            c01_cf: int(&c01cf),
            c01_ch: int(&c01ch),

            c20_cc2: int(&mul(&mul(&c20, &cc), &cc)),
            c20_cc: int(&mul(&c20, &cc)),
            o_c10cc_c10cc: ord(&c10cc, &c10cc),
            o_c10cc_c10: ord(&c10cc, &c10),

            c11_cc_ch: int(&mul(&mul(&c11, &cc), &ch)),
            c11_cc_cf: int(&mul(&mul(&c11, &cc), &cf)),
            c11_ch: int(&mul(&c11, &ch)),
            o_c10cc_c01ch: ord(&c10cc, &c01ch),
            o_c10cc_c01cf: ord(&c10cc, &c01cf),
            o_c10ch_c01: ord(&c10ch, &c01),
            o_c01ch_c10cc: ord(&c01ch, &c10cc),
            o_c01cf_c10cc: ord(&c01cf, &c10cc),
            o_c01ch_c10: ord(&c01ch, &c10),
            o_c01cf_c10: ord(&c01cf, &c10),
            o_f10cc_c01: ord(&mul(&f10, &cc), &c01),
            o_h10cc_c01: ord(&mul(&h10, &cc), &c01),

            c02_ch2: int(&mul(&mul(&c02, &ch), &ch)),
            c02_chcf: int(&mul(&mul(&c02, &ch), &cf)),
            c02_cf2: int(&mul(&mul(&c02, &cf), &cf)),
            c02_cg: int(&mul(&c02, &cg)),
            o_c01ch_c01ch: ord(&c01ch, &c01ch),
            o_c01cf_c01ch: ord(&c01cf, &c01ch),
            o_c01ch_c01cf: ord(&c01ch, &c01cf),
            o_c01cg_c01: ord(&c01cg, &c01),
            o_c01cf_c01cf: ord(&c01cf, &c01cf),
            o_f01ch_c01: ord(&mul(&f01, &ch), &c01),
            o_f01cf_c01: ord(&mul(&f01, &cf), &c01),
            o_h01ch_c01: ord(&mul(&h01, &ch), &c01),
            o_h01cf_c01: ord(&mul(&h01, &cf), &c01),
        })
    }

    /// All entries in declaration order, for refinement comparisons.
    pub fn entries(&self) -> Vec<T> {
        vec![
            self.c00,
            self.c10_cc,
            self.c01_cf,
            self.c01_ch,
            self.c20_cc2,
            self.c20_cc,
            self.o_c10cc_c10cc,
            self.o_c10cc_c10,
            self.c11_cc_ch,
            self.c11_cc_cf,
            self.c11_ch,
            self.o_c10cc_c01ch,
            self.o_c10cc_c01cf,
            self.o_c10ch_c01,
            self.o_c01ch_c10cc,
            self.o_c01cf_c10cc,
            self.o_c01ch_c10,
            self.o_c01cf_c10,
            self.o_f10cc_c01,
            self.o_h10cc_c01,
            self.c02_ch2,
            self.c02_chcf,
            self.c02_cf2,
            self.c02_cg,
            self.o_c01ch_c01ch,
            self.o_c01cf_c01ch,
            self.o_c01ch_c01cf,
            self.o_c01cg_c01,
            self.o_c01cf_c01cf,
            self.o_f01ch_c01,
            self.o_f01cf_c01,
            self.o_h01ch_c01,
            self.o_h01cf_c01,
        ]
    }
}
