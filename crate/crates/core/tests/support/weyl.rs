//! Independent second-order implied-volatility oracle.
//!
//! Works on the price instead of the volatility. With `A = A0 + A1 + A2`
//! the generator split by Taylor order about the expansion point,
//!
//! ```text
//! u1 = int P0(t,s) A1(s) u0(s) ds
//! u2 = int P0(t,s) A2(s) u0(s) ds
//!    + int_{t<s1<s2<T} P0(t,s1) A1(s1) P0(s1,s2) A1(s2) u0(s2)
//! ```
//!
//! Functions are kept as finite sums of `xh^a yh^b d_x^n u0` where `xh, yh`
//! are displacements from the expansion point. Moving the Gaussian
//! semigroup `P0` past a polynomial factor uses Gaussian integration by
//! parts, `P0 xh = (xh + m_x + C_xx d_x + C_xy d_y) P0`, and `P0` commutes
//! with derivatives, so `P0(t,s) d^n u0(s) = d^n u0(t)`. Evaluating at the
//! expansion point keeps the `a = b = 0` terms. Time integrals are nested
//! Gauss-Legendre rules. The price corrections are then converted to
//! volatility corrections with vega and vomma.

use std::collections::BTreeMap;

use qou_core::expansion::{GeneratorCoefficients, TaylorSet};

use super::{gauss_legendre, gl_integrate};

/// `sum coef * xh^a yh^b d_x^n u0`, keyed by `(a, b, n)`.
#[derive(Debug, Clone, Default)]
pub struct Expr(BTreeMap<(u32, u32, u32), f64>);

impl Expr {
    pub fn u0() -> Self {
        let mut e = Expr::default();
        e.add((0, 0, 0), 1.0);
        e
    }

    fn add(&mut self, key: (u32, u32, u32), v: f64) {
        *self.0.entry(key).or_insert(0.0) += v;
    }

    fn scale_add(&mut self, other: &Expr, s: f64) {
        for (&k, &v) in &other.0 {
            self.add(k, s * v);
        }
    }

    fn dx(&self) -> Expr {
        let mut e = Expr::default();
        for (&(a, b, n), &v) in &self.0 {
            if a > 0 {
                e.add((a - 1, b, n), a as f64 * v);
            }
            e.add((a, b, n + 1), v);
        }
        e
    }

    fn dy(&self) -> Expr {
        let mut e = Expr::default();
        for (&(a, b, n), &v) in &self.0 {
            if b > 0 {
                e.add((a, b - 1, n), b as f64 * v);
            }
        }
        e
    }

    fn mul(&self, da: u32, db: u32) -> Expr {
        Expr(self.0.iter().map(|(&(a, b, n), &v)| ((a + da, b + db, n), v)).collect())
    }

    /// Value at the expansion point given `d^n u0` there.
    pub fn at_point(&self, derivs: &[f64]) -> f64 {
        self.0
            .iter()
            .filter(|(&(a, b, _), _)| a == 0 && b == 0)
            .map(|(&(_, _, n), &v)| v * derivs[n as usize])
            .sum()
    }
}

/// `A_ij` of one Taylor order applied to `e`, times `xh^i yh^j`.
fn apply_generator(tay: &TaylorSet<f64>, order: u32, e: &Expr) -> Expr {
    let dx = e.dx();
    let dy = e.dy();
    let dxx = dx.dx();
    let dyy = dy.dy();
    let dxy = dx.dy();
    let mut out = Expr::default();
    for i in 0..=order {
        let j = order - i;
        let get = |t: &qou_core::expansion::Taylor2<f64>| t.get(i as usize, j as usize).unwrap();
        let (c, f, g, h) = (get(&tay.c), get(&tay.f), get(&tay.g), get(&tay.h));
        let mut inner = Expr::default();
        inner.scale_add(&dxx, c);
        inner.scale_add(&dx, -c);
        inner.scale_add(&dy, f);
        inner.scale_add(&dyy, g);
        inner.scale_add(&dxy, h);
        out.scale_add(&inner.mul(i, j), 1.0);
    }
    out
}

/// Mean and covariance of the frozen-coefficient Gaussian between two times.
#[derive(Debug, Clone, Copy)]
struct Moments {
    mx: f64,
    my: f64,
    cxx: f64,
    cxy: f64,
    cyy: f64,
}

/// `P0(a, b)` applied to `e` (whose `u0` lives at `b`), result at `a`.
fn propagate(m: &Moments, e: &Expr) -> Expr {
    let mut out = Expr::default();
    for (&(a, b, n), &v) in &e.0 {
        let mut term = Expr::default();
        term.add((0, 0, n), v);
        for _ in 0..b {
            term = shift(&term, m.my, m.cxy, m.cyy, false);
        }
        for _ in 0..a {
            term = shift(&term, m.mx, m.cxx, m.cxy, true);
        }
        out.scale_add(&term, 1.0);
    }
    out
}

// (zh + mean + cov_x d_x + cov_y d_y) e with zh = xh or yh.
fn shift(e: &Expr, mean: f64, cov_x: f64, cov_y: f64, is_x: bool) -> Expr {
    let mut out = if is_x { e.mul(1, 0) } else { e.mul(0, 1) };
    out.scale_add(e, mean);
    out.scale_add(&e.dx(), cov_x);
    out.scale_add(&e.dy(), cov_y);
    out
}

/// Price expansion terms at the expansion point.
pub struct PriceOracle<'a, G: GeneratorCoefficients<f64>> {
    gen: &'a G,
    rule: Vec<(f64, f64)>,
}

impl<'a, G: GeneratorCoefficients<f64>> PriceOracle<'a, G> {
    pub fn new(gen: &'a G, nodes: usize) -> Self {
        Self {
            gen,
            rule: gauss_legendre(nodes),
        }
    }

    fn tay(&self, s: f64) -> TaylorSet<f64> {
        self.gen.taylor_at(s).unwrap()
    }

    fn moments(&self, a: f64, b: f64) -> Moments {
        let int = |sel: fn(&TaylorSet<f64>) -> f64| gl_integrate(a, b, &self.rule, |s| sel(&self.tay(s)));
        let c = int(|t| t.c.v00);
        Moments {
            mx: -c,
            my: int(|t| t.f.v00),
            cxx: 2.0 * c,
            cxy: int(|t| t.h.v00),
            cyy: 2.0 * int(|t| t.g.v00),
        }
    }

    /// Integrated variance `2 int c00` over `[t, reset]`.
    pub fn total_variance(&self, t: f64, reset: f64) -> f64 {
        2.0 * gl_integrate(t, reset, &self.rule, |s| self.tay(s).c.v00)
    }

    /// `(u1, u2)` as expressions in `d^n u0(t)`.
    pub fn corrections(&self, t: f64, reset: f64) -> (Expr, Expr) {
        let u0 = Expr::u0();
        let mut u1 = Expr::default();
        let mut u2 = Expr::default();
        let (mid, half) = (0.5 * (t + reset), 0.5 * (reset - t));
        for &(z, w) in &self.rule {
            let s1 = mid + half * z;
            let w1 = w * half;
            let tay1 = self.tay(s1);
            let m01 = self.moments(t, s1);
            u1.scale_add(&propagate(&m01, &apply_generator(&tay1, 1, &u0)), w1);
            u2.scale_add(&propagate(&m01, &apply_generator(&tay1, 2, &u0)), w1);

            let (mid2, half2) = (0.5 * (s1 + reset), 0.5 * (reset - s1));
            let mut inner = Expr::default();
            for &(z2, w2) in &self.rule {
                let s2 = mid2 + half2 * z2;
                let tay2 = self.tay(s2);
                let m12 = self.moments(s1, s2);
                inner.scale_add(&propagate(&m12, &apply_generator(&tay2, 1, &u0)), w2 * half2);
            }
            u2.scale_add(&propagate(&m01, &apply_generator(&tay1, 1, &inner)), w1);
        }
        (u1, u2)
    }
}

fn norm_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

fn norm_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

// Probabilists' Hermite polynomial.
fn he(n: usize, z: f64) -> f64 {
    let (mut a, mut b) = (1.0, z);
    if n == 0 {
        return a;
    }
    for k in 1..n {
        let c = z * b - k as f64 * a;
        a = b;
        b = c;
    }
    b
}

/// `d^n_x P` for `P = e^x N(d1) - e^k N(d2)` with total variance `v`,
/// `n = 0..=max`.
pub fn black_log_derivatives(x: f64, k: f64, v: f64, max: usize) -> Vec<f64> {
    let sv = v.sqrt();
    let d1 = (x - k + 0.5 * v) / sv;
    let d2 = d1 - sv;
    // m-th derivative of N at d1.
    let nd = |m: usize| {
        if m == 0 {
            norm_cdf(d1)
        } else {
            let sign = if (m - 1) % 2 == 0 { 1.0 } else { -1.0 };
            sign * he(m - 1, d1) * norm_pdf(d1)
        }
    };
    let mut out = vec![x.exp() * norm_cdf(d1) - k.exp() * norm_cdf(d2)];
    for n in 1..=max {
        let mut acc = 0.0;
        let mut binom = 1.0;
        for m in 0..n {
            acc += binom * sv.powi(-(m as i32)) * nd(m);
            binom *= (n - 1 - m) as f64 / (m + 1) as f64;
        }
        out.push(x.exp() * acc);
    }
    out
}

/// `(sigma0, sigma1, sigma2)` from the price expansion at log-strike `k`.
pub fn oracle_sigmas<G: GeneratorCoefficients<f64>>(
    gen: &G,
    t: f64,
    reset: f64,
    x: f64,
    k: f64,
    nodes: usize,
) -> (f64, f64, f64) {
    let oracle = PriceOracle::new(gen, nodes);
    let ttm = reset - t;
    let v = oracle.total_variance(t, reset);
    let s0 = (v / ttm).sqrt();
    let (u1, u2) = oracle.corrections(t, reset);
    let d = black_log_derivatives(x, k, v, 8);
    let (p1, p2) = (u1.at_point(&d), u2.at_point(&d));
    let sv = v.sqrt();
    let d1 = (x - k + 0.5 * v) / sv;
    let d2 = d1 - sv;
    let vega = x.exp() * norm_pdf(d1) * ttm.sqrt();
    let vomma = vega * d1 * d2 / s0;
    let s1 = p1 / vega;
    let s2 = (p2 - 0.5 * s1 * s1 * vomma) / vega;
    (s0, s1, s2)
}
