//! Coefficients of the generator of `(X, Y)` under the settlement-forward
//! measure and their Taylor coefficients about the expansion point.
//!
//! With `e = e^{-x}/tau`, `w = 1 + e`, `DG = G(s;Tbar) - G(s;T)`,
//! `DH = H(s;Tbar) - H(s;T)` and `S = DG + 2 DH y`:
//!
//! ```text
//! c = delta^2 w^2 S^2 / 2
//! f = kappa theta - kappa y - delta^2 (G(s;Tbar) + 2 H(s;Tbar) y)
//! g = delta^2 / 2
//! h = delta^2 w S
//! ```

use serde::{Deserialize, Serialize};

use crate::bond::CurvePair;
use crate::error::{Error, Result};
use crate::model::{ContractSpec, QouParams};
use crate::riccati::curve_loadings;
use crate::scalar::{lit, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Coefficient {
    C,
    F,
    G,
    H,
}

impl Coefficient {
    pub const ALL: [Coefficient; 4] = [Coefficient::C, Coefficient::F, Coefficient::G, Coefficient::H];
}

/// Taylor coefficients `d^i_x d^j_y chi / (i! j!)` up to total order two.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Taylor2<T> {
    pub v00: T,
    pub v10: T,
    pub v01: T,
    pub v20: T,
    pub v11: T,
    pub v02: T,
}

impl<T: Real> Taylor2<T> {
    pub fn zero() -> Self {
        let z = T::zero();
        Self {
            v00: z,
            v10: z,
            v01: z,
            v20: z,
            v11: z,
            v02: z,
        }
    }

    pub fn get(&self, i: usize, j: usize) -> Result<T> {
        match (i, j) {
            (0, 0) => Ok(self.v00),
            (1, 0) => Ok(self.v10),
            (0, 1) => Ok(self.v01),
            (2, 0) => Ok(self.v20),
            (1, 1) => Ok(self.v11),
            (0, 2) => Ok(self.v02),
            _ => Err(Error::Argument(format!(
                "Taylor order ({i}, {j}) not supported, need i + j <= 2"
            ))),
        }
    }

    fn is_finite(&self) -> bool {
        [self.v00, self.v10, self.v01, self.v20, self.v11, self.v02]
            .iter()
            .all(|v| v.is_finite())
    }
}

/// Taylor coefficients of all four generator coefficients at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaylorSet<T> {
    pub c: Taylor2<T>,
    pub f: Taylor2<T>,
    pub g: Taylor2<T>,
    pub h: Taylor2<T>,
}

impl<T: Real> TaylorSet<T> {
    pub fn get(&self, chi: Coefficient) -> &Taylor2<T> {
        match chi {
            Coefficient::C => &self.c,
            Coefficient::F => &self.f,
            Coefficient::G => &self.g,
            Coefficient::H => &self.h,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.c.is_finite() && self.f.is_finite() && self.g.is_finite() && self.h.is_finite()
    }
}

/// A two-factor generator `c (dxx - dx) + f dy + g dyy + h dxy` whose
/// coefficients can be Taylor expanded about a fixed point.
pub trait GeneratorCoefficients<T: Real>: Sync {
    /// Taylor coefficients at time `s` about the expansion point.
    fn taylor_at(&self, s: T) -> Result<TaylorSet<T>>;
}

/// The QOU coefficients for one contract, expanded about `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QouCoefficients<T> {
    params: QouParams<T>,
    reset: T,
    settle: T,
    x: T,
    y: T,
}

impl<T: Real> QouCoefficients<T> {
    /// Expansion about the contract's own log forward rate and `y`.
    pub fn new(params: &QouParams<T>, spec: &ContractSpec<T>, y: T) -> Result<Self> {
        let x = CurvePair::new(params, spec)?.xi(y)?;
        Ok(Self::at_point(params, spec, x, y))
    }

    /// Expansion about an arbitrary `(x, y)`.
    pub fn at_point(params: &QouParams<T>, spec: &ContractSpec<T>, x: T, y: T) -> Self {
        Self {
            params: *params,
            reset: spec.reset,
            settle: spec.settle,
            x,
            y,
        }
    }

    pub fn x(&self) -> T {
        self.x
    }

    pub fn y(&self) -> T {
        self.y
    }

    fn tau(&self) -> T {
        self.settle - self.reset
    }

    /// `(G(s;T), H(s;T), G(s;Tbar), H(s;Tbar))`.
    fn loadings(&self, s: T) -> Result<(T, T, T, T)> {
        let (gt, ht) = curve_loadings(&self.params, s, self.reset)?;
        let (gb, hb) = curve_loadings(&self.params, s, self.settle)?;
        Ok((gt, ht, gb, hb))
    }

    /// The coefficient `chi` itself at `(s, x, y)`.
    pub fn value(&self, chi: Coefficient, s: T, x: T, y: T) -> Result<T> {
        let (gt, ht, gb, hb) = self.loadings(s)?;
        let p = &self.params;
        let d2 = p.delta * p.delta;
        let half = lit::<T>(0.5);
        let two = lit::<T>(2.0);
        let w = T::one() + (-x).exp() / self.tau();
        let sy = (gb - gt) + two * (hb - ht) * y;
        Ok(match chi {
            Coefficient::C => half * d2 * w * w * sy * sy,
            Coefficient::F => p.drift_intercept() - p.kappa * y - d2 * (gb + two * hb * y),
            Coefficient::G => half * d2,
            Coefficient::H => d2 * w * sy,
        })
    }

    /// Taylor coefficients at time `s` about an arbitrary `(x, y)`.
    pub fn taylor_around(&self, s: T, x: T, y: T) -> Result<TaylorSet<T>> {
        let (gt, ht, gb, hb) = self.loadings(s)?;
        let p = &self.params;
        let d2 = p.delta * p.delta;
        let (half, two, four) = (lit::<T>(0.5), lit::<T>(2.0), lit::<T>(4.0));
        let e = (-x).exp() / self.tau();
        let w = T::one() + e;
        let dg = gb - gt;
        let dh = hb - ht;
        let sy = dg + two * dh * y;
        let s2 = sy * sy;
        let c = Taylor2 {
            v00: half * d2 * w * w * s2,
            v10: -d2 * w * e * s2,
            v01: two * d2 * w * w * sy * dh,
            v20: half * d2 * e * (e + w) * s2,
            v11: -four * d2 * w * e * sy * dh,
            v02: two * d2 * w * w * dh * dh,
        };
        let f = Taylor2 {
            v00: p.drift_intercept() - p.kappa * y - d2 * (gb + two * hb * y),
            v01: -p.kappa - two * d2 * hb,
            ..Taylor2::zero()
        };
        let g = Taylor2 {
            v00: half * d2,
            ..Taylor2::zero()
        };
        let h = Taylor2 {
            v00: d2 * w * sy,
            v10: -d2 * e * sy,
            v01: two * d2 * w * dh,
            v20: half * d2 * e * sy,
            v11: -two * d2 * e * dh,
            v02: T::zero(),
        };
        Ok(TaylorSet { c, f, g, h })
    }

    /// A single Taylor coefficient `chi_{i,j}(s)` about `(x, y)`.
    pub fn taylor_coeff(&self, chi: Coefficient, i: usize, j: usize, s: T, x: T, y: T) -> Result<T> {
        if i + j > 2 {
            return Err(Error::Argument(format!(
                "Taylor order ({i}, {j}) not supported, need i + j <= 2"
            )));
        }
        self.taylor_around(s, x, y)?.get(chi).get(i, j)
    }
}

impl<T: Real> GeneratorCoefficients<T> for QouCoefficients<T> {
    fn taylor_at(&self, s: T) -> Result<TaylorSet<T>> {
        self.taylor_around(s, self.x, self.y)
    }
}

/// `c` constant, every other coefficient zero: `X` is then exactly a
/// Black log-forward with volatility `sqrt(2 c)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantDiffusion<T> {
    pub c: T,
}

impl<T: Real> GeneratorCoefficients<T> for ConstantDiffusion<T> {
    fn taylor_at(&self, _s: T) -> Result<TaylorSet<T>> {
        Ok(TaylorSet {
            c: Taylor2 {
                v00: self.c,
                ..Taylor2::zero()
            },
            f: Taylor2::zero(),
            g: Taylor2::zero(),
            h: Taylor2::zero(),
        })
    }
}
