//! Closed-form solution of the scalar QOU Riccati system
//!
//! ```text
//! dF/dt = delta^2 G^2 / 2 - delta^2 H - kappa theta G - q,   F(T) = 0
//! dG/dt = (2 delta^2 H + kappa) G - 2 kappa theta H,          G(T) = -nu
//! dH/dt = 2 delta^2 H^2 + 2 kappa H - 1,                      H(T) = -Omega
//! ```
//!
//! `G` and `H` are Moebius transforms of the terminal data with
//! coefficients `Q1..Q7` of the time to maturity; `F` is the integral of
//! its right-hand side and is evaluated by composite Simpson. A fixed-step
//! RK4 integrator of the same system is provided as an independent check.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::model::{QouParams, TerminalData};
use crate::quadrature::UniformGrid;
use crate::scalar::{lit, to_f64, Real};

/// The seven coefficient functions at one time-to-maturity, plus `mu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QFunctions<T> {
    pub q1: T,
    pub q2: T,
    pub q3: T,
    pub q4: T,
    pub q5: T,
    pub q6: T,
    pub q7: T,
    pub mu: T,
}

/// `(F, G, H)` at one time point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiccatiValue<T> {
    pub f: Complex<T>,
    pub g: Complex<T>,
    pub h: Complex<T>,
}

impl<T: Real> RiccatiValue<T> {
    pub fn terminal(data: &TerminalData<T>) -> Self {
        Self {
            f: Complex::new(T::zero(), T::zero()),
            g: -data.nu,
            h: -data.omega,
        }
    }

    /// Largest componentwise modulus of the difference.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        (self.f - other.f)
            .norm()
            .max((self.g - other.g).norm())
            .max((self.h - other.h).norm())
    }

    pub fn max_imag(&self) -> T {
        self.f.im.abs().max(self.g.im.abs()).max(self.h.im.abs())
    }
}

fn q5_q7<T: Real>(p: &QouParams<T>, mu: T, em1: T) -> (T, T) {
    let two = lit::<T>(2.0);
    let q5 = mu * (em1 + two) + two * p.kappa * em1;
    let q7 = -two * em1;
    (q5, q7)
}

/// Evaluates `Q1..Q7` at elapsed time `u >= 0`.
pub fn q_functions<T: Real>(params: &QouParams<T>, u: T) -> Result<QFunctions<T>> {
    if !u.is_finite() || u < T::zero() {
        return Err(Error::Argument(format!(
            "time to maturity must be finite and >= 0, got {u}"
        )));
    }
    let mu = params.mu();
    let exponent = mu * u;
    if exponent >= T::max_value().ln() {
        return Err(Error::Overflow {
            horizon: to_f64(u),
            exponent: to_f64(exponent),
        });
    }
    let (two, four, eight) = (lit::<T>(2.0), lit::<T>(4.0), lit::<T>(8.0));
    let (kappa, theta, delta) = (params.kappa, params.theta, params.delta);
    let d2 = delta * delta;

    // e^{mu u} - 1 and e^{mu u / 2} - 1, kept as expm1 for small horizons.
    let em1 = exponent.exp_m1();
    let half_em1 = (exponent / two).exp_m1();

    let q1 = two * mu * (half_em1 + T::one());
    let q4 = -four * d2 * em1;
    let (q5, q7) = q5_q7(params, mu, em1);
    let q6 = mu * (em1 + two) - two * kappa * em1;
    let q2 = -(eight * kappa * kappa * theta / mu) * half_em1 * half_em1 - kappa * theta * q4 / d2;
    let (q5_half, q7_half) = q5_q7(params, mu, half_em1);
    let q3 = -(kappa * theta / d2) * ((kappa / mu) * q7_half * q5_half - q1 + q5);

    let out = QFunctions {
        q1,
        q2,
        q3,
        q4,
        q5,
        q6,
        q7,
        mu,
    };
    let finite = [q1, q2, q3, q4, q5, q6, q7].iter().all(|v| v.is_finite());
    if !finite {
        return Err(Error::Overflow {
            horizon: to_f64(u),
            exponent: to_f64(exponent),
        });
    }
    Ok(out)
}

/// Real `(G, H)` for zero terminal data, i.e. the bond curve loadings
/// `(G(t;T,0,0), H(t;T,0,0))`.
pub fn curve_loadings<T: Real>(params: &QouParams<T>, t: T, maturity: T) -> Result<(T, T)> {
    if t > maturity {
        return Err(Error::Argument(format!("t = {t} is after maturity {maturity}")));
    }
    let q = q_functions(params, maturity - t)?;
    Ok((-q.q3 / q.q5, -q.q7 / q.q5))
}

/// Numerical settings of the closed-form solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiccatiConfig<T> {
    /// Simpson nodes for the `F` integral (odd).
    pub simpson_nodes: usize,
    /// `|Q4 Omega + Q5| < tol * (1 + |Q5|)` is reported as singular.
    pub singular_rel_tol: T,
}

impl<T: Real> Default for RiccatiConfig<T> {
    fn default() -> Self {
        Self {
            simpson_nodes: 801,
            singular_rel_tol: lit(1e-12),
        }
    }
}

/// Closed-form solver bound to `(params, t, T)`.
///
/// The Q-functions on the `F` quadrature grid depend only on the horizon,
/// so they are tabulated once and reused for every terminal datum. This is
/// what makes pricing thousands of Fourier nodes cheap.
#[derive(Debug, Clone)]
pub struct RiccatiSolver<T> {
    params: QouParams<T>,
    t: T,
    maturity: T,
    config: RiccatiConfig<T>,
    table: Vec<QFunctions<T>>,
    weights: Vec<T>,
}

impl<T: Real> RiccatiSolver<T> {
    pub fn new(params: &QouParams<T>, t: T, maturity: T, config: RiccatiConfig<T>) -> Result<Self> {
        params.validate()?;
        if !(t <= maturity) {
            return Err(Error::Argument(format!("t = {t} is after maturity {maturity}")));
        }
        let (table, weights) = if t == maturity {
            (Vec::new(), Vec::new())
        } else {
            let grid = UniformGrid::new(t, maturity, config.simpson_nodes)?;
            let table = grid
                .nodes()
                .iter()
                .map(|&s| q_functions(params, maturity - s))
                .collect::<Result<Vec<_>>>()?;
            (table, grid.weights())
        };
        Ok(Self {
            params: *params,
            t,
            maturity,
            config,
            table,
            weights,
        })
    }

    pub fn params(&self) -> &QouParams<T> {
        &self.params
    }

    fn gh(&self, q: &QFunctions<T>, data: &TerminalData<T>) -> Result<(Complex<T>, Complex<T>)> {
        let den = data.omega * q.q4 + q.q5;
        if den.norm() < self.config.singular_rel_tol * (T::one() + q.q5.abs()) {
            let u = (q.q5 / q.mu - lit(2.0)).max(T::zero());
            return Err(Error::Singular {
                modulus: to_f64(den.norm()),
                horizon: to_f64(u),
            });
        }
        let g = -(data.nu * q.q1 + data.omega * q.q2 + q.q3) / den;
        let h = -(data.omega * q.q6 + q.q7) / den;
        Ok((g, h))
    }

    /// `(F, G, H)(t; T, nu, Omega)`.
    pub fn solve(&self, data: &TerminalData<T>) -> Result<RiccatiValue<T>> {
        if self.table.is_empty() {
            return Ok(RiccatiValue::terminal(data));
        }
        let p = &self.params;
        let d2 = p.delta * p.delta;
        let half = lit::<T>(0.5);
        let kt = p.drift_intercept();
        let mut integral = Complex::new(T::zero(), T::zero());
        // Node 0 is s = t, the point whose G and H are returned.
        let mut at_t = None;
        for (i, (q, &w)) in self.table.iter().zip(&self.weights).enumerate() {
            let (g, h) = self.gh(q, data)?;
            if i == 0 {
                at_t = Some((g, h));
            }
            let rhs = g * g * (half * d2) - h * d2 - g * kt - p.q;
            integral = integral + rhs * w;
        }
        let (g, h) = at_t.expect("non-empty table");
        // F(t) = int_T^t rhs ds = -int_t^T rhs ds.
        Ok(RiccatiValue { f: -integral, g, h })
    }

    pub fn t(&self) -> T {
        self.t
    }

    pub fn maturity(&self) -> T {
        self.maturity
    }
}

/// Closed-form `(F, G, H)(t; T, nu, Omega)` with default settings.
pub fn solve_closed_form<T: Real>(
    params: &QouParams<T>,
    t: T,
    maturity: T,
    data: &TerminalData<T>,
) -> Result<RiccatiValue<T>> {
    RiccatiSolver::new(params, t, maturity, RiccatiConfig::default())?.solve(data)
}

fn rhs<T: Real>(p: &QouParams<T>, y: &RiccatiValue<T>) -> RiccatiValue<T> {
    let d2 = p.delta * p.delta;
    let two = lit::<T>(2.0);
    let kt = p.drift_intercept();
    RiccatiValue {
        f: y.g * y.g * (d2 / two) - y.h * d2 - y.g * kt - p.q,
        g: (y.h * (two * d2) + p.kappa) * y.g - y.h * (two * kt),
        h: y.h * y.h * (two * d2) + y.h * (two * p.kappa) - T::one(),
    }
}

fn axpy<T: Real>(y: &RiccatiValue<T>, k: &RiccatiValue<T>, a: T) -> RiccatiValue<T> {
    RiccatiValue {
        f: y.f + k.f * a,
        g: y.g + k.g * a,
        h: y.h + k.h * a,
    }
}

/// Classic fixed-step RK4 integration of the Riccati system backward from
/// `maturity` to `t`.
pub fn solve_numeric<T: Real>(
    params: &QouParams<T>,
    t: T,
    maturity: T,
    data: &TerminalData<T>,
    steps: usize,
) -> Result<RiccatiValue<T>> {
    if steps < 16 {
        return Err(Error::Argument(format!("RK4 needs at least 16 steps, got {steps}")));
    }
    if !(t <= maturity) {
        return Err(Error::Argument(format!("t = {t} is after maturity {maturity}")));
    }
    let mut y = RiccatiValue::terminal(data);
    if t == maturity {
        return Ok(y);
    }
    let h = (t - maturity) / lit::<T>(steps as f64);
    let (half, sixth, two) = (lit::<T>(0.5), lit::<T>(1.0 / 6.0), lit::<T>(2.0));
    for i in 0..steps {
        let k1 = rhs(params, &y);
        let k2 = rhs(params, &axpy(&y, &k1, half * h));
        let k3 = rhs(params, &axpy(&y, &k2, half * h));
        let k4 = rhs(params, &axpy(&y, &k3, h));
        y = RiccatiValue {
            f: y.f + (k1.f + (k2.f + k3.f) * two + k4.f) * (h * sixth),
            g: y.g + (k1.g + (k2.g + k3.g) * two + k4.g) * (h * sixth),
            h: y.h + (k1.h + (k2.h + k3.h) * two + k4.h) * (h * sixth),
        };
        let finite = [y.f, y.g, y.h]
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite());
        if !finite {
            let time = maturity + h * lit::<T>((i + 1) as f64);
            return Err(Error::Divergence { time: to_f64(time) });
        }
    }
    Ok(y)
}
