//! Exact caplet prices by Fourier inversion along a horizontal contour.
//!
//! The caplet payoff in terms of `X_T = log B_T^Tbar` has the transform
//! `psi_hat(omega) = -(1 + tau e^k)^{i omega} / (omega^2 + i omega)`, and
//! the price is
//!
//! ```text
//! u = 1/(2 pi) int d omega_r  psi_hat(omega) e^{-i omega F(T;Tbar)}
//!         Gamma(t, y; T, -i omega G(T;Tbar), -i omega H(T;Tbar))
//! ```
//!
//! Everything but `psi_hat` is independent of the strike, so
//! [`FourierPricer`] evaluates that kernel once per contract and reuses it
//! across a strike sweep.

use std::f64::consts::PI;
use std::sync::atomic::{AtomicU64, Ordering};

use num_complex::Complex;
use rayon::prelude::*;

use crate::black::implied_vol_from_price;
use crate::bond::{curve_coeffs, CurveCoeffs, CurvePair};
use crate::error::{Error, Result};
use crate::model::{ContractSpec, QouParams, TerminalData};
use crate::quadrature::simpson_weights;
use crate::riccati::{RiccatiConfig, RiccatiSolver};
use crate::scalar::{lit, to_f64, Real};

/// Contour and truncation settings.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureConfig {
    /// Contour height `Im(omega)`.
    pub omega_i: f64,
    /// Half-width of the core Simpson panel.
    pub omega_max: f64,
    /// Simpson nodes on the core panel (odd, >= 101).
    pub nodes: usize,
    /// The tail is extended until a band contributes less than this.
    pub tail_tol: f64,
    /// Hard limit on the extended half-width.
    pub omega_cap: f64,
    /// Simpson nodes of the inner Riccati `F` integral.
    pub riccati_nodes: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            omega_i: 1.5,
            omega_max: 200.0,
            nodes: 2001,
            tail_tol: 1e-10,
            omega_cap: 20_000.0,
            riccati_nodes: 801,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega_i > 0.0) || !self.omega_i.is_finite() {
            return Err(Error::Contour {
                omega_i: self.omega_i,
            });
        }
        if !(self.omega_max > 0.0) || !self.omega_max.is_finite() {
            return Err(Error::Config(format!("omega_max must be > 0, got {}", self.omega_max)));
        }
        if self.nodes < 101 || self.nodes % 2 == 0 {
            return Err(Error::Config(format!("nodes must be odd and >= 101, got {}", self.nodes)));
        }
        if !(self.tail_tol > 0.0) {
            return Err(Error::Config(format!("tail_tol must be > 0, got {}", self.tail_tol)));
        }
        if !(self.omega_cap >= self.omega_max) {
            return Err(Error::Config(format!(
                "omega_cap {} is below omega_max {}",
                self.omega_cap, self.omega_max
            )));
        }
        if self.riccati_nodes < 3 || self.riccati_nodes % 2 == 0 {
            return Err(Error::Config(format!(
                "riccati_nodes must be odd and >= 3, got {}",
                self.riccati_nodes
            )));
        }
        Ok(())
    }
}

static NEGATIVE_CLAMPS: AtomicU64 = AtomicU64::new(0);

/// Number of slightly negative prices clamped to zero in this process.
pub fn negative_clamp_count() -> u64 {
    NEGATIVE_CLAMPS.load(Ordering::Relaxed)
}

const IMAG_TOL: f64 = 1e-8;
const NEGATIVE_TOL: f64 = 1e-10;
const BOUND_TOL: f64 = 1e-8;

/// `-(1 + tau e^k)^{i omega} / (omega^2 + i omega)`.
pub fn caplet_psi_hat<T: Real>(omega: Complex<T>, k: T, tau: T) -> Result<Complex<T>> {
    if !(omega.im > T::zero()) {
        return Err(Error::Contour {
            omega_i: to_f64(omega.im),
        });
    }
    // The base is a positive real, so the power is exp(i omega log(base)).
    let log_base = (tau * k.exp()).ln_1p();
    Ok(psi_hat_from_log_base(omega, log_base))
}

#[inline]
fn psi_hat_from_log_base<T: Real>(omega: Complex<T>, log_base: T) -> Complex<T> {
    let i = Complex::new(T::zero(), T::one());
    let num = (i * omega * log_base).exp();
    -num / (omega * omega + i * omega)
}

/// One Simpson panel of the contour integral.
#[derive(Debug, Clone)]
struct Panel<T> {
    omega_r: Vec<T>,
    weights: Vec<T>,
    kernel: Vec<Complex<T>>,
}

/// Strike-independent part of the Fourier integral for one contract.
#[derive(Debug, Clone)]
pub struct FourierPricer<T> {
    omega_i: T,
    tau: T,
    ttm: T,
    panels: Vec<Panel<T>>,
    extent: T,
    settle_bond: T,
    x: T,
}

impl<T: Real> FourierPricer<T> {
    /// Builds the kernel for valuation time `t`, reset `reset`, settlement
    /// `settle`, factor value `y`. The strike of `spec` is ignored.
    pub fn new(params: &QouParams<T>, spec: &ContractSpec<T>, y: T, quad: &QuadratureConfig) -> Result<Self> {
        quad.validate()?;
        params.validate()?;
        spec.validate()?;
        let curves = CurvePair::new(params, spec)?;
        let x = curves.xi(y)?;
        let settle_bond = curves.settle_bond(y)?;
        let tail = curve_coeffs(params, spec.reset, spec.settle)?;
        let solver = RiccatiSolver::new(
            params,
            spec.t,
            spec.reset,
            RiccatiConfig {
                simpson_nodes: quad.riccati_nodes,
                ..RiccatiConfig::default()
            },
        )?;
        let omega_i = lit::<T>(quad.omega_i);
        let ctx = KernelContext {
            solver: &solver,
            tail,
            y,
            omega_i,
        };

        let nodes = core_nodes(quad)?;
        let w_core = lit::<T>(quad.omega_max);
        let core = ctx.panel(-w_core, w_core, nodes)?;
        let h = lit::<T>(2.0 * quad.omega_max / (nodes - 1) as f64);
        let mut panels = vec![core];

        // Tail bands of half the core width at the same node spacing, on
        // both sides, until one pair is below the tolerance.
        let band = w_core * lit(0.5);
        let mut intervals = to_f64(band / h).round() as usize;
        intervals += intervals % 2;
        let band_nodes = intervals.max(2) + 1;
        let band = h * lit::<T>((band_nodes - 1) as f64);
        let mut edge = w_core;
        let tol = lit::<T>(quad.tail_tol);
        loop {
            if to_f64(edge) >= quad.omega_cap {
                return Err(Error::Quadrature(format!(
                    "Fourier tail still above {:e} at |omega_r| = {}",
                    quad.tail_tol,
                    to_f64(edge)
                )));
            }
            let right = ctx.panel(edge, edge + band, band_nodes)?;
            let left = ctx.panel(-edge - band, -edge, band_nodes)?;
            let bound = right.abs_bound(omega_i) + left.abs_bound(omega_i);
            panels.push(left);
            panels.push(right);
            edge = edge + band;
            if bound < tol {
                break;
            }
        }

        Ok(Self {
            omega_i,
            tau: spec.tau(),
            ttm: spec.ttm(),
            panels,
            extent: edge,
            settle_bond,
            x,
        })
    }

    /// Log forward rate `x` of the contract at valuation time.
    pub fn log_forward(&self) -> T {
        self.x
    }

    /// `B_t^Tbar`.
    pub fn settle_bond(&self) -> T {
        self.settle_bond
    }

    /// Half-width of the contour actually integrated after tail extension.
    pub fn extent(&self) -> T {
        self.extent
    }

    pub fn node_count(&self) -> usize {
        self.panels.iter().map(|p| p.omega_r.len()).sum()
    }

    /// Undiscounted-by-nothing caplet price `u` at log-strike `k`.
    pub fn price_u(&self, k: T) -> Result<T> {
        let log_base = (self.tau * k.exp()).ln_1p();
        let mut acc = Complex::new(T::zero(), T::zero());
        for p in &self.panels {
            for ((&wr, &w), &kern) in p.omega_r.iter().zip(&p.weights).zip(&p.kernel) {
                let omega = Complex::new(wr, self.omega_i);
                acc = acc + psi_hat_from_log_base(omega, log_base) * kern * w;
            }
        }
        let u = acc / lit::<T>(2.0 * PI);
        if u.im.abs() > lit(IMAG_TOL) {
            return Err(Error::ImaginaryResidue {
                residue: to_f64(u.im.abs()),
                tolerance: IMAG_TOL,
                context: "caplet Fourier integral",
            });
        }
        let re = u.re;
        if re < T::zero() {
            if re < -lit::<T>(NEGATIVE_TOL) {
                return Err(Error::Quadrature(format!("negative caplet price {re}")));
            }
            NEGATIVE_CLAMPS.fetch_add(1, Ordering::Relaxed);
            return Ok(T::zero());
        }
        Ok(re)
    }

    /// Settlement-forward price `v = u / B_t^Tbar`, checked against the
    /// no-arbitrage bounds.
    pub fn forward_price(&self, k: T) -> Result<T> {
        let v = self.price_u(k)? / self.settle_bond;
        let upper = self.tau * self.x.exp();
        let lower = self.tau * (self.x.exp() - k.exp()).max(T::zero());
        let slack = lit::<T>(BOUND_TOL);
        if v < lower - slack || v > upper + slack {
            return Err(Error::PricingConsistency {
                price: to_f64(v),
                lower: to_f64(lower),
                upper: to_f64(upper),
            });
        }
        Ok(v)
    }

    /// Black volatility of the exact forward price.
    pub fn implied_vol(&self, k: T) -> Result<T> {
        let v = self.forward_price(k)?;
        implied_vol_from_price(v, self.x, k, self.ttm, self.tau)
    }
}

const MAX_CORE_NODES: usize = 1 << 20;

/// Core node count after spacing refinement.
///
/// The integrand is analytic in the strip below the contour down to the
/// pole at `omega = 0`, so a trapezoid sum with spacing `h` errs by about
/// `exp(-2 pi omega_i / h)`. Simpson is a combination of the `h` and `2h`
/// trapezoid sums and inherits the coarser error `exp(-pi omega_i / h)`,
/// which bites for low contours. Intervals are doubled until that term is
/// below the tail tolerance.
fn core_nodes(quad: &QuadratureConfig) -> Result<usize> {
    let mut intervals = quad.nodes - 1;
    loop {
        let h = 2.0 * quad.omega_max / intervals as f64;
        if (-PI * quad.omega_i / h).exp() <= quad.tail_tol {
            return Ok(intervals + 1);
        }
        intervals *= 2;
        if intervals >= MAX_CORE_NODES {
            return Err(Error::Quadrature(format!(
                "omega_i = {} needs more than {MAX_CORE_NODES} core nodes",
                quad.omega_i
            )));
        }
    }
}

struct KernelContext<'a, T> {
    solver: &'a RiccatiSolver<T>,
    tail: CurveCoeffs<T>,
    y: T,
    omega_i: T,
}

impl<T: Real> KernelContext<'_, T> {
    fn kernel(&self, omega_r: T) -> Result<Complex<T>> {
        let omega = Complex::new(omega_r, self.omega_i);
        let minus_i_omega = Complex::new(T::zero(), -T::one()) * omega;
        let data = TerminalData::new(minus_i_omega * self.tail.frak_g, minus_i_omega * self.tail.frak_h)?;
        let v = self.solver.solve(&data).map_err(|e| match e {
            Error::Singular { .. } => Error::NodeSingular {
                omega_r: to_f64(omega_r),
                omega_i: to_f64(self.omega_i),
                source: Box::new(e),
            },
            other => other,
        })?;
        let y = self.y;
        let exponent = minus_i_omega * self.tail.frak_f - v.f - v.g * y - v.h * (y * y);
        Ok(exponent.exp())
    }

    fn panel(&self, a: T, b: T, n: usize) -> Result<Panel<T>> {
        let h = (b - a) / lit::<T>((n - 1) as f64);
        let omega_r: Vec<T> = (0..n).map(|j| a + h * lit::<T>(j as f64)).collect();
        let kernel = omega_r
            .par_iter()
            .map(|&w| self.kernel(w))
            .collect::<Result<Vec<_>>>()?;
        Ok(Panel {
            weights: simpson_weights(n, h),
            omega_r,
            kernel,
        })
    }
}

impl<T: Real> Panel<T> {
    /// Upper bound on the panel's contribution for any strike, using
    /// `|(1 + tau e^k)^{i omega}| <= 1` on the upper half plane.
    fn abs_bound(&self, omega_i: T) -> T {
        let i = Complex::new(T::zero(), T::one());
        let mut s = T::zero();
        for ((&wr, &w), k) in self.omega_r.iter().zip(&self.weights).zip(&self.kernel) {
            let omega = Complex::new(wr, omega_i);
            s = s + w * k.norm() / (omega * omega + i * omega).norm();
        }
        s / lit::<T>(2.0 * PI)
    }
}

/// Caplet price `u` at time `spec.t`.
pub fn caplet_price_u<T: Real>(params: &QouParams<T>, spec: &ContractSpec<T>, y: T, quad: &QuadratureConfig) -> Result<T> {
    FourierPricer::new(params, spec, y, quad)?.price_u(spec.log_strike)
}

/// Settlement-forward caplet price `v`.
pub fn forward_caplet_price_exact<T: Real>(
    params: &QouParams<T>,
    spec: &ContractSpec<T>,
    y: T,
    quad: &QuadratureConfig,
) -> Result<T> {
    FourierPricer::new(params, spec, y, quad)?.forward_price(spec.log_strike)
}

/// Black implied volatility of the exact forward price.
pub fn exact_implied_vol<T: Real>(params: &QouParams<T>, spec: &ContractSpec<T>, y: T, quad: &QuadratureConfig) -> Result<T> {
    FourierPricer::new(params, spec, y, quad)?.implied_vol(spec.log_strike)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::black::{black_price, BlackInputs};

    fn y0() -> f64 {
        0.08f64.sqrt()
    }

    fn spec(reset: f64) -> ContractSpec<f64> {
        ContractSpec::new(0.0, reset, 2.0, 0.0).unwrap()
    }

    #[test]
    fn psi_hat_hand_value() {
        // tau e^k = 1 and omega = i: -(2^{-1}) / (-1 - 1) = 1/4.
        let v = caplet_psi_hat(Complex::new(0.0, 1.0), 0.0, 1.0).unwrap();
        assert!((v - Complex::new(0.25, 0.0)).norm() < 1e-15);
        assert!(matches!(
            caplet_psi_hat(Complex::new(1.0, 0.0), 0.0, 1.0),
            Err(Error::Contour { .. })
        ));
    }

    #[test]
    fn psi_hat_decays_quadratically() {
        let a = caplet_psi_hat(Complex::new(100.0f64, 1.5), -3.0, 1.0).unwrap().norm();
        let b = caplet_psi_hat(Complex::new(200.0, 1.5), -3.0, 1.0).unwrap().norm();
        assert!((a / b - 4.0).abs() < 0.01);
    }

    #[test]
    fn psi_hat_inverts_to_payoff() {
        // (1/2pi) int psi_hat(omega) e^{i omega x} d omega_r, truncated far out.
        let (k, tau, x, oi) = (-3.0f64, 1.0, -0.5f64, 1.5);
        let base = 1.0 + tau * k.exp();
        let payoff = base * (1.0 / base - x.exp()).max(0.0);
        let n = 400_001;
        let w = 4000.0;
        let h = 2.0 * w / (n - 1) as f64;
        let weights = simpson_weights(n, h);
        let mut acc = Complex::new(0.0, 0.0);
        for (j, wt) in weights.iter().enumerate() {
            let om = Complex::new(-w + h * j as f64, oi);
            let f = caplet_psi_hat(om, k, tau).unwrap() * (Complex::new(0.0, 1.0) * om * x).exp();
            acc += f * *wt;
        }
        let val = acc.re / (2.0 * PI);
        assert!((val - payoff).abs() < 1e-6, "{val} vs {payoff}");
    }

    #[test]
    fn core_spacing_refinement() {
        assert_eq!(core_nodes(&QuadratureConfig::default()).unwrap(), 2001);
        let low = QuadratureConfig {
            omega_i: 0.75,
            ..Default::default()
        };
        assert_eq!(core_nodes(&low).unwrap(), 4001);
    }

    #[test]
    fn rejects_bad_quadrature() {
        let bad = QuadratureConfig {
            nodes: 2000,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = QuadratureConfig {
            omega_i: 0.0,
            ..Default::default()
        };
        assert!(matches!(bad.validate(), Err(Error::Contour { .. })));
    }

    #[test]
    fn deep_itm_and_otm_limits() {
        let p = QouParams::base_case();
        let s = spec(0.125);
        let pr = FourierPricer::new(&p, &s, y0(), &QuadratureConfig::default()).unwrap();
        let x = pr.log_forward();
        let tau = s.tau();
        let v_itm = pr.forward_price(x - 5.0).unwrap();
        let intrinsic = tau * (x.exp() - (x - 5.0).exp());
        assert!((v_itm / intrinsic - 1.0).abs() < 1e-3);
        let u_itm = pr.price_u(x - 5.0).unwrap();
        assert!((u_itm / (pr.settle_bond() * intrinsic) - 1.0).abs() < 1e-3);
        let v_otm = pr.forward_price(x + 5.0).unwrap();
        assert!(v_otm <= 1e-6 * tau * x.exp());
    }

    #[test]
    fn contour_invariance_and_refinement() {
        for p in [QouParams::base_case(), QouParams::cir_case()] {
            for reset in [0.0625, 0.125] {
                let s = spec(reset);
                let base = FourierPricer::new(&p, &s, y0(), &QuadratureConfig::default()).unwrap();
                let low = FourierPricer::new(
                    &p,
                    &s,
                    y0(),
                    &QuadratureConfig {
                        omega_i: 0.75,
                        ..Default::default()
                    },
                )
                .unwrap();
                let fine = FourierPricer::new(
                    &p,
                    &s,
                    y0(),
                    &QuadratureConfig {
                        nodes: 4001,
                        ..Default::default()
                    },
                )
                .unwrap();
                let x = base.log_forward();
                for m in [-0.05, 0.0, 0.05] {
                    let u = base.price_u(x + m).unwrap();
                    assert!((u - low.price_u(x + m).unwrap()).abs() <= 1e-7);
                    assert!((u - fine.price_u(x + m).unwrap()).abs() <= 1e-8);
                }
            }
        }
    }

    #[test]
    fn implied_vol_round_trip() {
        let p = QouParams::base_case();
        let s = spec(0.015625);
        let pr = FourierPricer::new(&p, &s, y0(), &QuadratureConfig::default()).unwrap();
        let x = pr.log_forward();
        let sigma = pr.implied_vol(x).unwrap();
        // Sanity bracket only.
        assert!(sigma > 0.3 && sigma < 0.9, "{sigma}");
        let v = pr.forward_price(x).unwrap();
        let back = black_price(&BlackInputs::new(x, x, s.ttm(), s.tau(), sigma).unwrap());
        assert!((back - v).abs() <= 1e-10);
    }

    #[test]
    fn monotone_and_convex_in_strike() {
        let p = QouParams::cir_case();
        let s = spec(0.0625);
        let pr = FourierPricer::new(&p, &s, y0(), &QuadratureConfig::default()).unwrap();
        let x = pr.log_forward();
        let ks: Vec<f64> = (0..41).map(|j| x - 0.15 + 0.0075 * j as f64).collect();
        let vs: Vec<f64> = ks.iter().map(|&k| pr.forward_price(k).unwrap()).collect();
        for w in vs.windows(2) {
            assert!(w[1] <= w[0]);
        }
        for j in 1..ks.len() - 1 {
            let (k0, k1, k2) = (ks[j - 1].exp(), ks[j].exp(), ks[j + 1].exp());
            let d = (vs[j + 1] - vs[j]) / (k2 - k1) - (vs[j] - vs[j - 1]) / (k1 - k0);
            assert!(d >= -1e-8);
        }
    }

    #[test]
    fn kernel_deterministic() {
        let p = QouParams::base_case();
        let s = spec(0.125);
        let a = caplet_price_u(&p, &s, y0(), &QuadratureConfig::default()).unwrap();
        let b = caplet_price_u(&p, &s, y0(), &QuadratureConfig::default()).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
