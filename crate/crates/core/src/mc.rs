//! Monte Carlo reference prices under the physical measure.
//!
//! The factor is advanced with its exact Gaussian transition, the money
//! market integral uses the trapezoid rule on the step grid, and every
//! normal draw is used twice (antithetic pair). Pair `p` draws from ChaCha8
//! stream `p` of the configured seed, so results do not depend on the
//! thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bond::{bond_price, curve_coeffs, CurveCoeffs};
use crate::error::{Error, Result};
use crate::model::{ContractSpec, QouParams};
use crate::stats::mean_stderr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    /// Total paths, an even number (antithetic pairs).
    pub n_paths: usize,
    /// Time steps on the full simulation interval.
    pub n_steps: usize,
    pub seed: u64,
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_paths < 2 || self.n_paths % 2 != 0 {
            return Err(Error::Config(format!(
                "n_paths must be even and >= 2, got {}",
                self.n_paths
            )));
        }
        if self.n_steps == 0 {
            return Err(Error::Config("n_steps must be >= 1".into()));
        }
        Ok(())
    }

    fn pairs(&self) -> usize {
        self.n_paths / 2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    /// Standard error from the spread of antithetic pair averages.
    pub stderr: f64,
    pub n_paths: usize,
}

impl McEstimate {
    fn from_pairs(samples: &[f64], n_paths: usize) -> Self {
        let (mean, stderr) = mean_stderr(samples);
        Self { mean, stderr, n_paths }
    }

    fn scaled(&self, a: f64) -> Self {
        Self {
            mean: self.mean * a,
            stderr: self.stderr * a.abs(),
            n_paths: self.n_paths,
        }
    }

    /// `|mean - reference| <= k stderr`.
    pub fn brackets(&self, reference: f64, k: f64) -> bool {
        (self.mean - reference).abs() <= k * self.stderr
    }
}

/// Exact one-step OU transition coefficients for step `h`.
#[derive(Debug, Clone, Copy)]
struct OuStep {
    decay: f64,
    sd: f64,
}

impl OuStep {
    fn new(p: &QouParams<f64>, h: f64) -> Self {
        let decay = (-p.kappa * h).exp();
        let var = -(-2.0 * p.kappa * h).exp_m1() / (2.0 * p.kappa);
        Self {
            decay,
            sd: p.delta * var.sqrt(),
        }
    }

    #[inline]
    fn advance(&self, theta: f64, y: f64, z: f64) -> f64 {
        theta + (y - theta) * self.decay + self.sd * z
    }
}

fn pair_rng(seed: u64, pair: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(pair as u64);
    rng
}

/// Simulated factor paths on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorPaths {
    pub times: Vec<f64>,
    /// Row-major: path `i` occupies `values[i * times.len()..][..times.len()]`.
    pub values: Vec<f64>,
}

impl FactorPaths {
    pub fn n_paths(&self) -> usize {
        self.values.len() / self.times.len()
    }

    pub fn path(&self, i: usize) -> &[f64] {
        let n = self.times.len();
        &self.values[i * n..(i + 1) * n]
    }

    pub fn terminal(&self) -> Vec<f64> {
        (0..self.n_paths()).map(|i| *self.path(i).last().unwrap()).collect()
    }
}

/// Paths of `Y` on `[t0, t1]` started at `y0`, paths `2p` and `2p + 1`
/// being antithetic.
pub fn simulate_factor(params: &QouParams<f64>, t0: f64, t1: f64, y0: f64, config: &McConfig) -> Result<FactorPaths> {
    config.validate()?;
    params.validate()?;
    if !(t0 < t1) {
        return Err(Error::Argument(format!("simulation needs t0 < t1, got {t0}, {t1}")));
    }
    let n = config.n_steps;
    let h = (t1 - t0) / n as f64;
    let step = OuStep::new(params, h);
    let theta = params.theta;
    let times: Vec<f64> = (0..=n).map(|j| if j == n { t1 } else { t0 + h * j as f64 }).collect();
    let pairs: Vec<Vec<f64>> = (0..config.pairs())
        .into_par_iter()
        .map(|p| {
            let mut rng = pair_rng(config.seed, p);
            let mut out = vec![0.0; 2 * (n + 1)];
            let (a, b) = out.split_at_mut(n + 1);
            a[0] = y0;
            b[0] = y0;
            for j in 0..n {
                let z: f64 = StandardNormal.sample(&mut rng);
                a[j + 1] = step.advance(theta, a[j], z);
                b[j + 1] = step.advance(theta, b[j], -z);
            }
            out
        })
        .collect();
    Ok(FactorPaths {
        times,
        values: pairs.concat(),
    })
}

/// Walks one antithetic pair through consecutive segments, each with its
/// own step count, accumulating the trapezoid integral of `q + Y^2`.
/// `visit(segment, y, integral)` is called at every segment end.
fn walk_pair<V: FnMut(usize, [f64; 2], [f64; 2])>(
    params: &QouParams<f64>,
    y0: f64,
    segments: &[(OuStep, f64, usize)],
    rng: &mut ChaCha8Rng,
    mut visit: V,
) {
    let (theta, q) = (params.theta, params.q);
    let mut y = [y0, y0];
    let mut integral = [0.0, 0.0];
    for (si, &(step, h, n)) in segments.iter().enumerate() {
        for _ in 0..n {
            let z: f64 = StandardNormal.sample(rng);
            for (a, sign) in [(0usize, 1.0), (1, -1.0)] {
                let next = step.advance(theta, y[a], sign * z);
                integral[a] += 0.5 * h * ((q + y[a] * y[a]) + (q + next * next));
                y[a] = next;
            }
        }
        visit(si, y, integral);
    }
}

/// `E[exp(-int_t^T r)]` with `Y_t = y`.
pub fn mc_bond_price(params: &QouParams<f64>, t: f64, y: f64, maturity: f64, config: &McConfig) -> Result<McEstimate> {
    config.validate()?;
    params.validate()?;
    if t > maturity {
        return Err(Error::Argument(format!("t = {t} is after maturity {maturity}")));
    }
    if t == maturity {
        return Ok(McEstimate {
            mean: 1.0,
            stderr: 0.0,
            n_paths: config.n_paths,
        });
    }
    let h = (maturity - t) / config.n_steps as f64;
    let segs = [(OuStep::new(params, h), h, config.n_steps)];
    let samples: Vec<f64> = (0..config.pairs())
        .into_par_iter()
        .map(|p| {
            let mut rng = pair_rng(config.seed, p);
            let mut out = 0.0;
            walk_pair(params, y, &segs, &mut rng, |_, _, i| {
                out = 0.5 * ((-i[0]).exp() + (-i[1]).exp());
            });
            out
        })
        .collect();
    Ok(McEstimate::from_pairs(&samples, config.n_paths))
}

/// Bond estimates from one set of fine paths, with the discount integral
/// evaluated on every `factor`-th node. Each entry of `factors` must divide
/// `config.n_steps`. Used to isolate the discretisation bias.
pub fn mc_bond_price_subsampled(
    params: &QouParams<f64>,
    t: f64,
    y: f64,
    maturity: f64,
    config: &McConfig,
    factors: &[usize],
) -> Result<Vec<McEstimate>> {
    config.validate()?;
    if !(t < maturity) {
        return Err(Error::Argument(format!("need t < maturity, got {t}, {maturity}")));
    }
    if factors.iter().any(|&f| f == 0 || config.n_steps % f != 0) {
        return Err(Error::Argument(format!(
            "subsampling factors {factors:?} must divide n_steps = {}",
            config.n_steps
        )));
    }
    let n = config.n_steps;
    let h = (maturity - t) / n as f64;
    let step = OuStep::new(params, h);
    let (theta, q) = (params.theta, params.q);
    let rows: Vec<Vec<f64>> = (0..config.pairs())
        .into_par_iter()
        .map(|p| {
            let mut rng = pair_rng(config.seed, p);
            let mut path = [vec![y; n + 1], vec![y; n + 1]];
            for j in 0..n {
                let z: f64 = StandardNormal.sample(&mut rng);
                path[0][j + 1] = step.advance(theta, path[0][j], z);
                path[1][j + 1] = step.advance(theta, path[1][j], -z);
            }
            factors
                .iter()
                .map(|&f| {
                    let hf = h * f as f64;
                    let disc = |v: &Vec<f64>| {
                        let mut s = 0.0;
                        let mut j = 0;
                        while j < n {
                            s += 0.5 * hf * ((q + v[j] * v[j]) + (q + v[j + f] * v[j + f]));
                            j += f;
                        }
                        (-s).exp()
                    };
                    0.5 * (disc(&path[0]) + disc(&path[1]))
                })
                .collect()
        })
        .collect();
    Ok((0..factors.len())
        .map(|i| {
            let col: Vec<f64> = rows.iter().map(|r| r[i]).collect();
            McEstimate::from_pairs(&col, config.n_paths)
        })
        .collect())
}

/// Exact expectation of the trapezoid bond estimator at `n_steps`, i.e. the
/// value [`mc_bond_price`] converges to as the path count grows.
///
/// The discounted payoff `exp(-sum_j w_j (q + Y_j^2))` is exponential
/// quadratic in each node and the nodes form a Gaussian chain, so the
/// expectation follows from a backward recursion of Gaussian integrals.
/// Subtracting the closed-form bond isolates the time-discretisation bias
/// without Monte Carlo noise.
pub fn trapezoid_bond_expectation(params: &QouParams<f64>, t: f64, y: f64, maturity: f64, n_steps: usize) -> Result<f64> {
    params.validate()?;
    if !(t < maturity) || n_steps == 0 {
        return Err(Error::Argument(format!(
            "need t < maturity and n_steps >= 1, got {t}, {maturity}, {n_steps}"
        )));
    }
    let h = (maturity - t) / n_steps as f64;
    let step = OuStep::new(params, h);
    let (theta, q) = (params.theta, params.q);
    let alpha = theta * (1.0 - step.decay);
    let s2 = step.sd * step.sd;
    // V_j(y) = exp(-a y^2 - b y - c)
    let w_end = 0.5 * h;
    let (mut a, mut b, mut c) = (w_end, 0.0, w_end * q);
    for j in (0..n_steps).rev() {
        let w = if j == 0 { 0.5 * h } else { h };
        let d = 1.0 + 2.0 * a * s2;
        let e = step.decay;
        let na = a * e * e / d + w;
        let nb = (2.0 * a * alpha * e + b * e) / d;
        let nc = c + (a * alpha * alpha + b * alpha - 0.5 * b * b * s2) / d + 0.5 * d.ln() + w * q;
        a = na;
        b = nb;
        c = nc;
    }
    Ok((-(a * y * y + b * y + c)).exp())
}

/// Caplet estimate at one strike.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McCapletEstimate {
    pub log_strike: f64,
    /// Price at `t` of the payoff paid at settlement.
    pub price: McEstimate,
    /// `price / B_t^Tbar` with the closed-form bond.
    pub forward: McEstimate,
}

/// Caplet prices for a set of strikes sharing one path ensemble. The
/// strike of `spec` is ignored.
///
/// The step count is split between `[t, T]` and `[T, Tbar]` in proportion
/// to their lengths so the reset date lies on the grid.
pub fn mc_caplet_prices(
    params: &QouParams<f64>,
    spec: &ContractSpec<f64>,
    y: f64,
    log_strikes: &[f64],
    config: &McConfig,
) -> Result<Vec<McCapletEstimate>> {
    config.validate()?;
    params.validate()?;
    spec.validate()?;
    if config.n_steps < 2 {
        return Err(Error::Config("caplet simulation needs n_steps >= 2".into()));
    }
    let (t, reset, settle) = (spec.t, spec.reset, spec.settle);
    let tau = spec.tau();
    let frac = (reset - t) / (settle - t);
    let n1 = ((config.n_steps as f64 * frac).round() as usize).clamp(1, config.n_steps - 1);
    let n1 = if reset == t { 0 } else { n1 };
    let n2 = config.n_steps - n1;
    let mut segs = Vec::with_capacity(2);
    if n1 > 0 {
        let h1 = (reset - t) / n1 as f64;
        segs.push((OuStep::new(params, h1), h1, n1));
    }
    let h2 = (settle - reset) / n2 as f64;
    segs.push((OuStep::new(params, h2), h2, n2));
    let tail: CurveCoeffs<f64> = curve_coeffs(params, reset, settle)?;
    let strikes: Vec<f64> = log_strikes.iter().map(|k| k.exp()).collect();
    let last = segs.len() - 1;
    let libor_at = |yv: f64| tail.exponent(yv).exp_m1() / tau;

    let rows: Vec<Vec<f64>> = (0..config.pairs())
        .into_par_iter()
        .map(|p| {
            let mut rng = pair_rng(config.seed, p);
            // With t = T the reset factor is the initial value.
            let mut libor = [libor_at(y); 2];
            let mut disc = [0.0; 2];
            walk_pair(params, y, &segs, &mut rng, |si, yv, iv| {
                if n1 > 0 && si == 0 {
                    libor = [libor_at(yv[0]), libor_at(yv[1])];
                }
                if si == last {
                    disc = [(-iv[0]).exp(), (-iv[1]).exp()];
                }
            });
            strikes
                .iter()
                .map(|&kk| {
                    let pay = |a: usize| tau * (libor[a] - kk).max(0.0) * disc[a];
                    0.5 * (pay(0) + pay(1))
                })
                .collect()
        })
        .collect();

    let settle_bond = bond_price(params, t, y, settle)?;
    Ok(log_strikes
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let col: Vec<f64> = rows.iter().map(|r| r[i]).collect();
            let price = McEstimate::from_pairs(&col, config.n_paths);
            McCapletEstimate {
                log_strike: k,
                price,
                forward: price.scaled(1.0 / settle_bond),
            }
        })
        .collect())
}

/// Caplet estimate at `spec.log_strike`.
pub fn mc_caplet_price(params: &QouParams<f64>, spec: &ContractSpec<f64>, y: f64, config: &McConfig) -> Result<McCapletEstimate> {
    Ok(mc_caplet_prices(params, spec, y, &[spec.log_strike], config)?[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bond::log_forward_rate_xi;

    fn y0() -> f64 {
        0.08f64.sqrt()
    }

    fn cfg(n_paths: usize, n_steps: usize) -> McConfig {
        McConfig {
            n_paths,
            n_steps,
            seed: 7,
        }
    }

    #[test]
    fn config_validation() {
        assert!(cfg(3, 10).validate().is_err());
        assert!(cfg(4, 0).validate().is_err());
        assert!(cfg(4, 1).validate().is_ok());
    }

    #[test]
    fn ou_terminal_moments() {
        let p = QouParams::base_case();
        let c = cfg(40_000, 8);
        let paths = simulate_factor(&p, 0.0, 1.0, y0(), &c).unwrap();
        assert_eq!(paths.times.len(), 9);
        let yt = paths.terminal();
        let mean_exact = p.theta + (y0() - p.theta) * (-p.kappa).exp();
        let var_exact = p.delta * p.delta * (1.0 - (-2.0 * p.kappa).exp()) / (2.0 * p.kappa);
        // Pair averages of a linear Gaussian are exactly the mean, so the
        // moments are checked on one leg of each pair.
        let pair_means: Vec<f64> = yt.chunks(2).map(|c| 0.5 * (c[0] + c[1])).collect();
        assert!(pair_means.iter().all(|m| (m - mean_exact).abs() < 1e-12));
        let leg: Vec<f64> = yt.iter().step_by(2).copied().collect();
        let (m, se) = mean_stderr(&leg);
        assert!((m - mean_exact).abs() <= 3.0 * se);
        let sq: Vec<f64> = leg.iter().map(|v| (v - mean_exact).powi(2)).collect();
        let (v, vse) = mean_stderr(&sq);
        assert!((v - var_exact).abs() <= 3.0 * vse, "{v} vs {var_exact} +- {vse}");
    }

    #[test]
    fn small_step_matches_euler_moments() {
        // One exact step against the Euler moments: error O(h^2).
        let p = QouParams::base_case();
        for h in [1e-2, 5e-3] {
            let s = OuStep::new(&p, h);
            let y = 0.4;
            let mean_err = (s.advance(p.theta, y, 0.0) - (y + p.kappa * (p.theta - y) * h)).abs();
            let var_err = (s.sd * s.sd - p.delta * p.delta * h).abs();
            assert!(mean_err <= 0.5 * p.kappa * p.kappa * h * h * (y - p.theta).abs() * 1.01);
            assert!(var_err <= p.kappa * p.delta * p.delta * h * h * 1.01);
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let p = QouParams::cir_case();
        let c = cfg(2000, 32);
        let a = mc_bond_price(&p, 0.0, y0(), 1.0, &c).unwrap();
        let b = mc_bond_price(&p, 0.0, y0(), 1.0, &c).unwrap();
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
        let d = mc_bond_price(&p, 0.0, y0(), 1.0, &McConfig { seed: 8, ..c }).unwrap();
        assert_ne!(a.mean, d.mean);
    }

    #[test]
    fn bond_trivial_and_half_year() {
        let p = QouParams::base_case();
        let e = mc_bond_price(&p, 1.0, y0(), 1.0, &cfg(1000, 64)).unwrap();
        assert_eq!((e.mean, e.stderr), (1.0, 0.0));
        let e = mc_bond_price(&p, 0.0, y0(), 0.5, &cfg(20_000, 128)).unwrap();
        let exact = bond_price(&p, 0.0, y0(), 0.5).unwrap();
        assert!(e.brackets(exact, 3.0), "{e:?} vs {exact}");
    }

    #[test]
    fn subsampled_finest_level_equals_direct() {
        let p = QouParams::base_case();
        let c = cfg(200, 64);
        let sub = mc_bond_price_subsampled(&p, 0.0, y0(), 1.0, &c, &[1, 2]).unwrap();
        let direct = mc_bond_price(&p, 0.0, y0(), 1.0, &c).unwrap();
        assert!((sub[0].mean - direct.mean).abs() < 1e-14);
        assert!(mc_bond_price_subsampled(&p, 0.0, y0(), 1.0, &c, &[3]).is_err());
    }

    #[test]
    fn trapezoid_bias_is_second_order() {
        for p in [QouParams::base_case(), QouParams::cir_case()] {
            let exact = bond_price(&p, 0.0, y0(), 2.0).unwrap();
            let bias: Vec<f64> = [128, 256, 512]
                .iter()
                .map(|&n| trapezoid_bond_expectation(&p, 0.0, y0(), 2.0, n).unwrap() - exact)
                .collect();
            for w in bias.windows(2) {
                let r = w[0] / w[1];
                assert!((3.8..4.2).contains(&r), "ratio {r}");
            }
        }
    }

    #[test]
    fn trapezoid_expectation_matches_simulation() {
        let p = QouParams::base_case();
        let c = cfg(20_000, 16);
        let mc = mc_bond_price(&p, 0.0, y0(), 2.0, &c).unwrap();
        let e = trapezoid_bond_expectation(&p, 0.0, y0(), 2.0, 16).unwrap();
        assert!(mc.brackets(e, 3.0), "{mc:?} vs {e}");
    }

    #[test]
    fn step_doubling_within_one_stderr() {
        let p = QouParams::base_case();
        let a = mc_bond_price(&p, 0.0, y0(), 2.0, &cfg(20_000, 128)).unwrap();
        let b = mc_bond_price(&p, 0.0, y0(), 2.0, &cfg(20_000, 256)).unwrap();
        assert!((a.mean - b.mean).abs() < a.stderr);
    }

    #[test]
    fn caplet_limits() {
        let p = QouParams::base_case();
        let spec = ContractSpec::new(0.0, 0.125, 2.0, 0.0).unwrap();
        let x = log_forward_rate_xi(&p, &spec, y0()).unwrap();
        let c = cfg(20_000, 128);
        let est = mc_caplet_prices(&p, &spec, y0(), &[x - 5.0, x + 5.0], &c).unwrap();
        let itm = est[0].forward;
        let target = spec.tau() * (x.exp() - (x - 5.0).exp());
        assert!(itm.brackets(target, 3.0), "{itm:?} vs {target}");
        assert!(est[1].price.mean < 1e-12);
    }
}
