//! TOML experiment configuration.
//!
//! ```toml
//! t = 0.0
//! tbar = 2.0
//! resets = [0.015625, 0.03125, 0.0625, 0.125]
//! strike_grid = { min = -0.15, max = 0.15, points = 41 }   # or a list
//!
//! [model]
//! kappa = 0.9
//! theta = 0.2777777777777778
//! delta = 0.2
//! q = 0.0
//! y0 = 0.28284271247461906
//!
//! [quad]            # optional, Fourier contour settings
//! [expansion]       # optional, grid = 401
//! [error_surface]   # optional, reset_min / reset_max / count / region_scale or resets
//! [mc]              # optional, n_paths / n_steps / seed
//! [contract]        # optional, reset / log_moneyness for `price` and `mc-check`
//! ```
//!
//! Unknown keys anywhere are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::QuadratureConfig;
use crate::mc::McConfig;
use crate::model::QouParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StrikeGrid {
    Values(Vec<f64>),
    Uniform(UniformStrikes),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniformStrikes {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Default for StrikeGrid {
    fn default() -> Self {
        StrikeGrid::Uniform(UniformStrikes {
            min: -0.15,
            max: 0.15,
            points: 41,
        })
    }
}

impl StrikeGrid {
    /// Log-moneyness values `k - x`.
    pub fn values(&self) -> Vec<f64> {
        match self {
            StrikeGrid::Values(v) => v.clone(),
            StrikeGrid::Uniform(u) => match u.points {
                0 => Vec::new(),
                1 => vec![u.min],
                n => {
                    let h = (u.max - u.min) / (n - 1) as f64;
                    (0..n).map(|j| if j == n - 1 { u.max } else { u.min + h * j as f64 }).collect()
                }
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExpansionConfig {
    /// Uniform nodes of the time-integral grid (odd, >= 101).
    pub grid: usize,
}

impl Default for ExpansionConfig {
    fn default() -> Self {
        Self {
            grid: crate::expansion::DEFAULT_GRID,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ErrorSurfaceConfig {
    /// Explicit reset dates; when absent `count` log-spaced dates in
    /// `[reset_min, reset_max]` are used.
    pub resets: Option<Vec<f64>>,
    pub reset_min: f64,
    pub reset_max: f64,
    pub count: usize,
    /// Summary region `|k - x| <= region_scale * sqrt(T - t)`.
    pub region_scale: f64,
}

impl Default for ErrorSurfaceConfig {
    fn default() -> Self {
        Self {
            resets: None,
            reset_min: 1.0 / 64.0,
            reset_max: 1.0 / 8.0,
            count: 16,
            region_scale: 0.5,
        }
    }
}

impl ErrorSurfaceConfig {
    pub fn reset_dates(&self) -> Vec<f64> {
        if let Some(r) = &self.resets {
            return r.clone();
        }
        match self.count {
            0 => Vec::new(),
            1 => vec![self.reset_min],
            n => {
                let (a, b) = (self.reset_min.ln(), self.reset_max.ln());
                (0..n)
                    .map(|j| {
                        if j == 0 {
                            self.reset_min
                        } else if j == n - 1 {
                            self.reset_max
                        } else {
                            (a + (b - a) * j as f64 / (n - 1) as f64).exp()
                        }
                    })
                    .collect()
            }
        }
    }
}

/// Single contract for `price` and `mc-check`. The strike is given either
/// as log-moneyness `k - x` or as a simple rate `K` with `k = log K`; with
/// neither the contract is at the money.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContractConfig {
    pub reset: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_moneyness: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strike: Option<f64>,
}

impl ContractConfig {
    /// Log-strike given the contract's log forward rate `x`.
    pub fn log_strike(&self, x: f64) -> Result<f64> {
        match (self.log_moneyness, self.strike) {
            (Some(_), Some(_)) => Err(Error::Config("contract: give log_moneyness or strike, not both".into())),
            (Some(m), None) => Ok(x + m),
            (None, Some(s)) => {
                if !(s > 0.0) || !s.is_finite() {
                    return Err(Error::Argument(format!(
                        "strike {s} is not a positive rate, log-strike undefined"
                    )));
                }
                Ok(s.ln())
            }
            (None, None) => Ok(x),
        }
    }
}

fn default_resets() -> Vec<f64> {
    vec![1.0 / 64.0, 1.0 / 32.0, 1.0 / 16.0, 1.0 / 8.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: QouParams<f64>,
    #[serde(default)]
    pub t: f64,
    pub tbar: f64,
    #[serde(default = "default_resets")]
    pub resets: Vec<f64>,
    #[serde(default)]
    pub strike_grid: StrikeGrid,
    #[serde(default)]
    pub quad: QuadratureConfig,
    #[serde(default)]
    pub expansion: ExpansionConfig,
    #[serde(default)]
    pub error_surface: ErrorSurfaceConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc: Option<McConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contract: Option<ContractConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    fn check_resets(&self, resets: &[f64], what: &str) -> Result<()> {
        if resets.is_empty() {
            return Err(Error::Config(format!("{what} is empty")));
        }
        let mut sorted = resets.to_vec();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config(format!("{what} contains duplicate dates")));
        }
        for &r in resets {
            if !(r.is_finite() && self.t < r && r < self.tbar) {
                return Err(Error::Config(format!(
                    "{what}: reset {r} must satisfy t = {} < T < tbar = {}",
                    self.t, self.tbar
                )));
            }
        }
        Ok(())
    }

    /// Checks everything that does not require pricing.
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if !(self.t.is_finite() && self.tbar.is_finite() && self.t < self.tbar) {
            return Err(Error::Config(format!("need t < tbar, got t = {}, tbar = {}", self.t, self.tbar)));
        }
        self.check_resets(&self.resets, "resets")?;
        let grid = self.strike_grid.values();
        if grid.is_empty() {
            return Err(Error::Config("strike grid is empty".into()));
        }
        if grid.iter().any(|v| !v.is_finite()) || grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("strike grid must be finite and strictly increasing".into()));
        }
        self.quad.validate()?;
        let g = self.expansion.grid;
        if g < 101 || g % 2 == 0 {
            return Err(Error::Config(format!("expansion grid must be odd and >= 101, got {g}")));
        }
        let es = &self.error_surface;
        if !(es.region_scale > 0.0) {
            return Err(Error::Config("error_surface.region_scale must be > 0".into()));
        }
        if es.resets.is_none() && !(es.reset_min > 0.0 && es.reset_min <= es.reset_max) {
            return Err(Error::Config("error_surface needs 0 < reset_min <= reset_max".into()));
        }
        self.check_resets(&es.reset_dates(), "error_surface resets")?;
        if let Some(mc) = &self.mc {
            mc.validate()?;
        }
        if let Some(c) = &self.contract {
            self.check_resets(&[c.reset], "contract")?;
            if c.log_moneyness.is_some_and(|m| !m.is_finite()) {
                return Err(Error::Config("contract.log_moneyness must be finite".into()));
            }
            if c.log_moneyness.is_some() && c.strike.is_some() {
                return Err(Error::Config("contract: give log_moneyness or strike, not both".into()));
            }
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be >= 1".into()));
        }
        Ok(())
    }
}
