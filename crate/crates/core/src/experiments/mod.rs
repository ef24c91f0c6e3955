//! Experiment drivers: smile tables, error surfaces, single-contract
//! reports and Monte Carlo checks, written as CSV plus a run manifest.
//!
//! Every runner returns its results in memory; [`run_command`] wraps them
//! with timing, output files and the manifest for the CLI.

mod config;
mod output;

pub use config::{
    ContractConfig, ErrorSurfaceConfig, ExpansionConfig, ExperimentConfig, StrikeGrid, UniformStrikes,
};
pub use output::{config_hash, write_csv, CsvSchema, Manifest};

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expansion::IvExpansion;
use crate::fourier::FourierPricer;
use crate::mc::{mc_caplet_price, McConfig};
use crate::model::ContractSpec;

/// One smile point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmileRow {
    pub log_moneyness: f64,
    pub iv_exact: f64,
    pub iv_bar0: f64,
    pub iv_bar1: f64,
    pub iv_bar2: f64,
}

impl SmileRow {
    pub fn rel_err(&self) -> f64 {
        (self.iv_bar2 - self.iv_exact).abs() / self.iv_exact
    }
}

impl CsvSchema for SmileRow {
    const HEADER: &'static [&'static str] = &["log_moneyness", "iv_exact", "iv_bar0", "iv_bar1", "iv_bar2"];
}

/// One error-surface cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorCell {
    pub log_moneyness: f64,
    #[serde(rename = "reset_T")]
    pub reset: f64,
    pub rel_err: f64,
}

impl CsvSchema for ErrorCell {
    const HEADER: &'static [&'static str] = &["log_moneyness", "reset_T", "rel_err"];
}

/// A grid point that could not be computed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowError {
    #[serde(rename = "reset_T")]
    pub reset: f64,
    pub log_moneyness: f64,
    pub error: String,
}

impl CsvSchema for RowError {
    const HEADER: &'static [&'static str] = &["reset_T", "log_moneyness", "error"];
}

/// Smile rows of one reset date, in strike-grid order.
#[derive(Debug, Clone, PartialEq)]
pub struct SmileTable {
    pub reset: f64,
    pub rows: Vec<SmileRow>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SmileRun {
    /// Sorted by reset date.
    pub tables: Vec<SmileTable>,
    pub errors: Vec<RowError>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SurfaceSummary {
    pub region_scale: f64,
    pub cells_in_region: usize,
    /// NaN when the region holds no computed cell.
    pub max_rel_err: f64,
    pub argmax_log_moneyness: f64,
    #[serde(rename = "argmax_reset_T")]
    pub argmax_reset: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorSurfaceRun {
    /// Sorted by reset date, then log-moneyness.
    pub cells: Vec<ErrorCell>,
    pub errors: Vec<RowError>,
    pub summary: SurfaceSummary,
}

fn with_pool<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

fn smile_row(pricer: &FourierPricer<f64>, exp: &IvExpansion<f64>, m: f64) -> Result<SmileRow> {
    let k = pricer.log_forward() + m;
    let iv_exact = pricer.implied_vol(k)?;
    let a = exp.approx(k)?;
    let row = SmileRow {
        log_moneyness: m,
        iv_exact,
        iv_bar0: a.bar(0),
        iv_bar1: a.bar(1),
        iv_bar2: a.bar(2),
    };
    if !(row.iv_bar0.is_finite() && row.iv_bar1.is_finite() && row.iv_bar2.is_finite()) {
        return Err(Error::NonFinite {
            what: "implied volatility approximation",
            time: exp.table().ttm,
        });
    }
    Ok(row)
}

/// Smile of one reset date. Setup failures are recorded against every
/// grid point of the date.
fn smile_for_reset(cfg: &ExperimentConfig, reset: f64, grid: &[f64]) -> (SmileTable, Vec<RowError>) {
    let setup = || -> Result<_> {
        let spec = ContractSpec::new(cfg.t, reset, cfg.tbar, 0.0)?;
        let y = cfg.model.y0;
        let pricer = FourierPricer::new(&cfg.model, &spec, y, &cfg.quad)?;
        let exp = IvExpansion::for_contract(&cfg.model, &spec, y, cfg.expansion.grid)?;
        Ok((pricer, exp))
    };
    let err = |m: f64, e: &Error| RowError {
        reset,
        log_moneyness: m,
        error: e.to_string(),
    };
    let mut table = SmileTable {
        reset,
        rows: Vec::with_capacity(grid.len()),
    };
    let mut errors = Vec::new();
    match setup() {
        Err(e) => errors.extend(grid.iter().map(|&m| err(m, &e))),
        Ok((pricer, exp)) => {
            let results: Vec<Result<SmileRow>> = grid.par_iter().map(|&m| smile_row(&pricer, &exp, m)).collect();
            for (&m, r) in grid.iter().zip(results) {
                match r {
                    Ok(row) => table.rows.push(row),
                    Err(e) => errors.push(err(m, &e)),
                }
            }
        }
    }
    (table, errors)
}

fn smiles(cfg: &ExperimentConfig, resets: &[f64]) -> Result<SmileRun> {
    let grid = cfg.strike_grid.values();
    let mut resets = resets.to_vec();
    resets.sort_by(f64::total_cmp);
    let parts: Vec<_> = with_pool(cfg.threads, || {
        resets.par_iter().map(|&r| smile_for_reset(cfg, r, &grid)).collect()
    })?;
    let mut run = SmileRun::default();
    for (table, errors) in parts {
        run.tables.push(table);
        run.errors.extend(errors);
    }
    Ok(run)
}

/// Exact and approximate smiles for every configured reset date.
pub fn run_smile(cfg: &ExperimentConfig) -> Result<SmileRun> {
    cfg.validate()?;
    smiles(cfg, &cfg.resets)
}

/// Relative error of the second-order approximation on the error-surface
/// reset grid.
pub fn run_error_surface(cfg: &ExperimentConfig) -> Result<ErrorSurfaceRun> {
    cfg.validate()?;
    let es = &cfg.error_surface;
    let run = smiles(cfg, &es.reset_dates())?;
    let mut cells = Vec::new();
    let mut summary = SurfaceSummary {
        region_scale: es.region_scale,
        cells_in_region: 0,
        max_rel_err: f64::NAN,
        argmax_log_moneyness: f64::NAN,
        argmax_reset: f64::NAN,
    };
    for table in &run.tables {
        let half_width = es.region_scale * (table.reset - cfg.t).sqrt();
        for row in &table.rows {
            let cell = ErrorCell {
                log_moneyness: row.log_moneyness,
                reset: table.reset,
                rel_err: row.rel_err(),
            };
            if row.log_moneyness.abs() <= half_width {
                summary.cells_in_region += 1;
                if summary.max_rel_err.is_nan() || cell.rel_err > summary.max_rel_err {
                    summary.max_rel_err = cell.rel_err;
                    summary.argmax_log_moneyness = cell.log_moneyness;
                    summary.argmax_reset = cell.reset;
                }
            }
            cells.push(cell);
        }
    }
    Ok(ErrorSurfaceRun {
        cells,
        errors: run.errors,
        summary,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McCheck {
    pub config: McConfig,
    /// Settlement-forward price estimate.
    pub mean: f64,
    pub stderr: f64,
    pub z: f64,
    pub pass: bool,
}

/// Single-contract report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PriceReport {
    pub t: f64,
    pub reset: f64,
    pub tbar: f64,
    pub y: f64,
    pub log_forward: f64,
    pub log_strike: f64,
    pub settle_bond: f64,
    pub forward_price: f64,
    pub iv_exact: f64,
    pub iv_bar: [f64; 3],
    pub mc: Option<McCheck>,
}

/// Verdict threshold for the Monte Carlo check, in standard errors.
pub const MC_CHECK_SIGMAS: f64 = 3.0;

fn contract_report(cfg: &ExperimentConfig, mc: Option<&McConfig>) -> Result<PriceReport> {
    cfg.validate()?;
    let c = cfg
        .contract
        .ok_or_else(|| Error::Config("missing [contract] section".into()))?;
    let y = cfg.model.y0;
    let spec0 = ContractSpec::new(cfg.t, c.reset, cfg.tbar, 0.0)?;
    let pricer = FourierPricer::new(&cfg.model, &spec0, y, &cfg.quad)?;
    let x = pricer.log_forward();
    let k = c.log_strike(x)?;
    let spec = spec0.with_log_strike(k);
    let forward_price = pricer.forward_price(k)?;
    let iv_exact = pricer.implied_vol(k)?;
    let a = with_pool(cfg.threads, || {
        IvExpansion::for_contract(&cfg.model, &spec, y, cfg.expansion.grid).and_then(|e| e.approx(k))
    })??;
    let mc = match mc {
        None => None,
        Some(m) => {
            let est = with_pool(cfg.threads, || mc_caplet_price(&cfg.model, &spec, y, m))??.forward;
            let z = (est.mean - forward_price) / est.stderr;
            Some(McCheck {
                config: *m,
                mean: est.mean,
                stderr: est.stderr,
                z,
                pass: est.brackets(forward_price, MC_CHECK_SIGMAS),
            })
        }
    };
    Ok(PriceReport {
        t: cfg.t,
        reset: c.reset,
        tbar: cfg.tbar,
        y,
        log_forward: x,
        log_strike: k,
        settle_bond: pricer.settle_bond(),
        forward_price,
        iv_exact,
        iv_bar: [a.bar(0), a.bar(1), a.bar(2)],
        mc,
    })
}

/// Exact price and implied volatilities of `[contract]`, with a Monte Carlo
/// comparison when `[mc]` is configured.
pub fn run_price(cfg: &ExperimentConfig) -> Result<PriceReport> {
    contract_report(cfg, cfg.mc.as_ref())
}

/// As [`run_price`] but `[mc]` is required.
pub fn run_mc_check(cfg: &ExperimentConfig) -> Result<PriceReport> {
    let mc = cfg
        .mc
        .ok_or_else(|| Error::Config("mc-check needs an [mc] section".into()))?;
    contract_report(cfg, Some(&mc))
}

impl fmt::Display for PriceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "contract        t = {}, T = {}, Tbar = {}, y = {}", self.t, self.reset, self.tbar, self.y)?;
        writeln!(f, "log forward x   {:.12e}", self.log_forward)?;
        writeln!(f, "log strike k    {:.12e}", self.log_strike)?;
        writeln!(f, "k - x           {:.12e}", self.log_strike - self.log_forward)?;
        writeln!(f, "B(t, Tbar)      {:.12e}", self.settle_bond)?;
        writeln!(f, "forward price   {:.12e}", self.forward_price)?;
        writeln!(f, "iv exact        {:.12e}", self.iv_exact)?;
        for (n, s) in self.iv_bar.iter().enumerate() {
            writeln!(f, "iv bar{n}         {s:.12e}")?;
        }
        if let Some(m) = &self.mc {
            writeln!(
                f,
                "mc              {:.12e} +- {:.6e} ({} paths, {} steps, seed {})",
                m.mean, m.stderr, m.config.n_paths, m.config.n_steps, m.config.seed
            )?;
            writeln!(
                f,
                "mc verdict      {} (z = {:.3}, threshold {MC_CHECK_SIGMAS} stderr)",
                if m.pass { "PASS" } else { "FAIL" },
                m.z
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Smile,
    ErrorSurface,
    Price,
    McCheck,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Smile => "smile",
            Command::ErrorSurface => "error-surface",
            Command::Price => "price",
            Command::McCheck => "mc-check",
        }
    }
}

/// What a finished command produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    /// Human-readable summary for stdout.
    pub report: String,
    /// False when a Monte Carlo check failed its verdict.
    pub passed: bool,
    pub manifest: Manifest,
}

/// Runs `command`, writes its outputs into `out_dir` and returns the
/// summary. Errors that prevent the whole run are returned; per-row
/// failures go to `errors.csv`.
pub fn run_command(command: Command, cfg: &ExperimentConfig, out_dir: &Path) -> Result<Outcome> {
    let mut timings = BTreeMap::new();
    let mut clock = Instant::now();
    let mut lap = |name: &str, timings: &mut BTreeMap<String, f64>| {
        timings.insert(name.to_string(), clock.elapsed().as_secs_f64());
        clock = Instant::now();
    };

    cfg.validate()?;
    let hash = config_hash(cfg)?;
    lap("validate", &mut timings);

    let mut summary = BTreeMap::new();
    let mut passed = true;
    let (report, rows, errors) = match command {
        Command::Smile => {
            let run = run_smile(cfg)?;
            lap("compute", &mut timings);
            std::fs::create_dir_all(out_dir)?;
            let mut rows = 0;
            let mut report = String::new();
            for table in &run.tables {
                let name = format!("smile_T={}.csv", table.reset);
                write_csv(&out_dir.join(&name), &table.rows)?;
                rows += table.rows.len();
                report.push_str(&format!("{name}: {} rows\n", table.rows.len()));
            }
            lap("write", &mut timings);
            (report, rows, run.errors)
        }
        Command::ErrorSurface => {
            let run = run_error_surface(cfg)?;
            lap("compute", &mut timings);
            std::fs::create_dir_all(out_dir)?;
            write_csv(&out_dir.join("error_surface.csv"), &run.cells)?;
            lap("write", &mut timings);
            let s = run.summary;
            summary.insert("region_scale".to_string(), s.region_scale);
            summary.insert("cells_in_region".to_string(), s.cells_in_region as f64);
            summary.insert("max_rel_err".to_string(), s.max_rel_err);
            summary.insert("argmax_log_moneyness".to_string(), s.argmax_log_moneyness);
            summary.insert("argmax_reset_T".to_string(), s.argmax_reset);
            let report = format!(
                "error_surface.csv: {} cells\nmax rel_err over |k-x| <= {} sqrt(T-t): {:.6e} at k-x = {}, T = {} ({} cells)\n",
                run.cells.len(),
                s.region_scale,
                s.max_rel_err,
                s.argmax_log_moneyness,
                s.argmax_reset,
                s.cells_in_region
            );
            (report, run.cells.len(), run.errors)
        }
        Command::Price | Command::McCheck => {
            let rep = if command == Command::Price {
                run_price(cfg)?
            } else {
                run_mc_check(cfg)?
            };
            lap("compute", &mut timings);
            if let (Command::McCheck, Some(m)) = (command, &rep.mc) {
                passed = m.pass;
            }
            let report = rep.to_string();
            std::fs::create_dir_all(out_dir)?;
            let name = format!("{}_report.txt", command.name().replace('-', "_"));
            std::fs::write(out_dir.join(name), &report)?;
            lap("write", &mut timings);
            (report, 1, Vec::new())
        }
    };
    write_csv(&out_dir.join("errors.csv"), &errors)?;

    let manifest = Manifest {
        command: command.name().to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: hash,
        rows_written: rows,
        row_errors: errors.len(),
        stage_timings: timings,
        summary,
    };
    manifest.write(&out_dir.join("manifest.toml"))?;
    let mut report = report;
    if !errors.is_empty() {
        report.push_str(&format!("{} grid points failed, see errors.csv\n", errors.len()));
    }
    Ok(Outcome {
        report,
        passed,
        manifest,
    })
}
