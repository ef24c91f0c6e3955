//! Exact pricer, expansion and experiment runner working together.

use qou_core::expansion::{IvExpansion, DEFAULT_GRID};
use qou_core::experiments::{run_error_surface, ErrorSurfaceConfig, ExperimentConfig, StrikeGrid, UniformStrikes};
use qou_core::{ContractSpec, FourierPricer, QouParams, QuadratureConfig};

fn y0() -> f64 {
    0.08f64.sqrt()
}

fn atm_errors(p: &QouParams<f64>, reset: f64) -> [f64; 3] {
    let spec = ContractSpec::new(0.0, reset, 2.0, 0.0).unwrap();
    let pricer = FourierPricer::new(p, &spec, y0(), &QuadratureConfig::default()).unwrap();
    let exp = IvExpansion::for_contract(p, &spec, y0(), DEFAULT_GRID).unwrap();
    let x = pricer.log_forward();
    let exact = pricer.implied_vol(x).unwrap();
    let a = exp.approx(x).unwrap();
    [0, 1, 2].map(|n| (a.bar(n) - exact).abs())
}

#[test]
fn implied_vol_invariant_to_quadrature_refinement() {
    let p = QouParams::base_case();
    let spec = ContractSpec::new(0.0, 1.0 / 64.0, 2.0, 0.0).unwrap();
    let base = FourierPricer::new(&p, &spec, y0(), &QuadratureConfig::default()).unwrap();
    let fine = FourierPricer::new(
        &p,
        &spec,
        y0(),
        &QuadratureConfig {
            nodes: 4001,
            omega_max: 300.0,
            ..Default::default()
        },
    )
    .unwrap();
    let x = base.log_forward();
    for m in [-0.1, 0.0, 0.1] {
        let d = (base.implied_vol(x + m).unwrap() - fine.implied_vol(x + m).unwrap()).abs();
        assert!(d <= 1e-6, "m = {m}: {d:e}");
    }
}

#[test]
fn sigma0_error_is_first_order() {
    let p = QouParams::base_case();
    let ratio = atm_errors(&p, 1.0 / 64.0)[0] / atm_errors(&p, 1.0 / 128.0)[0];
    assert!((1.7..2.3).contains(&ratio), "ratio {ratio}");
}

#[test]
fn first_order_beats_zeroth_at_the_money() {
    let e = atm_errors(&QouParams::base_case(), 1.0 / 64.0);
    assert!(e[1] < e[0], "{e:?}");
    assert!(e[2] < e[1], "{e:?}");
}

#[test]
fn cir_case_near_atm_ordering_at_one_sixteenth() {
    let p = QouParams::cir_case();
    let spec = ContractSpec::new(0.0, 1.0 / 16.0, 2.0, 0.0).unwrap();
    let pricer = FourierPricer::new(&p, &spec, y0(), &QuadratureConfig::default()).unwrap();
    let exp = IvExpansion::for_contract(&p, &spec, y0(), DEFAULT_GRID).unwrap();
    let x = pricer.log_forward();
    let mut worst = [0.0f64; 3];
    for j in -10..=10 {
        let k = x + 0.005 * j as f64;
        let exact = pricer.implied_vol(k).unwrap();
        let a = exp.approx(k).unwrap();
        for n in 0..3 {
            worst[n] = worst[n].max((a.bar(n) - exact).abs());
        }
    }
    assert!(worst[2] < worst[1] && worst[1] < worst[0], "{worst:?}");
}

fn surface_config(p: QouParams<f64>) -> ExperimentConfig {
    let text = format!(
        "tbar = 2.0\n[model]\nkappa = {}\ntheta = {}\ndelta = {}\nq = {}\ny0 = {}\n",
        p.kappa, p.theta, p.delta, p.q, p.y0
    );
    let mut cfg = ExperimentConfig::from_toml_str(&text).unwrap();
    cfg.strike_grid = StrikeGrid::Uniform(UniformStrikes {
        min: -0.15,
        max: 0.15,
        points: 31,
    });
    cfg.error_surface = ErrorSurfaceConfig {
        count: 6,
        ..Default::default()
    };
    cfg
}

#[test]
fn error_surface_decreases_toward_origin() {
    for (p, near_bound) in [(QouParams::base_case(), 0.002), (QouParams::cir_case(), 0.005)] {
        let run = run_error_surface(&surface_config(p)).unwrap();
        assert!(run.errors.is_empty());
        assert!(run.summary.max_rel_err < 0.005);
        let mut resets: Vec<f64> = run.cells.iter().map(|c| c.reset).collect();
        resets.dedup();
        let band_mean = |reset: f64, lo: f64, hi: f64| {
            let v: Vec<f64> = run
                .cells
                .iter()
                .filter(|c| c.reset == reset && c.log_moneyness.abs() >= lo - 1e-12 && c.log_moneyness.abs() < hi)
                .map(|c| c.rel_err)
                .collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        // Along the strike axis: bands of |k - x| get worse outward.
        for &r in &resets {
            let bands = [band_mean(r, 0.0, 0.05), band_mean(r, 0.05, 0.1), band_mean(r, 0.1, 0.2)];
            assert!(bands[0] < bands[1] && bands[1] < bands[2], "T = {r}: {bands:?}");
        }
        // Along the reset axis: each row is worse than the previous.
        let rows: Vec<f64> = resets.iter().map(|&r| band_mean(r, 0.0, 0.2)).collect();
        assert!(rows.windows(2).all(|w| w[0] < w[1]), "{rows:?}");
        // Cells next to the origin sit in the lowest band.
        let near = run
            .cells
            .iter()
            .filter(|c| c.reset == resets[0] && c.log_moneyness.abs() <= 0.02)
            .map(|c| c.rel_err)
            .fold(0.0, f64::max);
        assert!(near < near_bound);
    }
}
