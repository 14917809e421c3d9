mod common;

use amvp_core::analysis::estimate_dv;
use amvp_core::scenarios::*;
use amvp_core::Error;
use common::*;
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

fn params() -> ArfimaFigarchParams {
    ArfimaFigarchParams {
        phi_m: 0.0,
        theta_m: 0.0,
        d_m: 0.0,
        omega: 0.1,
        beta_v: 0.5,
        phi_v: 0.5,
        d_v: 0.0,
        mean_const: 0.0,
    }
}

fn stderr_mean(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let v = x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

fn autocorr(x: &[f64], lag: usize) -> f64 {
    let (m, _) = stderr_mean(x);
    let den: f64 = x.iter().map(|v| (v - m) * (v - m)).sum();
    let num: f64 = (lag..x.len()).map(|t| (x[t] - m) * (x[t - lag] - m)).sum();
    num / den
}

#[test]
fn white_noise_has_no_memory() {
    let mut r = rng(101);
    let z: Vec<f64> = (0..3000).map(|_| 0.01 * r.sample::<f64, _>(StandardNormal)).collect();
    let fit = fit_arfima_figarch(&z).unwrap();
    assert!(fit.params.d_m.abs() <= 0.1, "d_m = {}", fit.params.d_m);
    assert!(fit.params.d_v <= 0.15, "d_v = {}", fit.params.d_v);
}

#[test]
fn constant_series_is_rejected() {
    assert!(matches!(fit_arfima_figarch(&[0.01; 400]), Err(Error::Degenerate(_))));
    assert!(matches!(fit_arfima_figarch(&[0.01; 100]), Err(Error::TooFewRows { .. })));
}

#[test]
fn normal_sample_gives_near_gaussian_nig() {
    let mut r = rng(3);
    let z: Vec<f64> = (0..20_000).map(|_| r.sample(StandardNormal)).collect();
    let fit = fit_nig(&z).unwrap();
    assert!(fit.params.beta_skew.abs() < 0.2);
    assert!(fit.params.excess_kurtosis() < 0.5);
}

#[test]
fn nig_sampling_matches_analytic_moments() {
    let p = NigParams::new(2.0, 0.5, 0.1, 1.0).unwrap();
    let x = nig_sample(&p, 100_000, 17).unwrap();
    let (m, se) = stderr_mean(&x);
    assert!((m - p.mean()).abs() < 3.0 * se, "{m} vs {}", p.mean());
    let n = x.len() as f64;
    let var = x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0);
    let m4 = x.iter().map(|v| (v - m).powi(4)).sum::<f64>() / n;
    let se_var = ((m4 - var * var) / n).sqrt();
    // δα²/(α²−β²)^{3/2}
    let analytic = 1.0 * 4.0 / (4.0f64 - 0.25).powf(1.5);
    assert!((var - analytic).abs() < 3.0 * se_var, "{var} vs {analytic}");

    let sym = NigParams::new(2.0, 0.0, 0.0, 1.0).unwrap();
    let y = nig_sample(&sym, 100_000, 18).unwrap();
    let (m, se) = stderr_mean(&y);
    assert!(m.abs() < 3.0 * se);
    assert_eq!(y, nig_sample(&sym, 100_000, 18).unwrap());
}

#[test]
fn homoskedastic_limit_matches_unconditional_variance() {
    let p = params();
    let set = simulate_paths(&p, &NigParams::gaussian_limit(), 20_000, 1, 4).unwrap();
    let y: Vec<f64> = set.returns.column(0).iter().copied().collect();
    let (m, _) = stderr_mean(&y);
    let var = y.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (y.len() as f64 - 1.0);
    let level = p.omega / (1.0 - p.beta_v);
    assert!((var / level - 1.0).abs() < 0.1, "{var} vs {level}");
}

#[test]
fn mean_constant_shifts_location() {
    let p = ArfimaFigarchParams {
        mean_const: 0.3,
        ..params()
    };
    let set = simulate_paths(&p, &NigParams::gaussian_limit(), 10_000, 1, 5).unwrap();
    let y: Vec<f64> = set.returns.column(0).iter().copied().collect();
    let (m, se) = stderr_mean(&y);
    assert!((m - 0.3).abs() < 3.0 * se);
    let again = simulate_paths(&p, &NigParams::gaussian_limit(), 10_000, 1, 5).unwrap();
    assert_eq!(set.returns, again.returns);
}

#[test]
fn long_memory_volatility_clusters() {
    let p = ArfimaFigarchParams {
        d_v: 0.4,
        beta_v: 0.3,
        phi_v: 0.1,
        ..params()
    };
    p.validate().unwrap();
    let set = simulate_paths(&p, &NigParams::gaussian_limit(), 20_000, 1, 6).unwrap();
    let sq: Vec<f64> = set.returns.column(0).iter().map(|v| v * v).collect();
    for lag in 1..=20 {
        assert!(autocorr(&sq, lag) > 0.0, "lag {lag}");
    }
}

#[test]
fn lrd_round_trip() {
    let p = ArfimaFigarchParams {
        d_v: 0.4,
        beta_v: 0.3,
        phi_v: 0.1,
        ..params()
    };
    let set = simulate_paths(&p, &NigParams::gaussian_limit(), 5000, 1, 21).unwrap();
    let y: Vec<f64> = set.returns.column(0).iter().copied().collect();
    let est = estimate_dv(&y).unwrap();
    assert!((est.d_v - 0.4).abs() <= 0.1, "d_v = {}", est.d_v);
    assert_eq!(est.hurst - est.d_v, 0.5);
}

fn white_noise_panel(seed: u64, duplicate: bool) -> amvp_core::data::ReturnPanel {
    let mut r = rng(seed);
    let a: Vec<f64> = (0..800).map(|_| 0.01 * r.sample::<f64, _>(StandardNormal)).collect();
    let b: Vec<f64> = (0..800).map(|_| 0.02 * r.sample::<f64, _>(StandardNormal)).collect();
    panel(DMatrix::from_fn(800, 2, |i, j| match (j, duplicate) {
        (0, _) | (1, true) => a[i],
        _ => b[i],
    }))
}

#[test]
fn independent_assets_stay_uncorrelated() {
    let set = build_scenario_panel(&white_noise_panel(30, false), 10_000, 9).unwrap();
    let rc = spearman_matrix(&set.returns);
    assert!(rc[(0, 1)].abs() < 0.05, "rho = {}", rc[(0, 1)]);
}

#[test]
fn duplicated_assets_stay_comonotone() {
    let set = build_scenario_panel(&white_noise_panel(31, true), 5000, 9).unwrap();
    let rc = spearman_matrix(&set.returns);
    assert!(rc[(0, 1)] > 0.95, "rho = {}", rc[(0, 1)]);
    let again = build_scenario_panel(&white_noise_panel(31, true), 5000, 9).unwrap();
    assert_eq!(set.returns, again.returns);
    assert_eq!(set.provenance, again.provenance);
}

#[test]
fn scenario_csv_round_trip() {
    let set = simulate_paths(&params(), &NigParams::gaussian_limit(), 50, 3, 1).unwrap();
    let mut buf = Vec::new();
    write_scenarios_csv(&set, &mut buf).unwrap();
    let (assets, paths, m) = read_scenarios_csv(&buf[..]).unwrap();
    assert_eq!(assets, set.assets);
    assert_eq!(paths, set.path);
    assert_eq!(m, set.returns);
}
