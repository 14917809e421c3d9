mod common;

use amvp_core::adaptive::{amcvarp_run, amvp_run, AdaptiveConfig};
use amvp_core::optimize::*;
use common::*;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

fn moments(sigma: DMatrix<f64>, mu: Vec<f64>) -> MomentEstimate {
    let n = sigma.nrows();
    MomentEstimate {
        assets: names(n),
        mu: DVector::from_vec(mu),
        sigma,
        n_obs: 100,
    }
}

#[test]
fn closed_form_matches_linear_solve_with_low_variance_third_asset() {
    let sigma = DMatrix::from_row_slice(3, 3, &[1.0, 0.9, 0.0, 0.9, 1.0, 0.0, 0.0, 0.0, 0.25]);
    let w = mvp_closed_form(&moments(sigma.clone(), vec![0.0; 3])).unwrap();
    let x = sigma.lu().solve(&DVector::from_element(3, 1.0)).unwrap();
    let x = &x / x.sum();
    for i in 0..3 {
        assert!((w.weights[i] - x[i]).abs() < 1e-12);
    }
}

#[test]
fn two_asset_corner_matches_fine_grid() {
    // closed form shorts asset 2: σ12 above σ1²
    let sigma = DMatrix::from_row_slice(2, 2, &[1.0, 1.2, 1.2, 2.0]);
    let w = mvp_constrained(&moments(sigma.clone(), vec![0.0; 2])).unwrap();
    let mut best = (f64::INFINITY, 0.0);
    for k in 0..=10_000 {
        let a = k as f64 / 10_000.0;
        let v = quad(&sigma, &[a, 1.0 - a]);
        if v < best.0 {
            best = (v, a);
        }
    }
    assert_eq!(w.weights, vec![1.0, 0.0]);
    assert!((best.1 - 1.0).abs() < 1e-12);
}

#[test]
fn frontier_points_match_grid_search() {
    let mut r = rng(11);
    let sigma = random_psd(&mut r, 3);
    let mu = vec![0.01, 0.02, 0.035];
    let m = moments(sigma.clone(), mu.clone());
    let points = efficient_frontier(&m, 12).unwrap();
    let mut grid = Vec::new();
    simplex_grid(3, 1000, &mut |w| {
        let ret: f64 = w.iter().zip(&mu).map(|(a, b)| a * b).sum();
        grid.push((ret, quad(&sigma, w)));
    });
    for p in points.iter().filter(|p| p.feasible) {
        let oracle = grid
            .iter()
            .filter(|(ret, _)| *ret >= p.target_return)
            .map(|(_, v)| *v)
            .fold(f64::INFINITY, f64::min);
        // frontier risk is a standard deviation
        let var = p.risk * p.risk;
        let rel = (var - oracle) / oracle;
        assert!(rel <= 1e-4, "target {}: {var} vs grid {oracle}", p.target_return);
        assert!(rel >= -1e-2, "target {}: {var} vs grid {oracle}", p.target_return);
    }
}

#[test]
fn three_asset_cvar_beats_grid() {
    let mut r = rng(5);
    let s = DMatrix::from_fn(50, 3, |_, j| r.random_range(-0.05..0.05) + 0.005 * j as f64);
    let sol = min_cvar_lp(&s, &names(3), 0.9).unwrap();
    let mut best = f64::INFINITY;
    simplex_grid(3, 20, &mut |w| {
        let ret: Vec<f64> = portfolio_returns(&s, w).iter().copied().collect();
        best = best.min(brute_cvar(&ret, 0.9));
    });
    assert!(sol.cvar <= best + 1e-9, "{} vs {}", sol.cvar, best);
    let ret: Vec<f64> = portfolio_returns(&s, &sol.weights.weights).iter().copied().collect();
    assert!((brute_cvar(&ret, 0.9) - sol.cvar).abs() < 1e-9);
}

#[test]
fn equal_variance_diagonal_converges_at_first_iteration() {
    let mut r = rng(2);
    // independent columns with identical sample variance
    let base = random_returns(&mut r, 300, 4);
    let cols: Vec<_> = (0..4)
        .map(|j| {
            let c = base.column(j);
            let m = c.mean();
            let sd = (c.map(|v| (v - m) * (v - m)).sum() / 299.0).sqrt();
            c.map(|v| 0.01 * (v - m) / sd)
        })
        .collect();
    let mut ret = DMatrix::from_columns(&cols);
    // orthogonalize so the sample covariance is diagonal
    let qr = ret.clone().qr();
    let q = qr.q() * (299.0f64).sqrt() * 0.01;
    ret.copy_from(&q);
    let trace = amvp_run(&panel(ret), &AdaptiveConfig::scenario(252)).unwrap();
    assert!(trace.converged);
    assert_eq!(trace.records.len(), 2);
    for w in &trace.records[0].weights.weights {
        assert!((w - 0.25).abs() < 1e-9);
    }
}

#[test]
fn bundled_style_fixture_converges_within_25() {
    let mut r = rng(42);
    let p = panel(random_returns(&mut r, 500, 5));
    let cfg = AdaptiveConfig {
        epsilon: 1e-10,
        ..AdaptiveConfig::historical(252)
    };
    let trace = amvp_run(&p, &cfg).unwrap();
    assert!(trace.converged && trace.records.len() <= 26);
    for w in trace.risks().windows(2) {
        assert!(w[1] <= w[0]);
    }
}

#[test]
fn dominant_asset_takes_all_cvar_weight() {
    let mut r = rng(8);
    let s = DMatrix::from_fn(80, 3, |_, j| {
        if j == 0 {
            r.random_range(0.001..0.002)
        } else {
            r.random_range(-0.05..-0.01)
        }
    });
    let cfg = AdaptiveConfig {
        alpha: 0.9,
        ..AdaptiveConfig::scenario(252)
    };
    let trace = amcvarp_run(&s, &names(3), &cfg).unwrap();
    assert!(trace.converged);
    assert_eq!(trace.records.len(), 2);
    let risks = trace.risks();
    assert_eq!(risks[0], risks[1]);
    assert!((trace.records[0].weights.weights[0] - 1.0).abs() < 1e-9);
}

#[test]
fn duplicated_scenario_columns_keep_objective() {
    let mut r = rng(12);
    let c: Vec<f64> = (0..60).map(|_| r.random_range(-0.03..0.03)).collect();
    let s = DMatrix::from_fn(60, 2, |i, _| c[i]);
    let trace = amcvarp_run(&s, &names(2), &AdaptiveConfig::scenario(252)).unwrap();
    let r0 = trace.risks()[0];
    assert!(trace.risks().iter().all(|v| (v - r0).abs() < 1e-12));
}

#[test]
fn adaptive_cvar_against_grid() {
    let mut r = rng(7);
    let s = DMatrix::from_fn(200, 3, |_, j| r.random_range(-0.04..0.04) * (1.0 + 0.3 * j as f64));
    let cfg = AdaptiveConfig {
        alpha: 0.95,
        ..AdaptiveConfig::scenario(252)
    };
    let trace = amcvarp_run(&s, &names(3), &cfg).unwrap();
    for w in trace.risks().windows(2) {
        assert!(w[1] <= w[0] + 1e-12);
    }
    let mut best = f64::INFINITY;
    simplex_grid(3, 50, &mut |w| {
        let ret: Vec<f64> = portfolio_returns(&s, w).iter().copied().collect();
        best = best.min(brute_cvar(&ret, 0.95));
    });
    let last = *trace.risks().last().unwrap();
    assert!(last <= best + 1e-9, "{last} vs {best}");
    assert!(last >= best - 0.02 * best.abs().max(0.01));
}
