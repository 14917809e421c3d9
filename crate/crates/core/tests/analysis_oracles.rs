mod common;

use amvp_core::adaptive::{amvp_run, AdaptiveConfig};
use amvp_core::analysis::*;
use common::*;
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

#[test]
fn constant_panel_gives_constant_rate() {
    let p = panel(DMatrix::from_element(60, 3, 0.0007));
    let s = rolling_amrr(&p, 20, &AdaptiveConfig::historical(252), false).unwrap();
    assert_eq!(s.values.len(), 41);
    assert!(s.values.iter().all(|v| (v - 0.0007).abs() < 1e-15));
}

#[test]
fn single_window_equals_full_sample_run() {
    let mut r = rng(4);
    let p = panel(random_returns(&mut r, 120, 3));
    let cfg = AdaptiveConfig::historical(252);
    let s = rolling_amrr(&p, 120, &cfg, false).unwrap();
    let full = amvp_run(&p, &cfg).unwrap();
    assert_eq!(s.values, vec![full.final_rate().unwrap()]);
    assert_eq!(s.dates, vec![*p.dates.last().unwrap()]);
}

#[test]
fn regime_shift_moves_the_rate_and_matches_reruns() {
    let mut r = rng(77);
    let t = 400;
    let ret = DMatrix::from_fn(t, 2, |i, j| {
        let z: f64 = r.sample(StandardNormal);
        match (j, i < t / 2) {
            (0, true) => 0.003 + 0.005 * z,
            (0, false) => 0.003 + 0.04 * z,
            (_, _) => -0.002 + 0.015 * z,
        }
    });
    let p = panel(ret);
    let cfg = AdaptiveConfig::historical(252);
    let window = 100;
    let s = rolling_amrr(&p, window, &cfg, false).unwrap();
    assert_eq!(s.values.len(), t - window + 1);
    for k in [0, 57, 150, 300] {
        let rerun = amvp_run(&p.window(k, window), &cfg).unwrap();
        assert_eq!(s.values[k], rerun.final_rate().unwrap());
    }
    let early: f64 = s.values[..50].iter().sum::<f64>() / 50.0;
    let late: f64 = s.values[s.values.len() - 50..].iter().sum::<f64>() / 50.0;
    assert!(early - late > 1e-3, "early {early}, late {late}");
}

#[test]
fn single_shot_uses_first_solve() {
    let mut r = rng(5);
    let p = panel(random_returns(&mut r, 80, 3));
    let cfg = AdaptiveConfig::historical(252);
    let s = rolling_amrr(&p, 60, &cfg, true).unwrap();
    let first = amvp_run(&p.window(3, 60), &cfg).unwrap().records[0].rate;
    assert_eq!(s.values[3], first);
}

#[test]
fn window_preconditions() {
    let mut r = rng(6);
    let p = panel(random_returns(&mut r, 50, 4));
    let cfg = AdaptiveConfig::historical(252);
    assert!(rolling_amrr(&p, 5, &cfg, false).is_err());
    assert!(rolling_amrr(&p, 51, &cfg, false).is_err());
}

fn ar1(seed: u64, n: usize) -> Vec<f64> {
    let mut r = rng(seed);
    let mut v = Vec::with_capacity(n);
    let mut prev = 0.0;
    for _ in 0..n {
        prev = 0.5 * prev + r.sample::<f64, _>(StandardNormal);
        v.push(prev);
    }
    v
}

#[test]
fn no_break_scan_rejects_rarely() {
    let v = ar1(12, 400);
    let scan = chow_scan_values(&dates(v.len()), &v, None, false).unwrap();
    let frac = scan.results.iter().filter(|r| r.p_value < 0.05).count() as f64 / scan.results.len() as f64;
    assert!(frac <= 0.10, "fraction {frac}");
    for res in &scan.results {
        assert!(res.f_stat >= 0.0 && (0.0..=1.0).contains(&res.p_value));
        assert!(res.n_left >= scan.min_segment && res.n_right >= scan.min_segment);
    }
}

#[test]
fn bonferroni_scales_p_values() {
    let v = ar1(13, 200);
    let raw = chow_scan_values(&dates(v.len()), &v, None, false).unwrap();
    let adj = chow_scan_values(&dates(v.len()), &v, None, true).unwrap();
    let m = raw.results.len() as f64;
    for (a, b) in raw.results.iter().zip(&adj.results) {
        assert_eq!(b.p_value, (a.p_value * m).min(1.0));
    }
}

#[test]
fn rate_series_csv_marks_gaps() {
    let s = RateSeries {
        dates: dates(2),
        values: vec![0.5, f64::NAN],
        window: 10,
        source: RateSource::Historical,
        annualized: false,
        gaps: vec![],
    };
    let mut buf = Vec::new();
    write_rate_series_csv(&s, &mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap(), "date,amrr\n2010-01-04,0.5\n2010-01-05,\n");
}
