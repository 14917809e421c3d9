#![allow(dead_code)]

use amvp_core::data::{Calendar, ReturnPanel};
use chrono::NaiveDate;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn dates(n: usize) -> Vec<NaiveDate> {
    let d0 = NaiveDate::from_ymd_opt(2010, 1, 4).unwrap();
    (0..n).map(|i| d0 + chrono::Days::new(i as u64)).collect()
}

pub fn names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("A{i}")).collect()
}

pub fn panel(returns: DMatrix<f64>) -> ReturnPanel {
    let (t, n) = returns.shape();
    ReturnPanel::new(dates(t), names(n), returns, Calendar::Trading252).unwrap()
}

/// Correlated Gaussian returns with random vols and drifts.
pub fn random_returns(r: &mut ChaCha8Rng, t: usize, n: usize) -> DMatrix<f64> {
    let mix = DMatrix::from_fn(n, n, |_, _| r.random_range(-1.0..1.0));
    let vol: Vec<f64> = (0..n).map(|_| r.random_range(0.002..0.03)).collect();
    let drift: Vec<f64> = (0..n).map(|_| r.random_range(-5e-4..1e-3)).collect();
    let z = DMatrix::from_fn(t, n, |_, _| r.sample::<f64, _>(StandardNormal));
    let c = z * mix.transpose();
    DMatrix::from_fn(t, n, |i, j| drift[j] + vol[j] * c[(i, j)] / (n as f64).sqrt())
}

pub fn random_psd(r: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let b = DMatrix::from_fn(n, n + 2, |_, _| r.random_range(-1.0..1.0));
    &b * b.transpose() / (n as f64 + 2.0)
}

pub fn quad(sigma: &DMatrix<f64>, w: &[f64]) -> f64 {
    let v = DVector::from_column_slice(w);
    (v.transpose() * sigma * &v)[(0, 0)]
}

/// Every point of the simplex grid with spacing `1/steps`.
pub fn simplex_grid(n: usize, steps: usize, visit: &mut dyn FnMut(&[f64])) {
    fn rec(n: usize, steps: usize, left: usize, prefix: &mut Vec<f64>, visit: &mut dyn FnMut(&[f64])) {
        if prefix.len() == n - 1 {
            prefix.push(left as f64 / steps as f64);
            visit(prefix);
            prefix.pop();
            return;
        }
        for k in 0..=left {
            prefix.push(k as f64 / steps as f64);
            rec(n, steps, left - k, prefix, visit);
            prefix.pop();
        }
    }
    rec(n, steps, steps, &mut Vec::with_capacity(n), visit);
}

/// CVaR as the mean of the worst `(1-α)` share of losses, from the sorted
/// losses with a fractional boundary scenario.
pub fn brute_cvar(returns: &[f64], alpha: f64) -> f64 {
    let mut losses: Vec<f64> = returns.iter().map(|r| -r).collect();
    losses.sort_by(|a, b| b.total_cmp(a));
    let s = losses.len() as f64;
    let mut mass = (1.0 - alpha) * s;
    let take = mass;
    let mut total = 0.0;
    for l in losses {
        if mass <= 0.0 {
            break;
        }
        let w = mass.min(1.0);
        total += w * l;
        mass -= w;
    }
    total / take
}
