//! Diagnostics on rate series: rolling AMRR, Chow break scans, long-memory
//! estimates and rank correlation.

mod chow;
mod lrd;
mod rolling;

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::stats::{average_ranks, pearson};

pub use chow::{chow_scan, chow_scan_values, default_min_segment, write_chow_csv, ChowResult, ChowScan};
pub use lrd::{estimate_dv, LrdEstimate, LrdReport};
pub use rolling::{rolling_amrr, write_rate_series_csv, RateSeries, RateSource, WindowGap, WINDOW_FAILURE_LIMIT};

/// `sign(x)·ln(1 + |x|)`, defined for negative rates.
pub fn log_transform(values: &[f64]) -> Vec<f64> {
    values.iter().map(|x| x.signum() * x.abs().ln_1p()).collect()
}

/// Spearman's rho with average ranks for ties, and its two-sided p-value
/// from `t = ρ√((n−2)/(1−ρ²))` on `n − 2` degrees of freedom.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch(format!("{} vs {} observations", x.len(), y.len())));
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::TooFewRows { needed: 3, found: n });
    }
    let rx = average_ranks(x);
    let ry = average_ranks(y);
    let flat = |r: &[f64]| r.iter().all(|v| *v == r[0]);
    if flat(&rx) || flat(&ry) {
        return Err(Error::Degenerate("zero rank variance".into()));
    }
    let rho = pearson(&rx, &ry).clamp(-1.0, 1.0);
    let df = (n - 2) as f64;
    let denom = 1.0 - rho * rho;
    let p = if denom <= 0.0 {
        0.0
    } else {
        let t = rho * (df / denom).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::Internal(e.to_string()))?;
        (2.0 * dist.sf(t.abs())).clamp(0.0, 1.0)
    };
    Ok((rho, p))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_transform_points() {
        let v = log_transform(&[0.0, std::f64::consts::E - 1.0, -(std::f64::consts::E - 1.0), 0.3, -0.3]);
        assert_eq!(v[0], 0.0);
        assert!((v[1] - 1.0).abs() < 1e-15);
        assert_eq!(v[2], -v[1]);
        assert_eq!(v[3], -v[4]);
    }

    #[test]
    fn spearman_extremes() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let (r, p) = spearman(&x, &x).unwrap();
        assert_eq!(r, 1.0);
        assert_eq!(p, 0.0);
        let rev = [5.0, 4.0, 3.0, 2.0, 1.0];
        assert_eq!(spearman(&x, &rev).unwrap().0, -1.0);
    }

    #[test]
    fn spearman_with_tie_matches_brute_force() {
        let x = [3.1, 1.2, 4.4, 1.2, 5.0];
        let y = [2.0, 0.5, 1.0, 3.0, 4.0];
        // ranks of x: 3, 1.5, 4, 1.5, 5; ranks of y: 3, 1, 2, 4, 5
        let rx = [3.0, 1.5, 4.0, 1.5, 5.0];
        let ry = [3.0, 1.0, 2.0, 4.0, 5.0];
        let mx = 3.0;
        let num: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - mx)).sum();
        let dx: f64 = rx.iter().map(|a| (a - mx) * (a - mx)).sum();
        let dy: f64 = ry.iter().map(|b| (b - mx) * (b - mx)).sum();
        let expected = num / (dx * dy).sqrt();
        let (r, p) = spearman(&x, &y).unwrap();
        assert!((r - expected).abs() < 1e-14);
        assert!((0.0..=1.0).contains(&p));
    }

    #[test]
    fn spearman_rejects_constant() {
        assert!(spearman(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
    }
}
