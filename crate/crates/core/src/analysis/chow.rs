use std::io::Write;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, FisherSnedecor};

use super::rolling::RateSeries;
use crate::error::{Error, Result};
use crate::stats::fmt_sig;

/// Regression parameters: intercept and lag-1 slope.
const Q: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChowResult {
    /// First date of the right-hand segment.
    pub breakpoint_date: NaiveDate,
    pub f_stat: f64,
    pub p_value: f64,
    pub n_left: usize,
    pub n_right: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChowScan {
    pub results: Vec<ChowResult>,
    /// Breakpoints that could not be tested, with the reason.
    pub skipped: Vec<(NaiveDate, String)>,
    pub min_segment: usize,
    pub bonferroni: bool,
}

/// `max(30, ceil(0.1·n))`.
pub fn default_min_segment(n: usize) -> usize {
    30usize.max(n.div_ceil(10))
}

/// Residual sum of squares of `y ~ 1 + x`; `None` when `x` is constant.
fn ols_ssr(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
    }
    let scale = x.iter().map(|a| a.abs()).fold(0.0, f64::max).max(1e-300);
    if !(sxx > 1e-24 * scale * scale * n) {
        return None;
    }
    let slope = sxy / sxx;
    let icept = my - slope * mx;
    Some(x.iter().zip(y).map(|(a, b)| (b - icept - slope * a).powi(2)).sum())
}

/// Chow F-test of an AR(1)-with-intercept regression at every admissible
/// breakpoint. Gaps in the series are dropped first. `min_segment`
/// defaults to [`default_min_segment`] of the regression sample size.
pub fn chow_scan(series: &RateSeries, min_segment: Option<usize>, bonferroni: bool) -> Result<ChowScan> {
    let (dates, values) = series.observed();
    chow_scan_values(&dates, &values, min_segment, bonferroni)
}

pub fn chow_scan_values(
    dates: &[NaiveDate],
    values: &[f64],
    min_segment: Option<usize>,
    bonferroni: bool,
) -> Result<ChowScan> {
    if dates.len() != values.len() {
        return Err(Error::DimensionMismatch("dates and values differ in length".into()));
    }
    if values.len() < 2 {
        return Err(Error::TooFewRows { needed: 2, found: values.len() });
    }
    // regression sample: y_t on (1, y_{t-1}) for t = 1..
    let x = &values[..values.len() - 1];
    let y = &values[1..];
    let n = y.len();
    let m = min_segment.unwrap_or_else(|| default_min_segment(n));
    if m < Q + 1 {
        return Err(Error::InvalidParameter(format!("minimum segment {m} is below {}", Q + 1)));
    }
    if n < 2 * m + 1 {
        return Err(Error::TooFewRows { needed: 2 * m + 1, found: n });
    }
    let ssr_full = ols_ssr(x, y).ok_or_else(|| Error::Degenerate("lagged series is constant".into()))?;
    let df2 = (n - 2 * Q) as f64;
    let dist = FisherSnedecor::new(Q as f64, df2).map_err(|e| Error::Internal(e.to_string()))?;

    let outcomes: Vec<(usize, std::result::Result<(f64, f64), String>)> = (m..=n - m)
        .into_par_iter()
        .map(|b| {
            let left = ols_ssr(&x[..b], &y[..b]);
            let right = ols_ssr(&x[b..], &y[b..]);
            let out = match (left, right) {
                (Some(l), Some(r)) => {
                    let within = l + r;
                    let between = (ssr_full - within).max(0.0);
                    if within <= f64::EPSILON * ssr_full.max(f64::MIN_POSITIVE) {
                        if between <= 1e-12 * ssr_full.max(f64::MIN_POSITIVE) {
                            Ok((0.0, 1.0))
                        } else {
                            Err("segments fit exactly".to_string())
                        }
                    } else {
                        let f = (between / Q as f64) / (within / df2);
                        Ok((f, dist.sf(f).clamp(0.0, 1.0)))
                    }
                }
                _ => Err("lagged values constant within a segment".to_string()),
            };
            (b, out)
        })
        .collect();

    let tested = outcomes.iter().filter(|(_, o)| o.is_ok()).count();
    let mut results = Vec::new();
    let mut skipped = Vec::new();
    for (b, o) in outcomes {
        // y[b] is values[b + 1]
        let date = dates[b + 1];
        match o {
            Ok((f, p)) => results.push(ChowResult {
                breakpoint_date: date,
                f_stat: f,
                p_value: if bonferroni { (p * tested as f64).min(1.0) } else { p },
                n_left: b,
                n_right: n - b,
            }),
            Err(reason) => skipped.push((date, reason)),
        }
    }
    Ok(ChowScan {
        results,
        skipped,
        min_segment: m,
        bonferroni,
    })
}

/// `date,f_stat,p_value`
pub fn write_chow_csv<W: Write>(scan: &ChowScan, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["date", "f_stat", "p_value"])?;
    for r in &scan.results {
        w.write_record([
            r.breakpoint_date.format("%Y-%m-%d").to_string(),
            fmt_sig(r.f_stat, 10),
            fmt_sig(r.p_value, 10),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn dates(n: usize) -> Vec<NaiveDate> {
        let d0 = NaiveDate::from_ymd_opt(2000, 1, 1).unwrap();
        (0..n).map(|i| d0 + chrono::Days::new(i as u64)).collect()
    }

    #[test]
    fn intercept_jump_is_detected_at_midpoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 300;
        let mut v = Vec::with_capacity(n);
        let mut prev = 0.0;
        for t in 0..n {
            let c = if t < n / 2 { 0.0 } else { 5.0 };
            let e: f64 = rng.sample(StandardNormal);
            prev = c + 0.3 * prev * (t > 0 && t != n / 2) as u8 as f64 + e;
            v.push(prev);
        }
        let scan = chow_scan_values(&dates(n), &v, None, false).unwrap();
        let mid = dates(n)[n / 2];
        let at_mid = scan.results.iter().find(|r| r.breakpoint_date == mid).unwrap();
        assert!(at_mid.p_value < 1e-3, "p = {}", at_mid.p_value);
    }

    #[test]
    fn identical_halves_give_no_break() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let half: Vec<f64> = (0..100).map(|_| rng.sample(StandardNormal)).collect();
        // periodic series: both halves hold the same regression pairs
        let v: Vec<f64> = (0..=200).map(|t| half[t % 100]).collect();
        let scan = chow_scan_values(&dates(v.len()), &v, Some(30), false).unwrap();
        let mid = scan.results.iter().find(|r| r.n_left == 100).unwrap();
        assert!(mid.f_stat < 1e-9, "F = {}", mid.f_stat);
        assert!(mid.p_value > 0.999);
    }

    #[test]
    fn too_short_is_rejected() {
        assert!(chow_scan_values(&dates(40), &vec![0.0; 40], None, false).is_err());
    }
}
