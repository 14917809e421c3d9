use std::io::Write;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adaptive::{amvp_run, AdaptiveConfig};
use crate::data::ReturnPanel;
use crate::error::{Error, Result};
use crate::stats::fmt_sig;

/// Largest tolerated fraction of failed windows.
pub const WINDOW_FAILURE_LIMIT: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateSource {
    Historical,
    ForwardLooking,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowGap {
    pub index: usize,
    pub date: NaiveDate,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateSeries {
    /// Last date of each window.
    pub dates: Vec<NaiveDate>,
    /// NaN where the window failed, see `gaps`.
    pub values: Vec<f64>,
    pub window: usize,
    pub source: RateSource,
    pub annualized: bool,
    pub gaps: Vec<WindowGap>,
}

impl RateSeries {
    /// Dates and values with gaps removed.
    pub fn observed(&self) -> (Vec<NaiveDate>, Vec<f64>) {
        self.dates
            .iter()
            .zip(&self.values)
            .filter(|(_, v)| v.is_finite())
            .map(|(d, v)| (*d, *v))
            .unzip()
    }
}

/// Per-period AMRR over every window of `window` consecutive rows.
///
/// Each window is an independent full run of the adaptive loop, or only
/// its first solve when `single_shot` is set.
pub fn rolling_amrr(panel: &ReturnPanel, window: usize, config: &AdaptiveConfig, single_shot: bool) -> Result<RateSeries> {
    config.validate()?;
    let t = panel.n_periods();
    let n = panel.n_assets();
    if window < n + 2 {
        return Err(Error::InvalidParameter(format!(
            "window {window} is too short for {n} assets (need at least {})",
            n + 2
        )));
    }
    if t < window {
        return Err(Error::TooFewRows { needed: window, found: t });
    }
    let count = t - window + 1;
    let run_config = if single_shot {
        AdaptiveConfig { max_iterations: 1, ..*config }
    } else {
        *config
    };
    let outcomes: Vec<Result<f64>> = (0..count)
        .into_par_iter()
        .map(|k| {
            let trace = amvp_run(&panel.window(k, window), &run_config)?;
            let record = if single_shot { trace.records.first() } else { trace.records.last() };
            record
                .map(|r| r.rate)
                .ok_or_else(|| Error::Internal("adaptive run produced no iterations".into()))
        })
        .collect();

    let dates: Vec<NaiveDate> = (0..count).map(|k| panel.dates[k + window - 1]).collect();
    let mut values = Vec::with_capacity(count);
    let mut gaps = Vec::new();
    for (k, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(v) => values.push(v),
            Err(e) => {
                values.push(f64::NAN);
                gaps.push(WindowGap {
                    index: k,
                    date: dates[k],
                    reason: e.to_string(),
                });
            }
        }
    }
    if gaps.len() as f64 > WINDOW_FAILURE_LIMIT * count as f64 {
        return Err(Error::TooManyWindowFailures {
            failed: gaps.len(),
            total: count,
            first: format!("{}: {}", gaps[0].date, gaps[0].reason),
        });
    }
    Ok(RateSeries {
        dates,
        values,
        window,
        source: RateSource::Historical,
        annualized: false,
        gaps,
    })
}

/// `date,amrr`; failed windows have an empty value.
pub fn write_rate_series_csv<W: Write>(series: &RateSeries, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["date", "amrr"])?;
    for (d, v) in series.dates.iter().zip(&series.values) {
        let value = if v.is_finite() { fmt_sig(*v, 12) } else { String::new() };
        w.write_record([d.format("%Y-%m-%d").to_string(), value])?;
    }
    w.flush()?;
    Ok(())
}
