//! The adaptive loops: solve for the minimum-risk portfolio, append it to
//! the universe as a synthetic asset, re-solve, and stop once successive
//! risk values differ by less than `epsilon`.
//!
//! Each iteration's expected portfolio return is the adaptive minimum-risk
//! rate (AMRR, or AMCVarRR for the CVaR loop), kept per-period in the trace.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::ReturnPanel;
use crate::error::{Error, Result};
use crate::optimize::{
    cvar_of_returns, estimate_moments, estimate_moments_matrix, min_cvar_lp, mvp_constrained,
    portfolio_returns, portfolio_variance, PortfolioWeights,
};
use crate::stats::fmt_sig;

pub const DEFAULT_EPSILON_HISTORICAL: f64 = 1e-20;
pub const DEFAULT_EPSILON_SCENARIO: f64 = 1e-6;
pub const DEFAULT_MAX_ITERATIONS: usize = 50;
pub const DEFAULT_ALPHA: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveConfig {
    pub epsilon: f64,
    pub max_iterations: usize,
    pub alpha: f64,
    pub annualization_factor: u32,
}

impl Default for AdaptiveConfig {
    fn default() -> Self {
        Self::historical(252)
    }
}

impl AdaptiveConfig {
    pub fn historical(annualization_factor: u32) -> Self {
        Self {
            epsilon: DEFAULT_EPSILON_HISTORICAL,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            alpha: DEFAULT_ALPHA,
            annualization_factor,
        }
    }

    pub fn scenario(annualization_factor: u32) -> Self {
        Self {
            epsilon: DEFAULT_EPSILON_SCENARIO,
            ..Self::historical(annualization_factor)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidParameter(format!("epsilon must be > 0, got {}", self.epsilon)));
        }
        if self.max_iterations < 1 {
            return Err(Error::InvalidParameter("max_iterations must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.annualization_factor == 0 {
            return Err(Error::InvalidParameter("annualization factor must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RiskMeasure {
    Variance,
    Cvar,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// 0 for the original universe.
    pub iteration: usize,
    pub universe_size: usize,
    pub weights: PortfolioWeights,
    /// Column means of the universe at this iteration.
    pub mean_returns: Vec<f64>,
    /// σ² for the variance loop, CVaR for the CVaR loop.
    pub risk: f64,
    /// Per-period AMRR / AMCVarRR, `wᵀμ`.
    pub rate: f64,
    pub ridge_applied: bool,
    /// The solver's answer was worse than the inherited previous optimum,
    /// so the latter was kept.
    pub inherited: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveTrace {
    pub measure: RiskMeasure,
    pub records: Vec<IterationRecord>,
    pub converged: bool,
    pub synthetic_count: usize,
}

impl AdaptiveTrace {
    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }

    pub fn final_rate(&self) -> Option<f64> {
        self.last().map(|r| r.rate)
    }

    pub fn risks(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.risk).collect()
    }
}

pub fn synthetic_label(k: usize) -> String {
    format!("SYN_{k}")
}

/// Append `Σᵢ wᵢ r[t][i]` as a new column named `label`.
pub fn append_synthetic(panel: &ReturnPanel, weights: &PortfolioWeights, label: &str) -> Result<ReturnPanel> {
    if weights.weights.len() != panel.n_assets() || weights.universe != panel.assets {
        return Err(Error::DimensionMismatch(format!(
            "weights over {} assets, panel has {}",
            weights.weights.len(),
            panel.n_assets()
        )));
    }
    if panel.assets.iter().any(|a| a == label) {
        return Err(Error::DuplicateLabel(label.to_string()));
    }
    let synth = portfolio_returns(&panel.returns, &weights.weights);
    let mut assets = panel.assets.clone();
    assets.push(label.to_string());
    Ok(ReturnPanel {
        dates: panel.dates.clone(),
        assets,
        returns: append_column(&panel.returns, &synth),
        calendar: panel.calendar,
    })
}

fn append_column(m: &DMatrix<f64>, col: &DVector<f64>) -> DMatrix<f64> {
    let n = m.ncols();
    let mut out = m.clone().insert_column(n, 0.0);
    out.set_column(n, col);
    out
}

fn unit_on_last(universe: &[String]) -> PortfolioWeights {
    let n = universe.len();
    let mut w = vec![0.0; n];
    w[n - 1] = 1.0;
    PortfolioWeights {
        weights: w,
        universe: universe.to_vec(),
        long_only: true,
        ridge_applied: false,
    }
}

fn at(iteration: usize) -> impl Fn(Error) -> Error {
    move |e| Error::AtIteration {
        iteration,
        source: Box::new(e),
    }
}

/// Adaptive minimum-variance loop over historical returns.
pub fn amvp_run(panel: &ReturnPanel, config: &AdaptiveConfig) -> Result<AdaptiveTrace> {
    config.validate()?;
    if panel.n_assets() < 2 {
        return Err(Error::InvalidParameter("need at least 2 assets".into()));
    }
    let mut current = panel.clone();
    let mut records: Vec<IterationRecord> = Vec::new();
    let mut converged = false;

    for k in 0..=config.max_iterations {
        let moments = estimate_moments(&current).map_err(at(k))?;
        let mut weights = mvp_constrained(&moments).map_err(at(k))?;
        let mut risk = portfolio_variance(&weights, &moments).map_err(at(k))?;
        let mut inherited = false;
        if k > 0 {
            let last = moments.n_assets() - 1;
            let inherited_risk = moments.sigma[(last, last)].max(0.0);
            if risk > inherited_risk {
                let ridge = weights.ridge_applied;
                weights = unit_on_last(&current.assets);
                weights.ridge_applied = ridge;
                risk = inherited_risk;
                inherited = true;
            }
        }
        let rate = weights.expected_return(&moments.mu);
        let prev_risk = records.last().map(|r| r.risk);
        records.push(IterationRecord {
            iteration: k,
            universe_size: current.n_assets(),
            mean_returns: moments.mu.iter().copied().collect(),
            ridge_applied: weights.ridge_applied,
            weights,
            risk,
            rate,
            inherited,
        });
        if let Some(prev) = prev_risk {
            if (prev - risk).abs() < config.epsilon {
                converged = true;
                break;
            }
        }
        if k == config.max_iterations {
            break;
        }
        let w = &records.last().expect("just pushed").weights;
        current = append_synthetic(&current, w, &synthetic_label(k + 1)).map_err(at(k))?;
    }

    let synthetic_count = records.len() - 1;
    Ok(AdaptiveTrace {
        measure: RiskMeasure::Variance,
        records,
        converged,
        synthetic_count,
    })
}

/// Adaptive minimum-CVaR loop over an `S x N` scenario matrix.
pub fn amcvarp_run(scenarios: &DMatrix<f64>, assets: &[String], config: &AdaptiveConfig) -> Result<AdaptiveTrace> {
    config.validate()?;
    if scenarios.nrows() < 2 {
        return Err(Error::TooFewRows {
            needed: 2,
            found: scenarios.nrows(),
        });
    }
    if assets.len() != scenarios.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "{} labels for {} scenario columns",
            assets.len(),
            scenarios.ncols()
        )));
    }
    let mut current = scenarios.clone();
    let mut universe = assets.to_vec();
    let mut records: Vec<IterationRecord> = Vec::new();
    let mut converged = false;

    for k in 0..=config.max_iterations {
        let moments = estimate_moments_matrix(&current, &universe).map_err(at(k))?;
        let sol = min_cvar_lp(&current, &universe, config.alpha).map_err(at(k))?;
        let mut weights = sol.weights;
        let mut risk = sol.cvar;
        let mut inherited = false;
        if k > 0 {
            let last: Vec<f64> = current.column(current.ncols() - 1).iter().copied().collect();
            let (_, inherited_risk) = cvar_of_returns(&last, config.alpha);
            if risk > inherited_risk {
                weights = unit_on_last(&universe);
                risk = inherited_risk;
                inherited = true;
            }
        }
        let rate = weights.expected_return(&moments.mu);
        let prev_risk = records.last().map(|r| r.risk);
        records.push(IterationRecord {
            iteration: k,
            universe_size: universe.len(),
            mean_returns: moments.mu.iter().copied().collect(),
            ridge_applied: false,
            weights,
            risk,
            rate,
            inherited,
        });
        if let Some(prev) = prev_risk {
            if (prev - risk).abs() < config.epsilon {
                converged = true;
                break;
            }
        }
        if k == config.max_iterations {
            break;
        }
        let label = synthetic_label(k + 1);
        if universe.contains(&label) {
            return Err(at(k)(Error::DuplicateLabel(label)));
        }
        let synth = portfolio_returns(&current, &records.last().expect("just pushed").weights.weights);
        current = append_column(&current, &synth);
        universe.push(label);
    }

    let synthetic_count = records.len() - 1;
    Ok(AdaptiveTrace {
        measure: RiskMeasure::Cvar,
        records,
        converged,
        synthetic_count,
    })
}

/// Final per-period rate compounded over `factor` periods.
pub fn static_rate(trace: &AdaptiveTrace, factor: u32) -> Result<f64> {
    let rate = trace
        .final_rate()
        .ok_or_else(|| Error::InvalidParameter("empty trace".into()))?;
    Ok(annualize(rate, factor))
}

pub fn annualize(rate: f64, factor: u32) -> f64 {
    (1.0 + rate).powi(factor as i32) - 1.0
}

/// `iteration,universe_size,risk,rate,ridge_applied`
pub fn write_trace_csv<W: Write>(trace: &AdaptiveTrace, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["iteration", "universe_size", "risk", "rate", "ridge_applied"])?;
    for r in &trace.records {
        w.write_record([
            r.iteration.to_string(),
            r.universe_size.to_string(),
            fmt_sig(r.risk, 12),
            fmt_sig(r.rate, 12),
            r.ridge_applied.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `asset,weight` for one iteration.
pub fn write_weights_csv<W: Write>(record: &IterationRecord, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["asset", "weight"])?;
    for (a, x) in record.weights.universe.iter().zip(&record.weights.weights) {
        w.write_record([a.clone(), fmt_sig(*x, 12)])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Calendar;
    use chrono::NaiveDate;

    fn panel(cols: Vec<Vec<f64>>) -> ReturnPanel {
        let t = cols[0].len();
        let start = NaiveDate::from_ymd_opt(2024, 1, 1).unwrap();
        ReturnPanel::new(
            (0..t).map(|i| start + chrono::Days::new(i as u64)).collect(),
            (0..cols.len()).map(|i| format!("A{i}")).collect(),
            DMatrix::from_fn(t, cols.len(), |i, j| cols[j][i]),
            Calendar::Trading252,
        )
        .unwrap()
    }

    #[test]
    fn append_projection_and_average() {
        let p = panel(vec![vec![0.02, 0.01, -0.03], vec![0.04, 0.0, 0.01]]);
        let w = PortfolioWeights::new(vec![1.0, 0.0], p.assets.clone()).unwrap();
        let q = append_synthetic(&p, &w, "SYN_1").unwrap();
        assert_eq!(q.column(2), p.column(0));
        assert_eq!(q.assets.last().unwrap(), "SYN_1");

        let w = PortfolioWeights::new(vec![0.5, 0.5], p.assets.clone()).unwrap();
        let q = append_synthetic(&p, &w, "S").unwrap();
        assert!((q.returns[(0, 2)] - 0.03).abs() < 1e-16);

        assert!(matches!(append_synthetic(&p, &w, "A0"), Err(Error::DuplicateLabel(_))));
        let bad = PortfolioWeights::new(vec![1.0], vec!["A0".into()]).unwrap();
        assert!(matches!(append_synthetic(&p, &bad, "S"), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn identical_columns_converge_immediately() {
        let col = vec![0.01, -0.02, 0.015, 0.003, -0.007, 0.02];
        let p = panel(vec![col.clone(), col]);
        let cfg = AdaptiveConfig {
            epsilon: 1e-6,
            ..AdaptiveConfig::default()
        };
        let trace = amvp_run(&p, &cfg).unwrap();
        assert!(trace.converged);
        assert_eq!(trace.records.len(), 2);
        assert_eq!(trace.synthetic_count, 1);
        assert!((trace.records[0].risk - trace.records[1].risk).abs() < 1e-18);
    }

    #[test]
    fn config_validation() {
        let p = panel(vec![vec![0.01, 0.02, 0.03], vec![0.0, 0.01, -0.01]]);
        for cfg in [
            AdaptiveConfig { epsilon: 0.0, ..Default::default() },
            AdaptiveConfig { max_iterations: 0, ..Default::default() },
            AdaptiveConfig { alpha: 1.0, ..Default::default() },
        ] {
            assert!(matches!(amvp_run(&p, &cfg), Err(Error::InvalidParameter(_))));
        }
    }

    #[test]
    fn static_rate_compounds() {
        let mk = |rate: f64| AdaptiveTrace {
            measure: RiskMeasure::Variance,
            records: vec![IterationRecord {
                iteration: 0,
                universe_size: 1,
                weights: PortfolioWeights::new(vec![1.0], vec!["A".into()]).unwrap(),
                mean_returns: vec![rate],
                risk: 0.0,
                rate,
                ridge_applied: false,
                inherited: false,
            }],
            converged: true,
            synthetic_count: 0,
        };
        assert_eq!(static_rate(&mk(0.0), 252).unwrap(), 0.0);
        let oracle = (0..252).fold(1.0_f64, |acc, _| acc * 1.001) - 1.0;
        let got = static_rate(&mk(0.001), 252).unwrap();
        assert!((got - oracle).abs() < 1e-12);
        assert!((got - 0.2864).abs() < 1e-3);
        let got = static_rate(&mk(-0.0005), 365).unwrap();
        let oracle = (0..365).fold(1.0_f64, |acc, _| acc * 0.9995) - 1.0;
        assert!((got - oracle).abs() < 1e-12);
        assert!((got + 0.1669).abs() < 1e-3);

        let empty = AdaptiveTrace {
            records: vec![],
            ..mk(0.0)
        };
        assert!(static_rate(&empty, 252).is_err());
    }
}
