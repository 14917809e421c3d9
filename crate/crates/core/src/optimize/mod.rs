//! Moment estimation, minimum-variance portfolios, efficient frontiers,
//! and the minimum-CVaR linear program.

mod cvar;
pub mod qp;
pub mod simplex;

use std::io::Write;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::ReturnPanel;
use crate::error::{Error, Result};
use crate::stats::fmt_sig;

pub use cvar::{cvar_of_returns, min_cvar_lp, portfolio_returns, CvarSolution};

/// Condition estimate above which the covariance matrix is ridged.
pub const CONDITION_CAP: f64 = 1e12;
/// Ridge size relative to the average variance `trace(Σ)/N`.
pub const RIDGE_SCALE: f64 = 1e-10;
pub const DEFAULT_FRONTIER_POINTS: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct MomentEstimate {
    pub assets: Vec<String>,
    pub mu: DVector<f64>,
    pub sigma: DMatrix<f64>,
    pub n_obs: usize,
}

impl MomentEstimate {
    pub fn n_assets(&self) -> usize {
        self.mu.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioWeights {
    pub weights: Vec<f64>,
    pub universe: Vec<String>,
    /// False when some weight is negative (closed-form solutions only).
    pub long_only: bool,
    /// A ridge was added to the covariance before solving.
    pub ridge_applied: bool,
}

impl PortfolioWeights {
    pub fn new(weights: Vec<f64>, universe: Vec<String>) -> Result<Self> {
        if weights.len() != universe.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} weights for {} assets",
                weights.len(),
                universe.len()
            )));
        }
        let long_only = weights.iter().all(|w| *w >= -1e-12);
        Ok(Self {
            weights,
            universe,
            long_only,
            ridge_applied: false,
        })
    }

    pub fn as_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.weights)
    }

    pub fn expected_return(&self, mu: &DVector<f64>) -> f64 {
        self.weights.iter().zip(mu.iter()).map(|(w, m)| w * m).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierPoint {
    pub target_return: f64,
    pub risk: f64,
    pub weights: PortfolioWeights,
    pub feasible: bool,
}

/// Column means and the sample covariance (divisor T-1) of a `T x N` matrix.
pub fn estimate_moments_matrix(returns: &DMatrix<f64>, assets: &[String]) -> Result<MomentEstimate> {
    let (t, n) = returns.shape();
    if t < 2 {
        return Err(Error::TooFewRows { needed: 2, found: t });
    }
    if assets.len() != n {
        return Err(Error::DimensionMismatch(format!("{} labels for {n} columns", assets.len())));
    }
    let mu = DVector::from_iterator(n, returns.column_iter().map(|c| c.sum() / t as f64));
    let mut centered = returns.clone();
    for (j, mut col) in centered.column_iter_mut().enumerate() {
        col.add_scalar_mut(-mu[j]);
    }
    let raw = centered.transpose() * &centered / (t - 1) as f64;
    let sigma = (&raw + raw.transpose()) * 0.5;
    Ok(MomentEstimate {
        assets: assets.to_vec(),
        mu,
        sigma,
        n_obs: t,
    })
}

pub fn estimate_moments(panel: &ReturnPanel) -> Result<MomentEstimate> {
    estimate_moments_matrix(&panel.returns, &panel.assets)
}

/// Ratio of extreme eigenvalues; infinite when the smallest is not positive.
pub fn condition_estimate(sigma: &DMatrix<f64>) -> f64 {
    let eig = SymmetricEigen::new(sigma.clone());
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if min <= 0.0 || max <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Add `λI` with `λ = 1e-10 · trace(Σ)/N` when the condition estimate
/// exceeds the cap. Returns the (possibly ridged) matrix and whether the
/// ridge fired.
pub fn regularize(sigma: &DMatrix<f64>) -> (DMatrix<f64>, bool) {
    if condition_estimate(sigma) <= CONDITION_CAP {
        return (sigma.clone(), false);
    }
    let n = sigma.nrows();
    let lambda = RIDGE_SCALE * sigma.trace() / n as f64;
    let mut ridged = sigma.clone();
    for i in 0..n {
        ridged[(i, i)] += lambda;
    }
    (ridged, true)
}

/// `w = Σ⁻¹1 / (1ᵀΣ⁻¹1)`; negatives are allowed and flagged via `long_only`.
pub fn mvp_closed_form(moments: &MomentEstimate) -> Result<PortfolioWeights> {
    let (sigma, ridged) = regularize(&moments.sigma);
    let condition = condition_estimate(&sigma);
    if condition > CONDITION_CAP {
        return Err(Error::Singular { condition });
    }
    let n = moments.n_assets();
    let ones = DVector::from_element(n, 1.0);
    let x = sigma
        .clone()
        .cholesky()
        .map(|c| c.solve(&ones))
        .or_else(|| sigma.clone().lu().solve(&ones))
        .ok_or(Error::Singular { condition })?;
    let denom = x.sum();
    let mut w = PortfolioWeights::new((x / denom).iter().copied().collect(), moments.assets.clone())?;
    w.ridge_applied = ridged;
    Ok(w)
}

fn qp_iteration_cap(n: usize) -> usize {
    20 * n + 200
}

/// Long-only minimum variance on the simplex `{w ≥ 0, Σw = 1}`.
pub fn mvp_constrained(moments: &MomentEstimate) -> Result<PortfolioWeights> {
    let n = moments.n_assets();
    if n == 0 {
        return Err(Error::InvalidParameter("empty universe".into()));
    }
    let (sigma, ridged) = regularize(&moments.sigma);
    let scale = sigma.trace() / n as f64;
    if !(scale > 0.0) {
        // Σ = 0: every portfolio is riskless.
        let mut w = PortfolioWeights::new(vec![1.0 / n as f64; n], moments.assets.clone())?;
        w.ridge_applied = ridged;
        return Ok(w);
    }

    let seed = match mvp_closed_form(moments) {
        Ok(w) if w.long_only => {
            let mut w = w;
            w.long_only = true;
            return Ok(w);
        }
        Ok(w) => qp::project_to_simplex(&w.as_vector()),
        Err(_) => DVector::from_element(n, 1.0 / n as f64),
    };

    let h = &sigma / scale;
    let a = DMatrix::from_element(1, n, 1.0);
    let b = DVector::from_element(1, 1.0);
    let sol = qp::solve_nonneg_qp(&h, &a, &b, seed, qp_iteration_cap(n))?;
    let mut x = sol.x;
    x /= x.sum();
    let mut w = PortfolioWeights::new(x.iter().copied().collect(), moments.assets.clone())?;
    w.ridge_applied = ridged;
    Ok(w)
}

/// `wᵀΣw`, clamped at zero against round-off.
pub fn portfolio_variance(weights: &PortfolioWeights, moments: &MomentEstimate) -> Result<f64> {
    let n = moments.n_assets();
    if weights.weights.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} weights for a {n}-asset covariance",
            weights.weights.len()
        )));
    }
    let w = weights.as_vector();
    Ok((w.transpose() * &moments.sigma * &w)[(0, 0)].max(0.0))
}

/// Long-only frontier on a uniform target grid from the constrained MVP
/// return up to `max(μ)`.
pub fn efficient_frontier(moments: &MomentEstimate, n_points: usize) -> Result<Vec<FrontierPoint>> {
    if n_points < 2 {
        return Err(Error::InvalidParameter("n_points must be at least 2".into()));
    }
    let n = moments.n_assets();
    let mvp = mvp_constrained(moments)?;
    let w_mvp = mvp.as_vector();
    let r_mvp = mvp.expected_return(&moments.mu);
    let (top, r_max) = moments
        .mu
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, m)| if *m > acc.1 { (i, *m) } else { acc });
    let r_max = r_max.max(r_mvp);

    let (sigma, ridged) = regularize(&moments.sigma);
    let scale = (sigma.trace() / n as f64).max(f64::MIN_POSITIVE);
    let h = &sigma / scale;
    let mu_mean = moments.mu.mean();
    let mu_spread = moments.mu.iter().map(|m| (m - mu_mean).abs()).fold(0.0, f64::max);
    let mu_scale = if mu_spread > 0.0 { mu_spread } else { 1.0 };
    let mut a = DMatrix::from_element(2, n, 1.0);
    for j in 0..n {
        a[(1, j)] = (moments.mu[j] - mu_mean) / mu_scale;
    }

    let targets: Vec<f64> = (0..n_points)
        .map(|k| r_mvp + (r_max - r_mvp) * k as f64 / (n_points - 1) as f64)
        .collect();

    let points = targets
        .par_iter()
        .enumerate()
        .map(|(k, &target)| {
            let infeasible = || FrontierPoint {
                target_return: target,
                risk: f64::NAN,
                weights: PortfolioWeights {
                    weights: vec![f64::NAN; n],
                    universe: moments.assets.clone(),
                    long_only: false,
                    ridge_applied: ridged,
                },
                feasible: false,
            };
            let x = if k == 0 || r_max - r_mvp <= 0.0 {
                w_mvp.clone()
            } else {
                let theta = ((target - r_mvp) / (r_max - r_mvp)).clamp(0.0, 1.0);
                let mut x0 = &w_mvp * (1.0 - theta);
                x0[top] += theta;
                let b = DVector::from_vec(vec![1.0, (target - mu_mean) / mu_scale]);
                match qp::solve_nonneg_qp(&h, &a, &b, x0, qp_iteration_cap(n)) {
                    Ok(sol) => sol.x,
                    Err(_) => return infeasible(),
                }
            };
            let mut w = match PortfolioWeights::new(x.iter().copied().collect(), moments.assets.clone()) {
                Ok(w) => w,
                Err(_) => return infeasible(),
            };
            w.ridge_applied = ridged;
            let var = portfolio_variance(&w, moments).unwrap_or(f64::NAN);
            FrontierPoint {
                target_return: target,
                risk: var.sqrt(),
                weights: w,
                feasible: var.is_finite(),
            }
        })
        .collect();
    Ok(points)
}

/// `target_return,risk,feasible,w_<asset>...` with 8 significant digits.
pub fn write_frontier_csv<W: Write>(points: &[FrontierPoint], universe: &[String], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["target_return".to_string(), "risk".into(), "feasible".into()];
    header.extend(universe.iter().map(|a| format!("w_{a}")));
    w.write_record(&header)?;
    for p in points {
        let mut rec = vec![fmt_sig(p.target_return, 8), fmt_sig(p.risk, 8), p.feasible.to_string()];
        rec.extend(p.weights.weights.iter().map(|x| fmt_sig(*x, 8)));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
