use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::simplex::{self, BoundedLp};
use super::PortfolioWeights;
use crate::error::{Error, Result};

/// Optimality gap accepted between the LP bound and the realised CVaR.
pub const CVAR_GAP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvarSolution {
    pub weights: PortfolioWeights,
    /// The auxiliary threshold `t` (a loss level, i.e. VaR at `alpha`).
    pub var_threshold: f64,
    pub cvar: f64,
    pub alpha: f64,
    /// `cvar` minus the LP dual bound.
    pub gap: f64,
}

pub fn portfolio_returns(scenarios: &DMatrix<f64>, weights: &[f64]) -> DVector<f64> {
    scenarios * DVector::from_column_slice(weights)
}

/// Tail count `(1-α)S`, snapped to an integer when within round-off of one.
fn tail_size(alpha: f64, s: usize) -> f64 {
    let k = (1.0 - alpha) * s as f64;
    let r = k.round();
    if (k - r).abs() <= 1e-9 * k.max(1.0) {
        r
    } else {
        k
    }
}

/// `(t, CVaR)` of a return sample: `min_t t + Σ (−r_s − t)⁺ / ((1−α)S)`,
/// evaluated at the minimising threshold.
pub fn cvar_of_returns(returns: &[f64], alpha: f64) -> (f64, f64) {
    let s = returns.len();
    let mut losses: Vec<f64> = returns.iter().map(|r| -r).collect();
    losses.sort_by(|a, b| b.total_cmp(a));
    let k = tail_size(alpha, s);
    let rank = (k.ceil() as usize).clamp(1, s);
    let t = losses[rank - 1];
    let excess: f64 = losses.iter().map(|l| (l - t).max(0.0)).sum();
    (t, t + excess / k)
}

/// Long-only minimum CVaR over `S x N` scenario returns.
///
/// Solved through the LP dual, which has `N + 1` rows:
/// `max ν  s.t.  Σλ = 1, 0 ≤ λ_s ≤ 1/((1−α)S),  ν ≤ −Σ_s λ_s R_si  ∀i`.
/// The primal weights are read off the simplex multipliers.
pub fn min_cvar_lp(scenarios: &DMatrix<f64>, universe: &[String], alpha: f64) -> Result<CvarSolution> {
    let (s, n) = scenarios.shape();
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if s < 2 {
        return Err(Error::TooFewRows { needed: 2, found: s });
    }
    if n == 0 || universe.len() != n {
        return Err(Error::DimensionMismatch(format!("{} labels for {n} columns", universe.len())));
    }
    let k = tail_size(alpha, s);
    let cap = 1.0 / k;

    // columns: λ_0..λ_{S-1}, ν, σ_0..σ_{N-1}
    let nu_col = s;
    let slack = |i: usize| s + 1 + i;
    let ncols = s + 1 + n;
    let mut a = DMatrix::zeros(n + 1, ncols);
    for sc in 0..s {
        a[(0, sc)] = 1.0;
        for i in 0..n {
            a[(1 + i, sc)] = scenarios[(sc, i)];
        }
    }
    for i in 0..n {
        a[(1 + i, nu_col)] = 1.0;
        a[(1 + i, slack(i))] = 1.0;
    }
    let mut b = DVector::zeros(n + 1);
    b[0] = 1.0;
    let mut c = DVector::zeros(ncols);
    c[nu_col] = -1.0;
    let mut lower = vec![0.0; ncols];
    let mut upper = vec![cap.min(1.0); ncols];
    lower[nu_col] = f64::NEG_INFINITY;
    upper[nu_col] = f64::INFINITY;
    for i in 0..n {
        upper[slack(i)] = f64::INFINITY;
    }

    // Warm start: the tail of the equal-weight portfolio carries the mass.
    let eq = portfolio_returns(scenarios, &vec![1.0 / n as f64; n]);
    let mut order: Vec<usize> = (0..s).collect();
    order.sort_by(|&x, &y| eq[x].total_cmp(&eq[y]).then(x.cmp(&y)));
    let full = ((1.0 / upper[0]).floor() as usize).min(s - 1);
    let at_upper: Vec<usize> = order[..full].to_vec();
    let frac = order[full];
    let mut lambda = vec![0.0; s];
    for &j in &at_upper {
        lambda[j] = upper[0];
    }
    lambda[frac] = (1.0 - full as f64 * upper[0]).max(0.0);
    let exposure: Vec<f64> = (0..n)
        .map(|i| (0..s).map(|sc| lambda[sc] * scenarios[(sc, i)]).sum())
        .collect();
    let top = (0..n)
        .max_by(|&x, &y| exposure[x].total_cmp(&exposure[y]).then(y.cmp(&x)))
        .unwrap_or(0);
    let mut basis = vec![frac, nu_col];
    basis.extend((0..n).filter(|&i| i != top).map(slack));

    let lp = BoundedLp { a, b, c, lower, upper };
    let sol = simplex::solve(&lp, basis, &at_upper, 50 * (s + n) + 1000)?;
    let bound = -sol.objective;

    let mut w: Vec<f64> = (0..n).map(|i| (-sol.y[1 + i]).max(0.0)).collect();
    let total: f64 = w.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Internal("LP returned no usable portfolio weights".into()));
    }
    w.iter_mut().for_each(|x| *x /= total);

    let port = portfolio_returns(scenarios, &w);
    let (t, cvar) = cvar_of_returns(port.as_slice(), alpha);
    let gap = cvar - bound;
    if gap > CVAR_GAP_TOL * (1.0 + bound.abs()) || gap < -CVAR_GAP_TOL * (1.0 + bound.abs()) {
        return Err(Error::Internal(format!("CVaR LP gap {gap:.3e} exceeds tolerance")));
    }
    Ok(CvarSolution {
        weights: PortfolioWeights::new(w, universe.to_vec())?,
        var_threshold: t,
        cvar,
        alpha,
        gap,
    })
}
