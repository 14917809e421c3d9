//! ARFIMA(1,d,1) mean equation fitted by conditional sum of squares:
//! `(1 − φL)(1 − L)^d (z_t − c) = (1 + θL) ε_t`.

use serde::{Deserialize, Serialize};

use super::fracdiff::{convolve_causal, frac_diff_weights};
use super::neldermead::{self, from_interval, to_interval, Options};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArfimaFit {
    pub mean_const: f64,
    pub d: f64,
    pub phi: f64,
    pub theta: f64,
    pub css: f64,
    pub residuals: Vec<f64>,
    pub converged: bool,
}

fn arma_filter(u: &[f64], phi: f64, theta: f64) -> Vec<f64> {
    let mut eps = Vec::with_capacity(u.len());
    let mut u_prev = 0.0;
    let mut e_prev = 0.0;
    for &ut in u {
        let e = ut - phi * u_prev - theta * e_prev;
        eps.push(e);
        u_prev = ut;
        e_prev = e;
    }
    eps
}

/// Innovations implied by the given parameters, zero pre-sample values.
pub fn arfima_residuals(z: &[f64], mean_const: f64, d: f64, phi: f64, theta: f64, lags: usize) -> Vec<f64> {
    let centered: Vec<f64> = z.iter().map(|v| v - mean_const).collect();
    let w = frac_diff_weights(d, lags.max(1));
    arma_filter(&convolve_causal(&centered, &w), phi, theta)
}

const D_BOUND: f64 = 0.49;
const ARMA_BOUND: f64 = 0.98;

fn unpack(u: &[f64]) -> (f64, f64, f64) {
    (
        to_interval(u[0], -D_BOUND, D_BOUND),
        to_interval(u[1], -ARMA_BOUND, ARMA_BOUND),
        to_interval(u[2], -ARMA_BOUND, ARMA_BOUND),
    )
}

/// Residuals are linear in the mean constant, so it is profiled out:
/// `ε(c) = ε(0) − c·ε₁` with `ε₁` the response to a unit series.
fn profiled(z: &[f64], ones: &[f64], d: f64, phi: f64, theta: f64, lags: usize) -> (f64, f64) {
    let w = frac_diff_weights(d, lags.max(1));
    let e0 = arma_filter(&convolve_causal(z, &w), phi, theta);
    let e1 = arma_filter(&convolve_causal(ones, &w), phi, theta);
    let num: f64 = e0.iter().zip(&e1).map(|(a, b)| a * b).sum();
    let den: f64 = e1.iter().map(|b| b * b).sum();
    let c = if den > 0.0 { num / den } else { 0.0 };
    let css = e0.iter().zip(&e1).map(|(a, b)| (a - c * b).powi(2)).sum();
    (c, css)
}

pub fn fit_arfima(z: &[f64], lags: usize) -> Result<ArfimaFit> {
    let n = z.len();
    if n < 3 {
        return Err(Error::TooFewRows { needed: 3, found: n });
    }
    let ones = vec![1.0; n];
    let objective = |u: &[f64]| {
        let (d, phi, theta) = unpack(u);
        profiled(z, &ones, d, phi, theta, lags).1
    };
    let starts = [(0.0, 0.0, 0.0), (0.25, 0.1, -0.1), (-0.1, 0.3, 0.1)];
    let mut best: Option<neldermead::Minimum> = None;
    for (d, phi, theta) in starts {
        let u0 = [
            from_interval(d, -D_BOUND, D_BOUND),
            from_interval(phi, -ARMA_BOUND, ARMA_BOUND),
            from_interval(theta, -ARMA_BOUND, ARMA_BOUND),
        ];
        let m = neldermead::minimize_with_restart(
            objective,
            &u0,
            Options {
                max_evals: 1200,
                f_tol: 1e-11,
                x_tol: 1e-7,
                initial_step: 0.5,
            },
        );
        if best.as_ref().is_none_or(|b| m.value < b.value) {
            best = Some(m);
        }
    }
    let best = best.expect("at least one start");
    if !best.value.is_finite() {
        return Err(Error::Estimation {
            reason: "ARFIMA sum of squares is not finite".into(),
            best_objective: best.value,
        });
    }
    let (d, phi, theta) = unpack(&best.x);
    let (c, css) = profiled(z, &ones, d, phi, theta, lags);
    Ok(ArfimaFit {
        mean_const: c,
        d,
        phi,
        theta,
        css,
        residuals: arfima_residuals(z, c, d, phi, theta, lags),
        converged: best.converged,
    })
}
