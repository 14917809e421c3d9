//! FIGARCH(1,d,1) conditional variance and Gaussian quasi-likelihood fit.
//!
//! `σ²_t = ω/(1−β) + λ(L) ε²_t` with
//! `λ(L) = 1 − (1 − φL)(1 − L)^d / (1 − βL)`, truncated at a fixed lag.

use serde::{Deserialize, Serialize};

use super::fracdiff::frac_diff_weights;
use super::neldermead::{self, from_interval, to_interval, Options};
use crate::error::{Error, Result};

/// `λ_0..λ_lags` (with `λ_0 = 0`).
pub fn arch_weights(beta: f64, phi: f64, d: f64, lags: usize) -> Vec<f64> {
    let pi = frac_diff_weights(d, lags + 1);
    let mut lambda = vec![0.0; lags + 1];
    let mut c_prev = 1.0; // c_0
    for j in 1..=lags {
        let a = pi[j] - phi * pi[j - 1];
        let c = a + beta * c_prev;
        lambda[j] = -c;
        c_prev = c;
    }
    lambda
}

pub(crate) fn weights_nonnegative(beta: f64, phi: f64, d: f64, lags: usize) -> bool {
    arch_weights(beta, phi, d, lags).iter().all(|l| *l >= -1e-12)
}

/// Conditional variances for squared innovations `eps2`; pre-sample
/// squared innovations are set to `presample`.
pub fn conditional_variance(eps2: &[f64], omega: f64, beta: f64, lambda: &[f64], presample: f64) -> Vec<f64> {
    let lags = lambda.len() - 1;
    let base = omega / (1.0 - beta);
    // tail[j] = Σ_{i>j} λ_i, the weight still falling on pre-sample values
    let mut tail = vec![0.0; lags + 1];
    for j in (0..lags).rev() {
        tail[j] = tail[j + 1] + lambda[j + 1];
    }
    (0..eps2.len())
        .map(|t| {
            let inside = t.min(lags);
            let mut acc = 0.0;
            for j in 1..=inside {
                acc += lambda[j] * eps2[t - j];
            }
            base + acc + presample * tail[inside]
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FigarchFit {
    pub omega: f64,
    pub beta: f64,
    pub phi: f64,
    pub d: f64,
    /// Gaussian quasi log-likelihood at the optimum.
    pub loglik: f64,
    pub converged: bool,
    /// `d` ended within 1e-3 of the edge of `[0, 1)`.
    pub boundary: bool,
}

const D_MAX: f64 = 0.9999;
const BETA_MAX: f64 = 0.98;

fn unpack(u: &[f64], scale: f64) -> (f64, f64, f64, f64) {
    let omega = scale * u[0].exp();
    let d = to_interval(u[1], 0.0, D_MAX);
    let beta = to_interval(u[2], 0.0, BETA_MAX);
    let phi = to_interval(u[3], -0.9, 0.98);
    (omega, beta, phi, d)
}

fn neg_quasi_loglik(eps2: &[f64], omega: f64, beta: f64, phi: f64, d: f64, lags: usize, presample: f64) -> f64 {
    let lambda = arch_weights(beta, phi, d, lags);
    let neg = lambda.iter().map(|l| (-l).max(0.0)).sum::<f64>();
    if neg > 1e-12 {
        return f64::INFINITY;
    }
    let var = conditional_variance(eps2, omega, beta, &lambda, presample);
    let mut total = 0.0;
    for (e2, s2) in eps2.iter().zip(&var) {
        if !(*s2 > 0.0) {
            return f64::INFINITY;
        }
        total += s2.ln() + e2 / s2;
    }
    0.5 * total
}

/// Fit FIGARCH(1,d,1) to mean-zero innovations by Gaussian QML.
pub fn fit_figarch(eps: &[f64], lags: usize) -> Result<FigarchFit> {
    let n = eps.len();
    let eps2: Vec<f64> = eps.iter().map(|e| e * e).collect();
    let presample = eps2.iter().sum::<f64>() / n as f64;
    if !(presample > 0.0) || !presample.is_finite() {
        return Err(Error::Degenerate("innovations have zero variance".into()));
    }
    let objective = |u: &[f64]| {
        let (omega, beta, phi, d) = unpack(u, presample);
        neg_quasi_loglik(&eps2, omega, beta, phi, d, lags, presample)
    };

    // (d, beta, phi) starting points, all inside the non-negativity region
    let starts = [(0.3, 0.3, 0.1), (0.1, 0.1, 0.05), (0.6, 0.5, 0.1)];
    let mut best: Option<neldermead::Minimum> = None;
    for (d, beta, phi) in starts {
        let lambda = arch_weights(beta, phi, d, lags);
        let captured: f64 = lambda.iter().sum();
        let omega = (presample * (1.0 - captured) * (1.0 - beta)).max(1e-6 * presample);
        let u0 = [
            (omega / presample).ln(),
            from_interval(d, 0.0, D_MAX),
            from_interval(beta, 0.0, BETA_MAX),
            from_interval(phi, -0.9, 0.98),
        ];
        let m = neldermead::minimize_with_restart(
            objective,
            &u0,
            Options {
                max_evals: 1500,
                f_tol: 1e-10,
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
            reason: "FIGARCH quasi-likelihood has no finite point".into(),
            best_objective: best.value,
        });
    }
    let (omega, beta, phi, d) = unpack(&best.x, presample);
    Ok(FigarchFit {
        omega,
        beta,
        phi,
        d,
        loglik: -best.value - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln(),
        converged: best.converged,
        boundary: d < 1e-3 || d > D_MAX - 1e-3,
    })
}
