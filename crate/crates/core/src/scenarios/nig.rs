//! Normal inverse Gaussian innovations: method-of-moments fit and sampling.

use rand::Rng;
use rand_distr::{Distribution, InverseGaussian, StandardNormal};
use serde::{Deserialize, Serialize};

use super::stream_rng;
use crate::error::{Error, Result};
use crate::stats::balanced_sum;

/// `δγ` used for the near-Gaussian fallback (excess kurtosis `3/δγ`).
const NEAR_GAUSSIAN_ZETA: f64 = 1e4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NigParams {
    pub alpha_tail: f64,
    pub beta_skew: f64,
    pub mu_loc: f64,
    pub delta_scale: f64,
}

impl NigParams {
    pub fn new(alpha_tail: f64, beta_skew: f64, mu_loc: f64, delta_scale: f64) -> Result<Self> {
        let p = Self {
            alpha_tail,
            beta_skew,
            mu_loc,
            delta_scale,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha_tail > 0.0 && self.beta_skew.abs() < self.alpha_tail) {
            return Err(Error::InvalidParameter(format!(
                "NIG needs |beta| < alpha, got alpha {} beta {}",
                self.alpha_tail, self.beta_skew
            )));
        }
        if !(self.delta_scale > 0.0) || !self.mu_loc.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "NIG needs delta > 0, got {}",
                self.delta_scale
            )));
        }
        Ok(())
    }

    /// Zero-mean, unit-variance, essentially Gaussian.
    pub fn gaussian_limit() -> Self {
        Self {
            alpha_tail: NEAR_GAUSSIAN_ZETA,
            beta_skew: 0.0,
            mu_loc: 0.0,
            delta_scale: NEAR_GAUSSIAN_ZETA,
        }
    }

    fn gamma(&self) -> f64 {
        (self.alpha_tail * self.alpha_tail - self.beta_skew * self.beta_skew).sqrt()
    }

    pub fn mean(&self) -> f64 {
        self.mu_loc + self.delta_scale * self.beta_skew / self.gamma()
    }

    pub fn variance(&self) -> f64 {
        self.delta_scale * self.alpha_tail * self.alpha_tail / self.gamma().powi(3)
    }

    pub fn skewness(&self) -> f64 {
        3.0 * self.beta_skew / (self.alpha_tail * (self.delta_scale * self.gamma()).sqrt())
    }

    pub fn excess_kurtosis(&self) -> f64 {
        let r = self.beta_skew / self.alpha_tail;
        3.0 * (1.0 + 4.0 * r * r) / (self.delta_scale * self.gamma())
    }

    pub fn sample_one<R: Rng + ?Sized>(&self, mixing: &InverseGaussian<f64>, rng: &mut R) -> f64 {
        let z: f64 = mixing.sample(rng);
        let n: f64 = rng.sample(StandardNormal);
        self.mu_loc + self.beta_skew * z + z.sqrt() * n
    }

    /// Mixing law `IG(mean δ/γ, shape δ²)`.
    pub fn mixing(&self) -> InverseGaussian<f64> {
        InverseGaussian::new(self.delta_scale / self.gamma(), self.delta_scale * self.delta_scale)
            .expect("validated NIG parameters give a valid inverse Gaussian")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NigFit {
    pub params: NigParams,
    /// Sample moments were outside the NIG region (or indistinguishable
    /// from Gaussian) and a near-Gaussian fit was used instead.
    pub fallback: bool,
    pub warning: Option<String>,
}

/// Sample mean, variance (divisor n-1), skewness and excess kurtosis.
pub fn sample_moments(x: &[f64]) -> (f64, f64, f64, f64) {
    let n = x.len() as f64;
    let m = balanced_sum(x) / n;
    let dev: Vec<f64> = x.iter().map(|v| v - m).collect();
    let m2 = balanced_sum(&dev.iter().map(|d| d * d).collect::<Vec<_>>()) / n;
    let m3 = balanced_sum(&dev.iter().map(|d| d * d * d).collect::<Vec<_>>()) / n;
    let m4 = balanced_sum(&dev.iter().map(|d| d * d * d * d).collect::<Vec<_>>()) / n;
    let var = m2 * n / (n - 1.0);
    (m, var, m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
}

/// Method-of-moments NIG fit.
///
/// With `ρ = β/α` and `ζ = δγ`: skewness² = 9ρ²/ζ and excess kurtosis
/// k = 3(1 + 4ρ²)/ζ, so ρ² = s²/(3k − 4s²), which needs k > 5s²/3.
/// Kurtosis below that bound, or not significantly above zero
/// (k < 2·√(24/n)), falls back to a near-Gaussian fit with the sample
/// mean and variance.
pub fn fit_nig(residuals: &[f64]) -> Result<NigFit> {
    let n = residuals.len();
    if n < 100 {
        return Err(Error::TooFewRows { needed: 100, found: n });
    }
    if residuals.iter().any(|v| !v.is_finite()) {
        return Err(Error::Degenerate("non-finite residuals".into()));
    }
    let (m, v, s, k) = sample_moments(residuals);
    if !(v > 0.0) || residuals.iter().all(|x| *x == residuals[0]) {
        return Err(Error::Degenerate("zero variance".into()));
    }

    let kurtosis_noise = 2.0 * (24.0 / n as f64).sqrt();
    let feasible = k > 5.0 * s * s / 3.0 && k > kurtosis_noise;
    let (rho, zeta, warning) = if feasible {
        let rho2 = s * s / (3.0 * k - 4.0 * s * s);
        (s.signum() * rho2.sqrt(), 3.0 * (1.0 + 4.0 * rho2) / k, None)
    } else {
        let msg = format!(
            "excess kurtosis {k:.4} with skewness {s:.4} is outside the NIG region or not significant; using near-Gaussian fit"
        );
        (0.0, NEAR_GAUSSIAN_ZETA, Some(msg))
    };
    // zero skewness must give beta exactly zero
    let rho = if s == 0.0 { 0.0 } else { rho };

    let one_minus = 1.0 - rho * rho;
    let gamma = (zeta / (v * one_minus)).sqrt();
    let alpha = gamma / one_minus.sqrt();
    let beta = rho * alpha;
    let delta = zeta / gamma;
    let mu = m - delta * beta / gamma;
    let params = NigParams::new(alpha, beta, mu, delta)?;
    Ok(NigFit {
        params,
        fallback: !feasible,
        warning,
    })
}

/// `n` draws via the normal variance-mean mixture; deterministic in `seed`.
pub fn nig_sample(params: &NigParams, n: usize, seed: u64) -> Result<Vec<f64>> {
    params.validate()?;
    let mut rng = stream_rng(seed, 0, 0);
    let mixing = params.mixing();
    Ok((0..n).map(|_| params.sample_one(&mixing, &mut rng)).collect())
}
