//! Forward-looking scenarios: ARFIMA(1,d,1)-FIGARCH(1,d,1) fitted per asset,
//! simulated with NIG innovations, and tied together with a Gaussian copula
//! on historical rank correlations.

mod arfima;
mod copula;
mod figarch;
mod fracdiff;
pub mod neldermead;
mod nig;
mod simulate;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use arfima::{arfima_residuals, fit_arfima, ArfimaFit};
pub use copula::{gaussian_copula_reorder, spearman_matrix};
pub use figarch::{arch_weights, conditional_variance, fit_figarch, FigarchFit};
pub use fracdiff::{apply_frac_filter, frac_diff_weights};
pub use nig::{fit_nig, nig_sample, sample_moments, NigFit, NigParams};
pub use simulate::{
    build_scenario_panel, build_scenario_panel_with_paths, fit_arfima_figarch, simulate_paths,
    read_scenarios_csv, write_scenarios_csv, ArfimaFigarchFit, AssetProvenance, ScenarioSet,
};

/// Lags kept in the fractional filters and the ARCH(∞) expansion.
pub const TRUNCATION_LAGS: usize = 1000;
/// Periods simulated and discarded before each path.
pub const BURN_IN: usize = 2000;
pub const MIN_FIT_LENGTH: usize = 250;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArfimaFigarchParams {
    pub phi_m: f64,
    pub theta_m: f64,
    pub d_m: f64,
    pub omega: f64,
    pub beta_v: f64,
    pub phi_v: f64,
    pub d_v: f64,
    pub mean_const: f64,
}

impl ArfimaFigarchParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(format!("{what} ({self:?})")));
        if !(self.phi_m.abs() < 1.0) || !(self.theta_m.abs() < 1.0) {
            return bad("|phi_m| and |theta_m| must be < 1");
        }
        if !(self.d_m > -0.5 && self.d_m < 0.5) {
            return bad("d_m must lie in (-0.5, 0.5)");
        }
        if !(self.omega > 0.0) {
            return bad("omega must be > 0");
        }
        if !(self.d_v >= 0.0 && self.d_v < 1.0) {
            return bad("d_v must lie in [0, 1)");
        }
        if !(self.beta_v.abs() < 1.0) || !self.phi_v.is_finite() || !self.mean_const.is_finite() {
            return bad("|beta_v| must be < 1");
        }
        if !figarch::weights_nonnegative(self.beta_v, self.phi_v, self.d_v, TRUNCATION_LAGS) {
            return bad("FIGARCH ARCH(inf) weights must be non-negative");
        }
        Ok(())
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent RNG stream for one (asset, path) work unit.
pub fn stream_rng(seed: u64, asset: u64, path: u64) -> ChaCha8Rng {
    let key = splitmix(splitmix(splitmix(seed) ^ asset) ^ path.rotate_left(32));
    ChaCha8Rng::seed_from_u64(key)
}

/// Asset index reserved for the copula stream.
pub(crate) const COPULA_STREAM: u64 = u64::MAX;
