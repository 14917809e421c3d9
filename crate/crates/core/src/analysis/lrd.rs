use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::scenarios::fit_arfima_figarch;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrdEstimate {
    pub d_v: f64,
    /// Always `0.5 + d_v`.
    pub hurst: f64,
    pub method: String,
    /// `d_v` sits on the edge of `[0, 1)`.
    pub boundary: bool,
}

impl LrdEstimate {
    pub fn from_dv(d_v: f64, method: impl Into<String>) -> Self {
        // on a 2^-52 grid both `0.5 + d` and its difference with `d` are exact
        let grid = (1u64 << 52) as f64;
        let clipped = (d_v.clamp(0.0, 1.0 - 1e-4) * grid).round() / grid;
        Self {
            d_v: clipped,
            hurst: 0.5 + clipped,
            method: method.into(),
            boundary: clipped < 1e-3 || clipped > 1.0 - 1.1e-3,
        }
    }
}

/// JSON form: `{series, d_v, hurst, method}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrdReport {
    pub series: String,
    pub d_v: f64,
    pub hurst: f64,
    pub method: String,
}

impl LrdReport {
    pub fn new(series: impl Into<String>, est: &LrdEstimate) -> Self {
        Self {
            series: series.into(),
            d_v: est.d_v,
            hurst: est.hurst,
            method: est.method.clone(),
        }
    }
}

pub const LRD_METHOD: &str = "arfima(1,d,1)-figarch(1,d,1) css/qml";

/// Volatility long-memory order from the two-stage ARFIMA-FIGARCH fit.
pub fn estimate_dv(series: &[f64]) -> Result<LrdEstimate> {
    let fit = fit_arfima_figarch(series)?;
    Ok(LrdEstimate::from_dv(fit.params.d_v, LRD_METHOD))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hurst_arithmetic() {
        let e = LrdEstimate::from_dv(0.8668, "given");
        assert_eq!(e.hurst, 1.3668);
        assert_eq!(e.hurst - e.d_v, 0.5);
        let z = LrdEstimate::from_dv(0.0, "given");
        assert_eq!(z.hurst, 0.5);
        assert!(z.boundary);
    }
}
