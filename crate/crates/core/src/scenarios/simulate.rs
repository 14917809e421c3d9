use std::io::{Read, Write};

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::arfima::fit_arfima;
use super::copula::{gaussian_copula_reorder, spearman_matrix};
use super::figarch::{arch_weights, conditional_variance, fit_figarch};
use super::fracdiff::frac_diff_weights;
use super::nig::{fit_nig, NigParams};
use super::{stream_rng, ArfimaFigarchParams, BURN_IN, COPULA_STREAM, MIN_FIT_LENGTH, TRUNCATION_LAGS};
use crate::data::ReturnPanel;
use crate::error::{Error, Result};
use crate::stats::sample_variance;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArfimaFigarchFit {
    pub params: ArfimaFigarchParams,
    /// Mean-equation innovations divided by the fitted conditional sd.
    pub standardized_residuals: Vec<f64>,
    pub css: f64,
    pub loglik: f64,
    /// `d_v` landed on the edge of its range.
    pub boundary: bool,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssetProvenance {
    pub asset: String,
    pub model: ArfimaFigarchParams,
    pub innovations: NigParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSet {
    pub assets: Vec<String>,
    /// `S x N`, rows grouped by path.
    pub returns: DMatrix<f64>,
    /// Path index of each row.
    pub path: Vec<usize>,
    pub seed: u64,
    pub provenance: Vec<AssetProvenance>,
}

/// Two-stage fit: ARFIMA(1,d,1) by conditional sum of squares, then
/// FIGARCH(1,d,1) on its residuals by Gaussian quasi-likelihood.
pub fn fit_arfima_figarch(returns: &[f64]) -> Result<ArfimaFigarchFit> {
    if returns.len() < MIN_FIT_LENGTH {
        return Err(Error::TooFewRows {
            needed: MIN_FIT_LENGTH,
            found: returns.len(),
        });
    }
    if returns.iter().any(|r| !r.is_finite()) {
        return Err(Error::Degenerate("non-finite returns".into()));
    }
    if !(sample_variance(returns) > 0.0) || returns.iter().all(|r| *r == returns[0]) {
        return Err(Error::Degenerate("series has zero variance".into()));
    }
    let mean = fit_arfima(returns, TRUNCATION_LAGS)?;
    if !mean.converged {
        return Err(Error::Estimation {
            reason: "ARFIMA search did not converge".into(),
            best_objective: mean.css,
        });
    }
    let vol = fit_figarch(&mean.residuals, TRUNCATION_LAGS)?;
    if !vol.converged {
        return Err(Error::Estimation {
            reason: "FIGARCH search did not converge".into(),
            best_objective: vol.loglik,
        });
    }

    let mut warnings = Vec::new();
    let mut params = ArfimaFigarchParams {
        phi_m: mean.phi,
        theta_m: mean.theta,
        d_m: mean.d,
        omega: vol.omega,
        beta_v: vol.beta,
        phi_v: vol.phi,
        d_v: vol.d,
        mean_const: mean.mean_const,
    };
    if let Err(e) = params.validate() {
        warnings.push(format!("projected onto the admissible region: {e}"));
        params.d_v = params.d_v.clamp(0.0, 0.9999);
        params.d_m = params.d_m.clamp(-0.49, 0.49);
        params.omega = params.omega.max(f64::MIN_POSITIVE);
    }
    if vol.boundary {
        warnings.push(format!("d_v = {:.4} is on the boundary of [0, 1)", vol.d));
    }

    let eps2: Vec<f64> = mean.residuals.iter().map(|e| e * e).collect();
    let presample = eps2.iter().sum::<f64>() / eps2.len() as f64;
    let lambda = arch_weights(params.beta_v, params.phi_v, params.d_v, TRUNCATION_LAGS);
    let var = conditional_variance(&eps2, params.omega, params.beta_v, &lambda, presample);
    let standardized_residuals = mean
        .residuals
        .iter()
        .zip(&var)
        .map(|(e, v)| e / v.sqrt())
        .collect();

    Ok(ArfimaFigarchFit {
        params,
        standardized_residuals,
        css: mean.css,
        loglik: vol.loglik,
        boundary: vol.boundary,
        warnings,
    })
}

fn simulate_one<R: Rng>(params: &ArfimaFigarchParams, innov: &NigParams, t_len: usize, rng: &mut R) -> Result<Vec<f64>> {
    let lags = TRUNCATION_LAGS;
    let total = BURN_IN + t_len;
    let lambda = arch_weights(params.beta_v, params.phi_v, params.d_v, lags);
    let base = params.omega / (1.0 - params.beta_v);
    let captured: f64 = lambda.iter().sum();
    let level = if captured < 1.0 { base / (1.0 - captured) } else { base };
    let mut tail = vec![0.0; lags + 1];
    for j in (0..lags).rev() {
        tail[j] = tail[j + 1] + lambda[j + 1];
    }
    let psi = frac_diff_weights(-params.d_m, lags + 1);
    let mixing = innov.mixing();
    let (m, sd) = (innov.mean(), innov.variance().sqrt());

    let mut eps2 = Vec::with_capacity(total);
    let mut u = Vec::with_capacity(total);
    let mut out = Vec::with_capacity(t_len);
    let mut e_prev = 0.0;
    for t in 0..total {
        let inside = t.min(lags);
        let mut s2 = base + level * tail[inside];
        for j in 1..=inside {
            s2 += lambda[j] * eps2[t - j];
        }
        if !(s2 > 0.0 && s2.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "conditional variance {s2} at step {t}; parameters are not admissible"
            )));
        }
        let eta = (innov.sample_one(&mixing, rng) - m) / sd;
        let e = s2.sqrt() * eta;
        eps2.push(e * e);

        let u_prev = if t > 0 { u[t - 1] } else { 0.0 };
        let ut = params.phi_m * u_prev + e + params.theta_m * e_prev;
        u.push(ut);
        e_prev = e;

        if t >= BURN_IN {
            let reach = t.min(lags);
            let mut y = 0.0;
            for j in 0..=reach {
                y += psi[j] * u[t - j];
            }
            out.push(params.mean_const + y);
        }
    }
    Ok(out)
}

fn simulate_asset(
    params: &ArfimaFigarchParams,
    innov: &NigParams,
    t_len: usize,
    n_paths: usize,
    seed: u64,
    asset: u64,
) -> Result<Vec<f64>> {
    params.validate()?;
    innov.validate()?;
    if t_len < 1 || n_paths < 1 {
        return Err(Error::InvalidParameter("t_len and n_paths must be at least 1".into()));
    }
    let paths: Vec<Result<Vec<f64>>> = (0..n_paths)
        .into_par_iter()
        .map(|p| {
            let mut rng = stream_rng(seed, asset, p as u64);
            simulate_one(params, innov, t_len, &mut rng)
        })
        .collect();
    let mut out = Vec::with_capacity(t_len * n_paths);
    for p in paths {
        out.extend(p?);
    }
    Ok(out)
}

fn path_index(t_len: usize, n_paths: usize) -> Vec<usize> {
    (0..n_paths).flat_map(|p| std::iter::repeat_n(p, t_len)).collect()
}

/// Simulate `n_paths` single-asset paths of length `t_len` after burn-in.
pub fn simulate_paths(
    params: &ArfimaFigarchParams,
    innov: &NigParams,
    t_len: usize,
    n_paths: usize,
    seed: u64,
) -> Result<ScenarioSet> {
    let values = simulate_asset(params, innov, t_len, n_paths, seed, 0)?;
    Ok(ScenarioSet {
        assets: vec!["asset_1".into()],
        returns: DMatrix::from_column_slice(values.len(), 1, &values),
        path: path_index(t_len, n_paths),
        seed,
        provenance: vec![AssetProvenance {
            asset: "asset_1".into(),
            model: *params,
            innovations: *innov,
        }],
    })
}

pub fn build_scenario_panel(panel: &ReturnPanel, t_len: usize, seed: u64) -> Result<ScenarioSet> {
    build_scenario_panel_with_paths(panel, t_len, 1, seed)
}

/// Fit every asset, simulate, and restore cross-asset dependence by copula
/// reordering within each path.
pub fn build_scenario_panel_with_paths(
    panel: &ReturnPanel,
    t_len: usize,
    n_paths: usize,
    seed: u64,
) -> Result<ScenarioSet> {
    let n = panel.n_assets();
    let fits: Vec<Result<AssetProvenance>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let fit = fit_arfima_figarch(&panel.column(j))?;
            let nig = fit_nig(&fit.standardized_residuals)?;
            Ok(AssetProvenance {
                asset: panel.assets[j].clone(),
                model: fit.params,
                innovations: nig.params,
            })
        })
        .collect();
    let mut provenance = Vec::with_capacity(n);
    let mut failures = Vec::new();
    for (j, f) in fits.into_iter().enumerate() {
        match f {
            Ok(p) => provenance.push(p),
            Err(e) => failures.push(format!("{}: {e}", panel.assets[j])),
        }
    }
    if !failures.is_empty() {
        return Err(Error::AssetFits {
            failed: failures.len(),
            total: n,
            details: failures.join("; "),
        });
    }
    scenarios_from_provenance(panel, provenance, t_len, n_paths, seed)
}

/// Simulation half of [`build_scenario_panel_with_paths`] for already
/// fitted models.
pub(crate) fn scenarios_from_provenance(
    panel: &ReturnPanel,
    provenance: Vec<AssetProvenance>,
    t_len: usize,
    n_paths: usize,
    seed: u64,
) -> Result<ScenarioSet> {
    let n = provenance.len();
    let columns: Vec<Result<Vec<f64>>> = provenance
        .par_iter()
        .enumerate()
        .map(|(j, p)| simulate_asset(&p.model, &p.innovations, t_len, n_paths, seed, j as u64))
        .collect();
    let mut returns = DMatrix::zeros(t_len * n_paths, n);
    for (j, col) in columns.into_iter().enumerate() {
        let col = col.map_err(|e| Error::AtAsset {
            asset: provenance[j].asset.clone(),
            source: Box::new(e),
        })?;
        returns.set_column(j, &nalgebra::DVector::from_vec(col));
    }

    let rank_corr = spearman_matrix(&panel.returns);
    for p in 0..n_paths {
        let mut block = returns.rows(p * t_len, t_len).into_owned();
        let mut rng = stream_rng(seed, COPULA_STREAM, p as u64);
        gaussian_copula_reorder(&mut block, &rank_corr, &mut rng);
        returns.rows_mut(p * t_len, t_len).copy_from(&block);
    }

    Ok(ScenarioSet {
        assets: provenance.iter().map(|p| p.asset.clone()).collect(),
        returns,
        path: path_index(t_len, n_paths),
        seed,
        provenance,
    })
}

/// `path,<asset>...` with full round-trip precision.
pub fn write_scenarios_csv<W: Write>(set: &ScenarioSet, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["path".to_string()];
    header.extend(set.assets.iter().cloned());
    w.write_record(&header)?;
    for (r, p) in set.path.iter().enumerate() {
        let mut rec = vec![p.to_string()];
        rec.extend(set.returns.row(r).iter().map(|v| format!("{v}")));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Read back a scenario CSV (provenance is not part of the CSV).
pub fn read_scenarios_csv<R: Read>(input: R) -> Result<(Vec<String>, Vec<usize>, DMatrix<f64>)> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers()?.clone();
    if header.len() < 2 || &header[0] != "path" {
        return Err(Error::MalformedHeader("scenario file must start with `path`".into()));
    }
    let assets: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let mut paths = Vec::new();
    let mut values = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 2;
        paths.push(rec[0].parse::<usize>().map_err(|_| Error::BadNumber {
            row,
            column: "path".into(),
            value: rec[0].to_string(),
        })?);
        for (j, cell) in rec.iter().skip(1).enumerate() {
            values.push(cell.trim().parse::<f64>().map_err(|_| Error::BadNumber {
                row,
                column: assets[j].clone(),
                value: cell.to_string(),
            })?);
        }
    }
    let s = paths.len();
    Ok((assets.clone(), paths, DMatrix::from_row_slice(s, assets.len(), &values)))
}
