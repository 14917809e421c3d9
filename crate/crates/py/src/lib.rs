//! Python module `amvp_lab`. Matrices travel as lists of rows, dates as
//! ISO strings.

use std::fs::File;

use amvp_core::adaptive::{amcvarp_run, amvp_run, AdaptiveConfig, AdaptiveTrace};
use amvp_core::analysis;
use amvp_core::data::{self, Calendar, ReturnPanel};
use amvp_core::optimize::{self, MomentEstimate};
use amvp_core::scenarios::{self, NigParams};
use chrono::NaiveDate;
use nalgebra::{DMatrix, DVector};
use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: amvp_core::Error) -> PyErr {
    match e {
        amvp_core::Error::InvalidParameter(_) => PyValueError::new_err(e.to_string()),
        e if e.is_data_error() => PyValueError::new_err(e.to_string()),
        e => PyRuntimeError::new_err(e.to_string()),
    }
}

fn calendar(factor: u32) -> PyResult<Calendar> {
    Calendar::from_factor(factor).ok_or_else(|| PyValueError::new_err(format!("calendar must be 252 or 365, got {factor}")))
}

fn matrix(rows: &[Vec<f64>]) -> PyResult<DMatrix<f64>> {
    let n = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("rows have different lengths"));
    }
    Ok(DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]))
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn iso(dates: &[NaiveDate]) -> Vec<String> {
    dates.iter().map(|d| d.to_string()).collect()
}

fn load_returns(path: &str, factor: u32) -> PyResult<ReturnPanel> {
    let file = File::open(path).map_err(|e| PyIOError::new_err(format!("{path}: {e}")))?;
    let prices = data::load_price_panel(file, calendar(factor)?).map_err(err)?;
    data::compute_returns(&prices).map_err(err)
}

fn trace_dict<'py>(py: Python<'py>, trace: &AdaptiveTrace) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    let last = trace.last().ok_or_else(|| PyRuntimeError::new_err("empty trace"))?;
    d.set_item("risks", trace.risks())?;
    d.set_item("rates", trace.records.iter().map(|r| r.rate).collect::<Vec<_>>())?;
    d.set_item("converged", trace.converged)?;
    d.set_item("weights", last.weights.weights.clone())?;
    d.set_item("universe", last.weights.universe.clone())?;
    Ok(d)
}

type Panel = (Vec<String>, Vec<String>, Vec<Vec<f64>>);

/// Simple returns of a `date,<asset>...` price file: (dates, assets, rows).
#[pyfunction]
#[pyo3(signature = (path, calendar = 252))]
fn load_returns_csv(path: &str, calendar: u32) -> PyResult<Panel> {
    let p = load_returns(path, calendar)?;
    Ok((iso(&p.dates), p.assets.clone(), rows(&p.returns)))
}

/// Per-asset mean, std, min, quartiles and max of the returns.
#[pyfunction]
#[pyo3(signature = (path, calendar = 252))]
fn summary<'py>(py: Python<'py>, path: &str, calendar: u32) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let p = load_returns(path, calendar)?;
    data::summary_stats(&p)
        .iter()
        .map(|s| {
            let d = PyDict::new(py);
            d.set_item("asset", &s.asset)?;
            for (k, v) in [
                ("mean", s.mean),
                ("std", s.std),
                ("min", s.min),
                ("q25", s.q25),
                ("median", s.median),
                ("q75", s.q75),
                ("max", s.max),
            ] {
                d.set_item(k, v)?;
            }
            Ok(d)
        })
        .collect()
}

/// Long-only minimum-variance weights for a covariance matrix.
#[pyfunction]
fn mvp_weights(sigma: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
    let sigma = matrix(&sigma)?;
    let n = sigma.nrows();
    let m = MomentEstimate {
        assets: (1..=n).map(|i| format!("asset_{i}")).collect(),
        mu: DVector::zeros(n),
        sigma,
        n_obs: 0,
    };
    Ok(optimize::mvp_constrained(&m).map_err(err)?.weights)
}

/// Adaptive minimum-variance loop on a price file.
#[pyfunction]
#[pyo3(signature = (path, calendar = 252, epsilon = None, max_iterations = None))]
fn amvp<'py>(
    py: Python<'py>,
    path: &str,
    calendar: u32,
    epsilon: Option<f64>,
    max_iterations: Option<usize>,
) -> PyResult<Bound<'py, PyDict>> {
    let p = load_returns(path, calendar)?;
    let mut cfg = AdaptiveConfig::historical(calendar);
    cfg.epsilon = epsilon.unwrap_or(cfg.epsilon);
    cfg.max_iterations = max_iterations.unwrap_or(cfg.max_iterations);
    trace_dict(py, &amvp_run(&p, &cfg).map_err(err)?)
}

/// Minimum-CVaR weights for scenario rows: (weights, var, cvar).
#[pyfunction]
#[pyo3(signature = (scenarios, alpha = 0.99))]
fn min_cvar(scenarios: Vec<Vec<f64>>, alpha: f64) -> PyResult<(Vec<f64>, f64, f64)> {
    let s = matrix(&scenarios)?;
    let names: Vec<String> = (1..=s.ncols()).map(|i| format!("asset_{i}")).collect();
    let sol = optimize::min_cvar_lp(&s, &names, alpha).map_err(err)?;
    Ok((sol.weights.weights, sol.var_threshold, sol.cvar))
}

/// Adaptive minimum-CVaR loop on scenario rows.
#[pyfunction]
#[pyo3(signature = (scenarios, alpha = 0.99, epsilon = 1e-6))]
fn amcvar<'py>(py: Python<'py>, scenarios: Vec<Vec<f64>>, alpha: f64, epsilon: f64) -> PyResult<Bound<'py, PyDict>> {
    let s = matrix(&scenarios)?;
    let names: Vec<String> = (1..=s.ncols()).map(|i| format!("asset_{i}")).collect();
    let cfg = AdaptiveConfig {
        alpha,
        epsilon,
        ..AdaptiveConfig::scenario(252)
    };
    trace_dict(py, &amcvarp_run(&s, &names, &cfg).map_err(err)?)
}

#[pyfunction]
fn frac_diff_weights(d: f64, n: usize) -> Vec<f64> {
    scenarios::frac_diff_weights(d, n)
}

/// Draw `n` NIG variates.
#[pyfunction]
#[pyo3(signature = (alpha, beta, mu, delta, n, seed = 0))]
fn nig_sample(alpha: f64, beta: f64, mu: f64, delta: f64, n: usize, seed: u64) -> PyResult<Vec<f64>> {
    let p = NigParams::new(alpha, beta, mu, delta).map_err(err)?;
    scenarios::nig_sample(&p, n, seed).map_err(err)
}

/// Method-of-moments NIG fit: (alpha, beta, mu, delta).
#[pyfunction]
fn fit_nig(x: Vec<f64>) -> PyResult<(f64, f64, f64, f64)> {
    let p = scenarios::fit_nig(&x).map_err(err)?.params;
    Ok((p.alpha_tail, p.beta_skew, p.mu_loc, p.delta_scale))
}

/// Fit the price file and simulate `t_len` joint periods: (assets, rows).
#[pyfunction]
#[pyo3(signature = (path, t_len = 2000, seed = 0, calendar = 252))]
fn simulate(py: Python<'_>, path: &str, t_len: usize, seed: u64, calendar: u32) -> PyResult<(Vec<String>, Vec<Vec<f64>>)> {
    let p = load_returns(path, calendar)?;
    let set = py.detach(|| scenarios::build_scenario_panel(&p, t_len, seed)).map_err(err)?;
    Ok((set.assets, rows(&set.returns)))
}

/// Rolling-window AMRR: (end dates, values with NaN for failed windows).
#[pyfunction]
#[pyo3(signature = (path, window = 252, calendar = 252, single_shot = false))]
fn rolling_amrr(
    py: Python<'_>,
    path: &str,
    window: usize,
    calendar: u32,
    single_shot: bool,
) -> PyResult<(Vec<String>, Vec<f64>)> {
    let p = load_returns(path, calendar)?;
    let cfg = AdaptiveConfig::historical(calendar);
    let s = py.detach(|| analysis::rolling_amrr(&p, window, &cfg, single_shot)).map_err(err)?;
    Ok((iso(&s.dates), s.values))
}

/// Chow scan over an AR(1) regression of `values`.
#[pyfunction]
#[pyo3(signature = (dates, values, bonferroni = false))]
fn chow_scan<'py>(py: Python<'py>, dates: Vec<String>, values: Vec<f64>, bonferroni: bool) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let dates = dates
        .iter()
        .map(|d| NaiveDate::parse_from_str(d, "%Y-%m-%d").map_err(|e| PyValueError::new_err(format!("{d}: {e}"))))
        .collect::<PyResult<Vec<_>>>()?;
    let scan = analysis::chow_scan_values(&dates, &values, None, bonferroni).map_err(err)?;
    scan.results
        .iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("date", r.breakpoint_date.to_string())?;
            d.set_item("f_stat", r.f_stat)?;
            d.set_item("p_value", r.p_value)?;
            Ok(d)
        })
        .collect()
}

/// Long-memory estimate of a series: (d_v, hurst).
#[pyfunction]
fn estimate_dv(py: Python<'_>, series: Vec<f64>) -> PyResult<(f64, f64)> {
    let e = py.detach(|| analysis::estimate_dv(&series)).map_err(err)?;
    Ok((e.d_v, e.hurst))
}

#[pyfunction]
fn log_transform(values: Vec<f64>) -> Vec<f64> {
    analysis::log_transform(&values)
}

#[pymodule]
fn amvp_lab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", amvp_core::VERSION)?;
    m.add_function(wrap_pyfunction!(load_returns_csv, m)?)?;
    m.add_function(wrap_pyfunction!(summary, m)?)?;
    m.add_function(wrap_pyfunction!(mvp_weights, m)?)?;
    m.add_function(wrap_pyfunction!(amvp, m)?)?;
    m.add_function(wrap_pyfunction!(min_cvar, m)?)?;
    m.add_function(wrap_pyfunction!(amcvar, m)?)?;
    m.add_function(wrap_pyfunction!(frac_diff_weights, m)?)?;
    m.add_function(wrap_pyfunction!(nig_sample, m)?)?;
    m.add_function(wrap_pyfunction!(fit_nig, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(rolling_amrr, m)?)?;
    m.add_function(wrap_pyfunction!(chow_scan, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_dv, m)?)?;
    m.add_function(wrap_pyfunction!(log_transform, m)?)?;
    Ok(())
}
