use std::path::Path;

use amvp_core::adaptive::{
    amcvarp_run, amvp_run, annualize, append_synthetic, synthetic_label, write_trace_csv, write_weights_csv,
    AdaptiveConfig, AdaptiveTrace, DEFAULT_EPSILON_HISTORICAL, DEFAULT_EPSILON_SCENARIO,
};
use amvp_core::analysis::{
    chow_scan_values, estimate_dv, log_transform, rolling_amrr, write_chow_csv, write_rate_series_csv, LrdReport,
};
use amvp_core::data::{compute_returns, load_price_panel, summary_stats, write_summary_csv, Calendar, ReturnPanel};
use amvp_core::optimize::{efficient_frontier, estimate_moments, write_frontier_csv};
use amvp_core::scenarios::{build_scenario_panel_with_paths, read_scenarios_csv, write_scenarios_csv};
use chrono::NaiveDate;
use serde::Serialize;

use crate::config::{Command, RunConfig};
use crate::output::{sha256_hex, FileDigest, OutputDir};
use crate::CliError;

pub fn run(cmd: &Command, cfg: &RunConfig) -> Result<(), CliError> {
    let (bytes, digest) = read_input(cfg.input())?;
    let mut out = OutputDir::create(cfg.out())?;
    match cmd {
        Command::Summary(_) => summary(&bytes, cfg, &mut out)?,
        Command::Frontier(_) => frontier(&bytes, cfg, &mut out)?,
        Command::Amvp(_) => amvp(&bytes, cfg, &mut out)?,
        Command::Amcvar(_) => amcvar(&bytes, cfg, &mut out)?,
        Command::Simulate(_) => simulate(&bytes, cfg, &mut out)?,
        Command::Amrr(_) => amrr(&bytes, cfg, &mut out)?,
        Command::Chow(_) => chow(&bytes, cfg, &mut out)?,
        Command::Lrd(_) => lrd(&bytes, cfg, &mut out)?,
        Command::Report(_) => report(&bytes, cfg, &mut out)?,
    }
    out.finish(cmd.name(), cfg, vec![digest])
}

fn read_input(path: &Path) -> Result<(Vec<u8>, FileDigest), CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    let digest = FileDigest {
        path: path.display().to_string(),
        sha256: sha256_hex(&bytes),
    };
    Ok((bytes, digest))
}

fn calendar(cfg: &RunConfig) -> Calendar {
    Calendar::from_factor(cfg.calendar).expect("validated calendar")
}

fn returns(bytes: &[u8], cfg: &RunConfig) -> Result<ReturnPanel, CliError> {
    Ok(compute_returns(&load_price_panel(bytes, calendar(cfg))?)?)
}

fn adaptive(cfg: &RunConfig, default_epsilon: f64) -> AdaptiveConfig {
    AdaptiveConfig {
        epsilon: cfg.epsilon.unwrap_or(default_epsilon),
        max_iterations: cfg.max_iterations,
        alpha: cfg.alpha,
        annualization_factor: cfg.calendar,
    }
}

fn csv_err(e: amvp_core::Error) -> CliError {
    e.into()
}

fn summary(bytes: &[u8], cfg: &RunConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let panel = returns(bytes, cfg)?;
    let stats = summary_stats(&panel);
    out.write_with("summary.csv", |buf| write_summary_csv(&stats, buf).map_err(csv_err))
}

fn frontier(bytes: &[u8], cfg: &RunConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let panel = returns(bytes, cfg)?;
    let moments = estimate_moments(&panel)?;
    let points = efficient_frontier(&moments, cfg.frontier_points)?;
    out.write_with("frontier.csv", |buf| write_frontier_csv(&points, &panel.assets, buf).map_err(csv_err))
}

#[derive(Serialize)]
struct RateSummary {
    measure: &'static str,
    per_period_rate: f64,
    annualized_rate: f64,
    annualization_factor: u32,
    final_risk: f64,
    iterations: usize,
    synthetic_assets: usize,
    converged: bool,
}

fn write_trace(trace: &AdaptiveTrace, prefix: &'static str, cfg: &RunConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let last = trace
        .last()
        .ok_or_else(|| CliError::Numerical("adaptive run produced no iterations".into()))?;
    out.write_with(&format!("{prefix}_trace.csv"), |buf| write_trace_csv(trace, buf).map_err(csv_err))?;
    out.write_with(&format!("{prefix}_weights.csv"), |buf| write_weights_csv(last, buf).map_err(csv_err))?;
    out.write_json(
        &format!("{prefix}_rate.json"),
        &RateSummary {
            measure: prefix,
            per_period_rate: last.rate,
            annualized_rate: annualize(last.rate, cfg.calendar),
            annualization_factor: cfg.calendar,
            final_risk: last.risk,
            iterations: trace.records.len(),
            synthetic_assets: trace.synthetic_count,
            converged: trace.converged,
        },
    )
}

fn amvp(bytes: &[u8], cfg: &RunConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let panel = returns(bytes, cfg)?;
    let trace = amvp_run(&panel, &adaptive(cfg, DEFAULT_EPSILON_HISTORICAL))?;
    write_trace(&trace, "amvp", cfg, out)
}

/// Scenario files start with a `path` column; anything else is read as prices.
fn amcvar(bytes: &[u8], cfg: &RunConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let first = bytes.split(|b| *b == b',' || *b == b'\n').next().unwrap_or_default();
    let (assets, scenarios) = if first.trim_ascii() == b"path" {
        let (assets, _, m) = read_scenarios_csv(bytes)?;
        (assets, m)
    } else {
        let panel = returns(bytes, cfg)?;
        (panel.assets, panel.returns)
    };
    let trace = amcvarp_run(&scenarios, &assets, &adaptive(cfg, DEFAULT_EPSILON_SCENARIO))?;
    write_trace(&trace, "amcvar", cfg, out)
}

fn simulate(bytes: &[u8], cfg: &RunConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let panel = returns(bytes, cfg)?;
    let set = build_scenario_panel_with_paths(&panel, cfg.t_len, cfg.paths, cfg.seed)?;
    out.write_with("scenarios.csv", |buf| write_scenarios_csv(&set, buf).map_err(csv_err))?;
    out.write_json("provenance.json", &set.provenance)
}

fn amrr(bytes: &[u8], cfg: &RunConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let panel = returns(bytes, cfg)?;
    let series = rolling_amrr(&panel, cfg.window, &adaptive(cfg, DEFAULT_EPSILON_HISTORICAL), cfg.single_shot)?;
    out.write_with("amrr.csv", |buf| write_rate_series_csv(&series, buf).map_err(csv_err))?;
    out.write_json("amrr_gaps.json", &series.gaps)
}

/// `date,<name>` with empty cells for gaps.
fn read_series(bytes: &[u8]) -> Result<(String, Vec<NaiveDate>, Vec<f64>), CliError> {
    let data = |m: String| CliError::Data(m);
    let mut rdr = csv::Reader::from_reader(bytes);
    let header = rdr.headers().map_err(|e| data(e.to_string()))?.clone();
    if header.len() != 2 || &header[0] != "date" {
        return Err(data("series file must have exactly the columns `date,<value>`".into()));
    }
    let name = header[1].to_string();
    let mut dates = Vec::new();
    let mut values = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| data(e.to_string()))?;
        let row = i + 2;
        let date = NaiveDate::parse_from_str(rec[0].trim(), "%Y-%m-%d")
            .map_err(|_| data(format!("row {row}: unparseable date {:?}", &rec[0])))?;
        let cell = rec[1].trim();
        if cell.is_empty() {
            continue;
        }
        let v: f64 = cell
            .parse()
            .map_err(|_| data(format!("row {row}: unparseable value {cell:?}")))?;
        if dates.last().is_some_and(|d| *d >= date) {
            return Err(data(format!("row {row}: date {date} does not follow the previous date")));
        }
        dates.push(date);
        values.push(v);
    }
    Ok((name, dates, values))
}

#[derive(Serialize)]
struct ChowSummary {
    min_segment: usize,
    bonferroni: bool,
    tested: usize,
    skipped: Vec<(NaiveDate, String)>,
    min_p_value: Option<f64>,
    min_p_date: Option<NaiveDate>,
}

fn chow(bytes: &[u8], cfg: &RunConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let (_, dates, values) = read_series(bytes)?;
    let scan = chow_scan_values(&dates, &values, cfg.min_segment, cfg.bonferroni)?;
    out.write_with("chow.csv", |buf| write_chow_csv(&scan, buf).map_err(csv_err))?;
    let best = scan.results.iter().min_by(|a, b| a.p_value.total_cmp(&b.p_value));
    out.write_json(
        "chow_summary.json",
        &ChowSummary {
            min_segment: scan.min_segment,
            bonferroni: scan.bonferroni,
            tested: scan.results.len(),
            skipped: scan.skipped.clone(),
            min_p_value: best.map(|r| r.p_value),
            min_p_date: best.map(|r| r.breakpoint_date),
        },
    )
}

fn lrd(bytes: &[u8], cfg: &RunConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let (name, _, values) = read_series(bytes)?;
    let (label, series) = if cfg.log_transform {
        (format!("log({name})"), log_transform(&values))
    } else {
        (name, values)
    };
    let est = estimate_dv(&series)?;
    out.write_json("lrd.json", &LrdReport::new(label, &est))
}

fn report(bytes: &[u8], cfg: &RunConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let panel = returns(bytes, cfg)?;
    let trace = amvp_run(&panel, &adaptive(cfg, DEFAULT_EPSILON_HISTORICAL))?;
    out.write_with("amvp_trace.csv", |buf| write_trace_csv(&trace, buf).map_err(csv_err))?;

    let mut current = panel;
    let mut last_frontier = Vec::new();
    for (k, record) in trace.records.iter().enumerate() {
        let moments = estimate_moments(&current)?;
        let points = efficient_frontier(&moments, cfg.frontier_points)?;
        out.write_with(&format!("frontier_{k:03}.csv"), |buf| {
            write_frontier_csv(&points, &current.assets, buf).map_err(csv_err)
        })?;
        if k + 1 < trace.records.len() {
            current = append_synthetic(&current, &record.weights, &synthetic_label(k + 1))?;
        }
        last_frontier = points;
    }

    // frontier risk is a standard deviation; the line runs from (0, AMRR)
    // with the best excess return per unit of it
    let anchor = trace.final_rate().expect("non-empty trace");
    let slope = last_frontier
        .iter()
        .filter(|p| p.feasible && p.risk > 0.0)
        .map(|p| (p.target_return - anchor) / p.risk)
        .fold(0.0_f64, f64::max);
    let mut sds: Vec<f64> = vec![0.0];
    sds.extend(last_frontier.iter().filter(|p| p.feasible).map(|p| p.risk));
    sds.sort_by(f64::total_cmp);
    sds.dedup();
    out.write_with("cml.csv", |buf| {
        let mut w = csv::Writer::from_writer(buf);
        let io = |e: csv::Error| CliError::Data(e.to_string());
        w.write_record(["sd", "return"]).map_err(io)?;
        for sd in &sds {
            w.write_record([format!("{sd}"), format!("{}", anchor + slope * sd)]).map_err(io)?;
        }
        w.flush().map_err(|e| CliError::Data(e.to_string()))
    })
}
