//! Price ingestion, arithmetic returns, and per-asset summaries.

use std::collections::{BTreeSet, HashSet};
use std::io::{Read, Write};

use chrono::NaiveDate;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{fmt_sig, quantile_sorted};

/// Largest share of empty cells tolerated per asset.
pub const MAX_MISSING_FRACTION: f64 = 0.10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Calendar {
    /// Equities: 252 trading days a year.
    #[serde(rename = "252")]
    Trading252,
    /// Cryptocurrencies: trades every calendar day.
    #[serde(rename = "365")]
    Continuous365,
}

impl Calendar {
    pub fn annualization_factor(self) -> u32 {
        match self {
            Calendar::Trading252 => 252,
            Calendar::Continuous365 => 365,
        }
    }

    pub fn from_factor(factor: u32) -> Option<Self> {
        match factor {
            252 => Some(Calendar::Trading252),
            365 => Some(Calendar::Continuous365),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PricePanel {
    pub dates: Vec<NaiveDate>,
    pub assets: Vec<String>,
    /// T x N, strictly positive.
    pub prices: DMatrix<f64>,
    pub calendar: Calendar,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReturnPanel {
    pub dates: Vec<NaiveDate>,
    pub assets: Vec<String>,
    /// T x N arithmetic returns, one column per asset.
    pub returns: DMatrix<f64>,
    pub calendar: Calendar,
}

impl ReturnPanel {
    pub fn new(
        dates: Vec<NaiveDate>,
        assets: Vec<String>,
        returns: DMatrix<f64>,
        calendar: Calendar,
    ) -> Result<Self> {
        if returns.nrows() != dates.len() || returns.ncols() != assets.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} dates x {} assets vs {}x{} matrix",
                dates.len(),
                assets.len(),
                returns.nrows(),
                returns.ncols()
            )));
        }
        if dates.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("dates must be strictly increasing".into()));
        }
        let mut seen = HashSet::new();
        for a in &assets {
            if !seen.insert(a.as_str()) {
                return Err(Error::DuplicateLabel(a.clone()));
            }
        }
        if let Some(bad) = returns.iter().find(|r| !(r.is_finite() && **r > -1.0)) {
            return Err(Error::InvalidParameter(format!("return {bad} is not > -1")));
        }
        Ok(Self {
            dates,
            assets,
            returns,
            calendar,
        })
    }

    pub fn n_periods(&self) -> usize {
        self.returns.nrows()
    }

    pub fn n_assets(&self) -> usize {
        self.returns.ncols()
    }

    /// Rows `start..start + len` as a new panel.
    pub fn window(&self, start: usize, len: usize) -> ReturnPanel {
        ReturnPanel {
            dates: self.dates[start..start + len].to_vec(),
            assets: self.assets.clone(),
            returns: self.returns.rows(start, len).into_owned(),
            calendar: self.calendar,
        }
    }

    pub fn column(&self, i: usize) -> Vec<f64> {
        self.returns.column(i).iter().copied().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssetSummary {
    pub asset: String,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
}

fn parse_date(row: usize, s: &str) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d").map_err(|_| Error::BadDate {
        row,
        value: s.to_string(),
    })
}

/// Read a wide price CSV (`date,<asset>...`).
///
/// Rows are numbered from 1 for the header. Leading rows are dropped until
/// every asset has a price, remaining gaps are forward-filled, and an asset
/// with more than 10% empty cells is rejected.
pub fn load_price_panel<R: Read>(source: R, calendar: Calendar) -> Result<PricePanel> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(source);
    let mut records = reader.records();

    let header = match records.next() {
        Some(r) => r?,
        None => return Err(Error::MalformedHeader("empty input".into())),
    };
    let header: Vec<String> = header.iter().map(|s| s.trim().to_string()).collect();
    if header.len() < 2 || header[0] != "date" {
        return Err(Error::MalformedHeader(
            "first column must be `date` followed by at least one asset".into(),
        ));
    }
    let assets = header[1..].to_vec();
    let mut seen = HashSet::new();
    for a in &assets {
        if a.is_empty() {
            return Err(Error::MalformedHeader("empty asset name".into()));
        }
        if !seen.insert(a.as_str()) {
            return Err(Error::DuplicateLabel(a.clone()));
        }
    }
    let n = assets.len();

    let mut dates: Vec<NaiveDate> = Vec::new();
    let mut raw: Vec<Vec<Option<f64>>> = Vec::new();
    for (i, rec) in records.enumerate() {
        let row = i + 2;
        let rec = rec?;
        if rec.len() == 1 && rec[0].trim().is_empty() {
            continue;
        }
        if rec.len() != n + 1 {
            return Err(Error::RaggedRow {
                row,
                expected: n + 1,
                found: rec.len(),
            });
        }
        let date = parse_date(row, &rec[0])?;
        if let Some(prev) = dates.last() {
            if date <= *prev {
                return Err(Error::DateOrder { row, date });
            }
        }
        let mut cells = Vec::with_capacity(n);
        for (j, cell) in rec.iter().skip(1).enumerate() {
            let cell = cell.trim();
            if cell.is_empty() {
                cells.push(None);
                continue;
            }
            let value: f64 = cell.parse().map_err(|_| Error::BadNumber {
                row,
                column: assets[j].clone(),
                value: cell.to_string(),
            })?;
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::NonPositivePrice {
                    row,
                    column: assets[j].clone(),
                    value,
                });
            }
            cells.push(Some(value));
        }
        dates.push(date);
        raw.push(cells);
    }

    let total = raw.len();
    for (j, asset) in assets.iter().enumerate() {
        let missing = raw.iter().filter(|r| r[j].is_none()).count();
        if total > 0 && missing as f64 > MAX_MISSING_FRACTION * total as f64 {
            return Err(Error::TooManyMissing {
                asset: asset.clone(),
                fraction: 100.0 * missing as f64 / total as f64,
            });
        }
    }

    let first_full = raw
        .iter()
        .position(|r| r.iter().all(Option::is_some))
        .unwrap_or(total);
    let kept = total - first_full;
    if kept < 2 {
        return Err(Error::TooFewRows {
            needed: 2,
            found: kept,
        });
    }

    let mut prices = DMatrix::zeros(kept, n);
    for j in 0..n {
        let mut last = f64::NAN;
        for (t, row) in raw[first_full..].iter().enumerate() {
            if let Some(v) = row[j] {
                last = v;
            }
            prices[(t, j)] = last;
        }
    }

    Ok(PricePanel {
        dates: dates[first_full..].to_vec(),
        assets,
        prices,
        calendar,
    })
}

/// Inverse of [`load_price_panel`] for gap-free panels.
pub fn write_price_panel<W: Write>(panel: &PricePanel, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["date".to_string()];
    header.extend(panel.assets.iter().cloned());
    w.write_record(&header)?;
    for (t, date) in panel.dates.iter().enumerate() {
        let mut rec = vec![date.format("%Y-%m-%d").to_string()];
        rec.extend(panel.prices.row(t).iter().map(|p| format!("{p}")));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Arithmetic returns `p[t+1] / p[t] - 1`, dated at the later observation.
pub fn compute_returns(panel: &PricePanel) -> Result<ReturnPanel> {
    let t = panel.prices.nrows();
    if t < 2 {
        return Err(Error::TooFewRows { needed: 2, found: t });
    }
    let n = panel.prices.ncols();
    let returns = DMatrix::from_fn(t - 1, n, |i, j| {
        panel.prices[(i + 1, j)] / panel.prices[(i, j)] - 1.0
    });
    Ok(ReturnPanel {
        dates: panel.dates[1..].to_vec(),
        assets: panel.assets.clone(),
        returns,
        calendar: panel.calendar,
    })
}

pub fn summary_stats(panel: &ReturnPanel) -> Vec<AssetSummary> {
    let t = panel.n_periods();
    panel
        .assets
        .iter()
        .enumerate()
        .map(|(j, asset)| {
            let mut col = panel.column(j);
            col.sort_by(f64::total_cmp);
            let mean = col.iter().sum::<f64>() / t as f64;
            let std = if t > 1 {
                (col.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (t - 1) as f64).sqrt()
            } else {
                0.0
            };
            AssetSummary {
                asset: asset.clone(),
                mean,
                std,
                min: col[0],
                q25: quantile_sorted(&col, 0.25),
                median: quantile_sorted(&col, 0.5),
                q75: quantile_sorted(&col, 0.75),
                max: col[t - 1],
            }
        })
        .collect()
}

pub fn write_summary_csv<W: Write>(summaries: &[AssetSummary], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["asset", "mean", "std", "min", "q25", "median", "q75", "max"])?;
    for s in summaries {
        let vals = [s.mean, s.std, s.min, s.q25, s.median, s.q75, s.max];
        let mut rec = vec![s.asset.clone()];
        rec.extend(vals.iter().map(|v| fmt_sig(*v, 6)));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Restrict both panels to their common dates.
pub fn align_panels(a: &ReturnPanel, b: &ReturnPanel) -> Result<(ReturnPanel, ReturnPanel)> {
    if a.n_periods() == 0 || b.n_periods() == 0 {
        return Err(Error::EmptyIntersection);
    }
    let in_b: BTreeSet<NaiveDate> = b.dates.iter().copied().collect();
    let common: Vec<NaiveDate> = a.dates.iter().copied().filter(|d| in_b.contains(d)).collect();
    if common.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    let keep = |p: &ReturnPanel| -> ReturnPanel {
        let rows: Vec<usize> = p
            .dates
            .iter()
            .enumerate()
            .filter(|(_, d)| common.binary_search(d).is_ok())
            .map(|(i, _)| i)
            .collect();
        ReturnPanel {
            dates: common.clone(),
            assets: p.assets.clone(),
            returns: p.returns.select_rows(rows.iter()),
            calendar: p.calendar,
        }
    };
    Ok((keep(a), keep(b)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(s: &str) -> Result<PricePanel> {
        load_price_panel(s.as_bytes(), Calendar::Trading252)
    }

    fn d(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
    }

    #[test]
    fn loads_full_panel() {
        let p = load("date,A,B\n2024-01-02,10,20\n2024-01-03,11,21\n2024-01-04,12,19\n").unwrap();
        assert_eq!(p.prices.shape(), (3, 2));
        assert_eq!(p.assets, vec!["A", "B"]);
        assert_eq!(p.prices[(2, 1)], 19.0);
    }

    #[test]
    fn zero_price_names_cell() {
        let err = load("date,A,B\n2024-01-02,10,20\n2024-01-03,0,21\n").unwrap_err();
        match err {
            Error::NonPositivePrice { row, column, .. } => {
                assert_eq!(row, 3);
                assert_eq!(column, "A");
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn interior_gap_forward_filled() {
        // 4x1 panel is too small for the 10% rule, so use 10 rows with one gap.
        let mut csv = String::from("date,A\n");
        let prices = [100.0, 101.0, f64::NAN, 103.0, 104.0, 105.0, 106.0, 107.0, 108.0, 109.0];
        for (i, p) in prices.iter().enumerate() {
            if p.is_nan() {
                csv.push_str(&format!("2024-01-{:02},\n", i + 1));
            } else {
                csv.push_str(&format!("2024-01-{:02},{p}\n", i + 1));
            }
        }
        let panel = load(&csv).unwrap();
        let mut expected = prices.to_vec();
        expected[2] = expected[1];
        let got: Vec<f64> = panel.prices.column(0).iter().copied().collect();
        assert_eq!(got, expected);
    }

    #[test]
    fn leading_gaps_dropped() {
        let mut csv = String::from("date,A,B\n2024-01-01,,5\n");
        for i in 2..=12 {
            csv.push_str(&format!("2024-01-{i:02},{i},{i}\n"));
        }
        let p = load(&csv).unwrap();
        assert_eq!(p.dates[0], d("2024-01-02"));
        assert_eq!(p.prices.nrows(), 11);
    }

    #[test]
    fn too_many_missing_rejected() {
        let csv = "date,A\n2024-01-01,1\n2024-01-02,\n2024-01-03,2\n2024-01-04,3\n";
        assert!(matches!(load(csv), Err(Error::TooManyMissing { .. })));
    }

    #[test]
    fn load_errors() {
        assert!(matches!(load("day,A\n2024-01-01,1\n"), Err(Error::MalformedHeader(_))));
        assert!(matches!(
            load("date,A\n01/02/2024,1\n2024-01-03,2\n"),
            Err(Error::BadDate { row: 2, .. })
        ));
        assert!(matches!(load("date,A\n2024-01-01,1\n"), Err(Error::TooFewRows { .. })));
        assert!(matches!(
            load("date,A\n2024-01-01,1\n2024-01-02,x\n"),
            Err(Error::BadNumber { row: 3, .. })
        ));
        assert!(matches!(
            load("date,A\n2024-01-02,1\n2024-01-01,2\n"),
            Err(Error::DateOrder { .. })
        ));
    }

    fn price_panel(cols: &[&[f64]]) -> PricePanel {
        let t = cols[0].len();
        PricePanel {
            dates: (0..t).map(|i| d("2024-01-01") + chrono::Days::new(i as u64)).collect(),
            assets: (0..cols.len()).map(|i| format!("A{i}")).collect(),
            prices: DMatrix::from_fn(t, cols.len(), |i, j| cols[j][i]),
            calendar: Calendar::Trading252,
        }
    }

    #[test]
    fn arithmetic_returns() {
        let r = compute_returns(&price_panel(&[&[100.0, 110.0]])).unwrap();
        assert!((r.returns[(0, 0)] - 0.10).abs() < 1e-15);

        let r = compute_returns(&price_panel(&[&[50.0, 50.0, 50.0]])).unwrap();
        assert_eq!(r.returns.column(0).iter().copied().collect::<Vec<_>>(), vec![0.0, 0.0]);

        let r = compute_returns(&price_panel(&[&[100.0, 90.0, 99.0]])).unwrap();
        assert!((r.returns[(0, 0)] + 0.10).abs() < 1e-15);
        assert!((r.returns[(1, 0)] - 0.10).abs() < 1e-15);
        assert_eq!(r.dates.len(), 2);
    }

    fn return_panel(cols: &[&[f64]]) -> ReturnPanel {
        let p = price_panel(cols);
        ReturnPanel {
            dates: p.dates,
            assets: p.assets,
            returns: p.prices,
            calendar: Calendar::Trading252,
        }
    }

    #[test]
    fn summary_examples() {
        let s = &summary_stats(&return_panel(&[&[0.01, 0.03]]))[0];
        assert!((s.mean - 0.02).abs() < 1e-15);
        assert!((s.std - std::f64::consts::SQRT_2 / 100.0).abs() < 1e-12);

        let s = &summary_stats(&return_panel(&[&[0.02; 4]]))[0];
        assert_eq!(s.std, 0.0);
        assert_eq!(s.min, s.max);
        assert_eq!(s.median, s.min);

        let s = &summary_stats(&return_panel(&[&[0.01, -0.02, 0.02, 0.0, -0.01]]))[0];
        assert_eq!((s.q25, s.median, s.q75), (-0.01, 0.0, 0.01));
    }

    #[test]
    fn summary_csv_header() {
        let mut buf = Vec::new();
        write_summary_csv(&summary_stats(&return_panel(&[&[0.01, 0.03]])), &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s.lines().next(), Some("asset,mean,std,min,q25,median,q75,max"));
        assert_eq!(s.lines().nth(1), Some("A0,0.02,0.0141421,0.01,0.015,0.02,0.025,0.03"));
    }

    #[test]
    fn align_examples() {
        let a = return_panel(&[&[0.1, 0.2, 0.3]]);
        let (x, y) = align_panels(&a, &a).unwrap();
        assert_eq!(x, a);
        assert_eq!(y, a);

        let mut b = a.clone();
        b.dates.remove(0);
        b.returns = b.returns.remove_row(0);
        let (x, _) = align_panels(&a, &b).unwrap();
        assert_eq!(x.dates, b.dates);
        assert_eq!(x.returns[(0, 0)], 0.2);

        // interleaved dates, 3 in common
        let mk = |days: &[u64]| ReturnPanel {
            dates: days.iter().map(|k| d("2024-01-01") + chrono::Days::new(*k)).collect(),
            assets: vec!["X".into()],
            returns: DMatrix::from_fn(days.len(), 1, |i, _| i as f64 / 100.0),
            calendar: Calendar::Trading252,
        };
        let p = mk(&[0, 1, 3, 5, 8, 9]);
        let q = mk(&[1, 2, 3, 4, 9, 10]);
        let oracle: BTreeSet<_> = p.dates.iter().filter(|d| q.dates.contains(d)).collect();
        let (x, y) = align_panels(&p, &q).unwrap();
        assert_eq!(x.n_periods(), 3);
        assert_eq!(y.n_periods(), 3);
        assert_eq!(x.dates.iter().collect::<BTreeSet<_>>(), oracle);
        assert_eq!(x.dates, y.dates);

        let far = mk(&[100, 101]);
        assert!(matches!(align_panels(&p, &far), Err(Error::EmptyIntersection)));
    }
}
