//! Small descriptive-statistics helpers shared across modules.

/// Sum that pairs the smallest and largest values first.
///
/// Values symmetric about zero cancel exactly, so odd central moments of
/// symmetric data come out as exact zeros.
pub fn balanced_sum(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mut total = 0.0;
    for i in 0..n / 2 {
        total += sorted[i] + sorted[n - 1 - i];
    }
    if n % 2 == 1 {
        total += sorted[n / 2];
    }
    total
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample variance with divisor n - 1.
pub fn sample_variance(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(values);
    values.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64
}

/// Quantile by linear interpolation between order statistics (type 7).
/// `sorted` must be ascending and non-empty.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    debug_assert!(n > 0);
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Ranks starting at 1, ties receive the average of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let mx = mean(x);
    let my = mean(y);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Format with `digits` significant digits, `%g` style.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    let digits = digits.max(1) as i32;
    if exp < -5 || exp >= digits {
        let s = format!("{:.*e}", (digits - 1) as usize, x);
        // trim mantissa zeros: 1.50000e-7 -> 1.5e-7
        match s.split_once('e') {
            Some((mant, e)) if mant.contains('.') => {
                let mant = mant.trim_end_matches('0').trim_end_matches('.');
                format!("{mant}e{e}")
            }
            _ => s,
        }
    } else {
        let decimals = (digits - 1 - exp).max(0) as usize;
        let s = format!("{:.*}", decimals, x);
        // rounding may carry into a new digit (9.99999 -> 10.0000), harmless
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn balanced_sum_cancels_symmetric_values() {
        let xs = [0.1, -0.3, 0.7, 1e-9, -0.1, 0.3, -0.7, -1e-9];
        assert_eq!(balanced_sum(&xs), 0.0);
    }

    #[test]
    fn type7_quantiles() {
        let v = [-0.02, -0.01, 0.0, 0.01, 0.02];
        assert_eq!(quantile_sorted(&v, 0.5), 0.0);
        assert_eq!(quantile_sorted(&v, 0.25), -0.01);
        assert_eq!(quantile_sorted(&v, 0.75), 0.01);
        // interpolated: h = 3 * 0.25 = 0.75
        let w = [1.0, 2.0, 3.0, 4.0];
        assert!((quantile_sorted(&w, 0.25) - 1.75).abs() < 1e-15);
    }

    #[test]
    fn ties_share_average_rank() {
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn significant_digit_formatting() {
        assert_eq!(fmt_sig(0.0123456789, 6), "0.0123457");
        assert_eq!(fmt_sig(1234567.0, 6), "1.23457e6");
        assert_eq!(fmt_sig(-0.5, 6), "-0.5");
        assert_eq!(fmt_sig(1.5e-7, 6), "1.5e-7");
        assert_eq!(fmt_sig(100.0, 8), "100");
    }
}
