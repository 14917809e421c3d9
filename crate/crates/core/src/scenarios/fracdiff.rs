//! Fractional differencing `(1 - L)^d`.

/// Coefficients `π_0..π_{n-1}` of `(1 - L)^d`:
/// `π_0 = 1`, `π_j = π_{j-1} (j - 1 - d) / j`.
pub fn frac_diff_weights(d: f64, n: usize) -> Vec<f64> {
    let mut w = Vec::with_capacity(n);
    if n == 0 {
        return w;
    }
    w.push(1.0);
    for j in 1..n {
        let prev = w[j - 1];
        w.push(prev * ((j - 1) as f64 - d) / j as f64);
    }
    w
}

/// Convolve `series` with the first `truncation` weights of `(1 - L)^d`,
/// treating pre-sample values as zero. Output has the input's length.
pub fn apply_frac_filter(series: &[f64], d: f64, truncation: usize) -> Vec<f64> {
    let w = frac_diff_weights(d, truncation.max(1));
    convolve_causal(series, &w)
}

/// `out[t] = Σ_{j ≤ min(t, len-1)} w[j] · x[t-j]`.
pub(crate) fn convolve_causal(x: &[f64], w: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut out = vec![0.0; n];
    for t in 0..n {
        let lags = w.len().min(t + 1);
        let mut acc = 0.0;
        for j in 0..lags {
            acc += w[j] * x[t - j];
        }
        out[t] = acc;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_first_difference() {
        assert_eq!(frac_diff_weights(0.0, 4), vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(frac_diff_weights(1.0, 3), vec![1.0, -1.0, 0.0]);
    }

    #[test]
    fn hand_unrolled_d04() {
        // π1 = -0.4, π2 = π1 (1 - 0.4)/2, π3 = π2 (2 - 0.4)/3
        let p1 = -0.4;
        let p2 = p1 * 0.6 / 2.0;
        let p3 = p2 * 1.6 / 3.0;
        let w = frac_diff_weights(0.4, 4);
        assert_eq!(w, vec![1.0, p1, p2, p3]);
        assert!((w[2] + 0.12).abs() < 1e-15 && (w[3] + 0.064).abs() < 1e-15);
    }

    #[test]
    fn filter_examples() {
        let x = [0.3, -1.2, 4.0, 2.5];
        assert_eq!(apply_frac_filter(&x, 0.0, 10), x.to_vec());
        assert_eq!(apply_frac_filter(&[1.0, 2.0, 3.0], 1.0, 5), vec![1.0, 1.0, 1.0]);
    }
}
