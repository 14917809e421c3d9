use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::stats::{average_ranks, pearson};

/// Spearman rank correlations between the columns of `x`.
pub fn spearman_matrix(x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.ncols();
    let ranks: Vec<Vec<f64>> = x
        .column_iter()
        .map(|c| average_ranks(&c.iter().copied().collect::<Vec<_>>()))
        .collect();
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            1.0
        } else {
            let r = pearson(&ranks[i], &ranks[j]);
            if r.is_finite() {
                r
            } else {
                0.0
            }
        }
    })
}

/// Gaussian correlation matching the Spearman matrix, `2 sin(πρ/6)`,
/// repaired to the nearest unit-diagonal positive definite matrix.
fn gaussian_correlation(rank_corr: &DMatrix<f64>) -> DMatrix<f64> {
    let n = rank_corr.nrows();
    let raw = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            1.0
        } else {
            2.0 * (std::f64::consts::PI * rank_corr[(i, j)] / 6.0).sin()
        }
    });
    let eig = SymmetricEigen::new(raw);
    let clipped = eig.eigenvalues.map(|v| v.max(1e-8));
    let rebuilt = &eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose();
    let d: Vec<f64> = (0..n).map(|i| rebuilt[(i, i)].sqrt()).collect();
    DMatrix::from_fn(n, n, |i, j| rebuilt[(i, j)] / (d[i] * d[j]))
}

/// Reorder each column of `sims` (an `S x N` block) so its ranks follow a
/// draw from the Gaussian copula with the given rank correlations. Marginal
/// values are untouched.
pub fn gaussian_copula_reorder<R: Rng + ?Sized>(sims: &mut DMatrix<f64>, rank_corr: &DMatrix<f64>, rng: &mut R) {
    let (s, n) = sims.shape();
    if n < 2 || s == 0 {
        return;
    }
    let corr = gaussian_correlation(rank_corr);
    let chol = match corr.clone().cholesky() {
        Some(c) => c.l(),
        None => DMatrix::identity(n, n),
    };
    let z = DMatrix::from_fn(s, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let scores = z * chol.transpose();
    for j in 0..n {
        let mut sorted: Vec<f64> = sims.column(j).iter().copied().collect();
        sorted.sort_by(f64::total_cmp);
        let mut order: Vec<usize> = (0..s).collect();
        order.sort_by(|&a, &b| scores[(a, j)].total_cmp(&scores[(b, j)]).then(a.cmp(&b)));
        for (rank, &row) in order.iter().enumerate() {
            sims[(row, j)] = sorted[rank];
        }
    }
}
