//! Primal active-set solver for `min ½ xᵀHx  s.t.  Ax = b, x ≥ 0`.
//!
//! Sized for the portfolio problems in this crate (a few dozen variables,
//! one or two equality rows). Each step solves the equality-constrained
//! subproblem on the free variables through its KKT system.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub x: DVector<f64>,
    /// Multipliers of the equality rows (sign convention `Hx + Aᵀν - μ = 0`).
    pub eq_multipliers: DVector<f64>,
    pub iterations: usize,
    /// Max violation over stationarity, complementarity, and primal feasibility.
    pub kkt_residual: f64,
}

const STEP_TOL: f64 = 1e-13;
/// Bound multipliers above `-MULT_TOL` count as optimal. `H` is expected
/// on unit scale (the callers normalize by trace/N).
const MULT_TOL: f64 = 1e-9;
const FACE_TOL: f64 = 1e-12;
const STALL_KKT_TOL: f64 = 1e-8;

/// Solve a small dense linear system, falling back to an SVD least-squares
/// solve when the matrix is singular (consistent KKT systems with redundant
/// rows or a singular Hessian block).
pub(crate) fn robust_solve(k: &DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    let scale = k.amax().max(1e-300);
    if let Some(sol) = k.clone().lu().solve(rhs) {
        let resid = (k * &sol - rhs).amax();
        if sol.iter().all(|v| v.is_finite()) && resid <= 1e-9 * scale * (1.0 + sol.amax()) {
            return Some(sol);
        }
    }
    let svd = k.clone().svd(true, true);
    let eps = 1e-12 * svd.singular_values.max();
    svd.solve(rhs, eps).ok()
}

/// `x0` must be feasible. Variables at exactly zero in `x0` start in the
/// active set.
pub fn solve_nonneg_qp(
    h: &DMatrix<f64>,
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    x0: DVector<f64>,
    max_iter: usize,
) -> Result<QpSolution> {
    let n = h.nrows();
    let m = a.nrows();
    let mut x = x0;
    let mut active: Vec<bool> = x.iter().map(|v| *v <= 0.0).collect();
    for (xi, act) in x.iter_mut().zip(&active) {
        if *act {
            *xi = 0.0;
        }
    }

    // Variables whose release produced no feasible ascent; they stay at
    // zero until the next step of positive length.
    let mut locked = vec![false; n];
    let mut released: Option<usize> = None;
    let objective = |x: &DVector<f64>| 0.5 * x.dot(&(h * x));
    let mut best: Option<(f64, DVector<f64>, DVector<f64>)> = None;

    for iter in 0..max_iter {
        let free: Vec<usize> = (0..n).filter(|&j| !active[j]).collect();
        let f = free.len();
        let g = h * &x;

        let mut kkt = DMatrix::zeros(f + m, f + m);
        let mut rhs = DVector::zeros(f + m);
        for (r, &i) in free.iter().enumerate() {
            for (c, &j) in free.iter().enumerate() {
                kkt[(r, c)] = h[(i, j)];
            }
            for e in 0..m {
                kkt[(r, f + e)] = a[(e, i)];
                kkt[(f + e, r)] = a[(e, i)];
            }
            rhs[r] = -g[i];
        }
        let sol = robust_solve(&kkt, &rhs)
            .ok_or_else(|| Error::Internal("KKT system could not be solved".into()))?;
        let p_free = sol.rows(0, f);
        let nu = sol.rows(f, m).into_owned();
        let obj = objective(&x);
        if best.as_ref().is_none_or(|(b, _, _)| obj < *b) {
            best = Some((obj, x.clone(), nu.clone()));
        }

        let x_scale = x.amax().max(1.0);
        // reduced gradient on the free variables; tiny means the face is
        // already solved and any step is solve noise
        let face_resid = free
            .iter()
            .map(|&i| (g[i] + (0..m).map(|e| a[(e, i)] * nu[e]).sum::<f64>()).abs())
            .fold(0.0, f64::max);
        if p_free.amax() <= STEP_TOL * x_scale || face_resid <= FACE_TOL * g.amax().max(1.0) {
            // Stationary on the current face: inspect bound multipliers.
            let mult = &g + a.transpose() * &nu;
            let mut worst: Option<(usize, f64)> = None;
            for j in 0..n {
                if active[j] && !locked[j] && mult[j] < -MULT_TOL && worst.is_none_or(|(_, w)| mult[j] < w) {
                    worst = Some((j, mult[j]));
                }
            }
            match worst {
                None => {
                    let kkt_residual = kkt_residual(h, a, b, &x, &nu);
                    return Ok(QpSolution {
                        x,
                        eq_multipliers: nu,
                        iterations: iter + 1,
                        kkt_residual,
                    });
                }
                Some((j, _)) => {
                    active[j] = false;
                    released = Some(j);
                }
            }
            continue;
        }

        if let Some(j) = released.take() {
            let r = free.iter().position(|&i| i == j).expect("released variable is free");
            if p_free[r] <= 0.0 {
                active[j] = true;
                locked[j] = true;
                continue;
            }
        }

        let mut step = 1.0;
        let mut blocking = None;
        for (r, &i) in free.iter().enumerate() {
            let p = p_free[r];
            if p < 0.0 {
                let ratio = x[i] / -p;
                if ratio < step {
                    step = ratio;
                    blocking = Some(i);
                }
            }
        }
        for (r, &i) in free.iter().enumerate() {
            x[i] += step * p_free[r];
            if x[i] < 0.0 {
                x[i] = 0.0;
            }
        }
        if let Some(j) = blocking {
            x[j] = 0.0;
            active[j] = true;
        }
        if step > 0.0 {
            locked.iter_mut().for_each(|l| *l = false);
        }
    }

    // Flat directions of a nearly singular H can stall the face search;
    // accept the best iterate if it satisfies the optimality conditions.
    if let Some((_, x, _)) = best {
        let nu = equality_multipliers(h, a, &x);
        let kkt_residual = kkt_residual(h, a, b, &x, &nu);
        if kkt_residual <= STALL_KKT_TOL * h.amax().max(1.0) {
            return Ok(QpSolution {
                x,
                eq_multipliers: nu,
                iterations: max_iter,
                kkt_residual,
            });
        }
    }
    Err(Error::NonConvergence {
        solver: "active-set QP",
        iterations: max_iter,
        best: x.iter().copied().collect(),
    })
}

/// Least-squares equality multipliers from stationarity on the support of `x`.
fn equality_multipliers(h: &DMatrix<f64>, a: &DMatrix<f64>, x: &DVector<f64>) -> DVector<f64> {
    let g = h * x;
    let support: Vec<usize> = (0..x.len()).filter(|&j| x[j] > 0.0).collect();
    let at = DMatrix::from_fn(support.len(), a.nrows(), |r, e| a[(e, support[r])]);
    let rhs = DVector::from_fn(support.len(), |r, _| -g[support[r]]);
    at.svd(true, true)
        .solve(&rhs, 1e-12)
        .unwrap_or_else(|_| DVector::zeros(a.nrows()))
}

pub fn kkt_residual(
    h: &DMatrix<f64>,
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    x: &DVector<f64>,
    nu: &DVector<f64>,
) -> f64 {
    let mult = h * x + a.transpose() * nu;
    let mut resid = (a * x - b).amax();
    for j in 0..x.len() {
        resid = resid.max((-x[j]).max(0.0));
        if x[j] > 0.0 {
            resid = resid.max(mult[j].abs());
        } else {
            resid = resid.max((-mult[j]).max(0.0));
        }
    }
    resid
}

/// Euclidean projection onto the probability simplex.
pub fn project_to_simplex(v: &DVector<f64>) -> DVector<f64> {
    let n = v.len();
    let mut u: Vec<f64> = v.iter().copied().collect();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (k, uk) in u.iter().enumerate() {
        cumsum += uk;
        let t = (cumsum - 1.0) / (k + 1) as f64;
        if uk - t > 0.0 {
            theta = t;
        }
    }
    let mut w = DVector::from_fn(n, |i, _| (v[i] - theta).max(0.0));
    let s = w.sum();
    w /= s;
    w
}
