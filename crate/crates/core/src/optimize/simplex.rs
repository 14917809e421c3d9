//! Bounded-variable revised simplex for LPs with few rows and many columns.
//!
//! Solves `min cᵀx  s.t.  Ax = b,  l ≤ x ≤ u` from a caller-supplied feasible
//! basis. The basis inverse is kept dense (the row count is small) and
//! refactored periodically. Dantzig pricing, with Bland's rule once a long
//! run of degenerate pivots suggests cycling.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct BoundedLp {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: DVector<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: DVector<f64>,
    /// Simplex multipliers `y = B⁻ᵀ c_B` (duals of the equality rows).
    pub y: DVector<f64>,
    pub objective: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Basic(usize),
    AtLower,
    AtUpper,
}

const PIVOT_TOL: f64 = 1e-11;
const COST_TOL: f64 = 1e-12;
const REFACTOR_EVERY: usize = 64;
const DEGENERATE_RUN: usize = 64;

pub fn solve(
    lp: &BoundedLp,
    basis: Vec<usize>,
    nonbasic_upper: &[usize],
    max_iter: usize,
) -> Result<LpSolution> {
    let m = lp.a.nrows();
    let n = lp.a.ncols();
    if basis.len() != m {
        return Err(Error::Internal(format!("basis has {} columns, need {m}", basis.len())));
    }
    let mut status = vec![Status::AtLower; n];
    for &j in nonbasic_upper {
        status[j] = Status::AtUpper;
    }
    for (r, &j) in basis.iter().enumerate() {
        status[j] = Status::Basic(r);
    }
    let mut basis = basis;
    let mut x = DVector::zeros(n);
    let (mut binv, mut xb) = refactor(lp, &basis, &status, &mut x)?;

    let mut degenerate = 0usize;
    let mut iterations = 0usize;
    let mut since_refactor = 0usize;
    loop {
        if iterations >= max_iter {
            return Err(Error::NonConvergence {
                solver: "bounded simplex",
                iterations,
                best: x.iter().copied().collect(),
            });
        }
        if since_refactor >= REFACTOR_EVERY {
            (binv, xb) = refactor(lp, &basis, &status, &mut x)?;
            since_refactor = 0;
        }

        let cb = DVector::from_iterator(m, basis.iter().map(|&j| lp.c[j]));
        let y = binv.transpose() * &cb;

        let bland = degenerate >= DEGENERATE_RUN;
        let mut entering: Option<(usize, f64, f64)> = None; // (col, reduced cost, direction)
        let cost_scale = lp.c.amax().max(1.0);
        for j in 0..n {
            let dir = match status[j] {
                Status::Basic(_) => continue,
                Status::AtLower => 1.0,
                Status::AtUpper => -1.0,
            };
            if lp.lower[j] == lp.upper[j] {
                continue;
            }
            let d = lp.c[j] - lp.a.column(j).dot(&y);
            // free nonbasic columns sit at their (finite) lower value; allow both ways
            let free = lp.lower[j] == f64::NEG_INFINITY;
            let improving = if free { d.abs() > COST_TOL * cost_scale } else { d * dir < -COST_TOL * cost_scale };
            if !improving {
                continue;
            }
            let dir = if free { -d.signum() } else { dir };
            match entering {
                _ if bland => {
                    if entering.is_none() {
                        entering = Some((j, d, dir));
                    }
                }
                Some((_, best, _)) if d.abs() <= best.abs() => {}
                _ => entering = Some((j, d, dir)),
            }
            if bland && entering.is_some() {
                break;
            }
        }

        let Some((q, _, dir)) = entering else {
            let objective = lp.c.dot(&x);
            return Ok(LpSolution {
                x,
                y,
                objective,
                iterations,
            });
        };
        iterations += 1;
        since_refactor += 1;

        let alpha = &binv * lp.a.column(q);
        // x_B moves by -dir * alpha * t
        let mut t_max = lp.upper[q] - lp.lower[q];
        let mut leaving: Option<(usize, bool)> = None; // (row, goes to upper)
        let mut best_pivot = 0.0;
        for r in 0..m {
            let delta = -dir * alpha[r];
            if delta.abs() <= PIVOT_TOL {
                continue;
            }
            let j = basis[r];
            let (limit, to_upper) = if delta < 0.0 {
                ((xb[r] - lp.lower[j]) / -delta, false)
            } else {
                ((lp.upper[j] - xb[r]) / delta, true)
            };
            if !limit.is_finite() {
                continue;
            }
            let limit = limit.max(0.0);
            let better = if bland {
                limit < t_max
                    || (limit == t_max && leaving.is_some_and(|(lr, _)| basis[r] < basis[lr]))
            } else {
                limit < t_max - 1e-15 || (limit <= t_max && alpha[r].abs() > best_pivot)
            };
            if better {
                t_max = limit;
                leaving = Some((r, to_upper));
                best_pivot = alpha[r].abs();
            }
        }
        if !t_max.is_finite() {
            return Err(Error::Internal("LP is unbounded".into()));
        }
        if t_max <= 0.0 {
            degenerate += 1;
        } else {
            degenerate = 0;
        }

        let t = t_max;
        for r in 0..m {
            xb[r] -= dir * alpha[r] * t;
        }
        match leaving {
            None => {
                // bound flip
                status[q] = if status[q] == Status::AtLower {
                    Status::AtUpper
                } else {
                    Status::AtLower
                };
                x[q] = if status[q] == Status::AtUpper { lp.upper[q] } else { lp.lower[q] };
            }
            Some((r, to_upper)) => {
                let out = basis[r];
                let entering_value = x[q] + dir * t;
                status[out] = if to_upper { Status::AtUpper } else { Status::AtLower };
                x[out] = if to_upper { lp.upper[out] } else { lp.lower[out] };
                basis[r] = q;
                status[q] = Status::Basic(r);
                xb[r] = entering_value;

                let piv = alpha[r];
                let pivot_row = binv.row(r) / piv;
                for i in 0..m {
                    if i != r && alpha[i] != 0.0 {
                        let f = alpha[i];
                        for k in 0..m {
                            binv[(i, k)] -= f * pivot_row[k];
                        }
                    }
                }
                binv.set_row(r, &pivot_row);
            }
        }
        for (r, &j) in basis.iter().enumerate() {
            x[j] = xb[r];
        }
    }
}

fn refactor(
    lp: &BoundedLp,
    basis: &[usize],
    status: &[Status],
    x: &mut DVector<f64>,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let m = basis.len();
    let n = lp.a.ncols();
    let bmat = lp.a.select_columns(basis.iter());
    let binv = bmat
        .try_inverse()
        .ok_or_else(|| Error::Internal("simplex basis became singular".into()))?;
    let mut rhs = lp.b.clone();
    for j in 0..n {
        match status[j] {
            Status::Basic(_) => continue,
            Status::AtLower => x[j] = if lp.lower[j].is_finite() { lp.lower[j] } else { 0.0 },
            Status::AtUpper => x[j] = lp.upper[j],
        }
        if x[j] != 0.0 {
            rhs -= lp.a.column(j) * x[j];
        }
    }
    let xb = &binv * rhs;
    for r in 0..m {
        x[basis[r]] = xb[r];
    }
    Ok((binv, xb))
}
