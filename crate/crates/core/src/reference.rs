//! High-accuracy baseline `x*`, `F*` via FISTA with adaptive restart.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_len, contract, Result};
use crate::math;
use crate::problem::CompositeProblem;
use crate::solver::audit_residual_sq;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ReferenceSolution {
    pub x_star: Vec<f64>,
    pub f_star: f64,
    /// `‖S_{1/L}(x_star)‖`
    pub residual: f64,
    pub iterations_used: usize,
    pub converged: bool,
}

pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_ITERS: usize = 1_000_000;

/// Accelerated proximal gradient with stepsize `1/L`, started at the origin,
/// until `‖S_{1/L}(x)‖ ≤ tol`. An exhausted budget returns the iterate with
/// the smallest residual, flagged as not converged.
pub fn solve_reference(problem: &CompositeProblem, tol: f64, max_iters: usize) -> Result<ReferenceSolution> {
    solve_reference_from(problem, &vec![0.0; problem.dim()], tol, max_iters)
}

pub fn solve_reference_from(
    problem: &CompositeProblem,
    x0: &[f64],
    tol: f64,
    max_iters: usize,
) -> Result<ReferenceSolution> {
    check_len(problem.dim(), x0.len())?;
    if !(tol > 0.0) {
        return Err(contract("reference tolerance must be positive"));
    }
    if max_iters == 0 {
        return Err(contract("reference budget must be positive"));
    }
    let n = problem.dim();
    let step = 1.0 / problem.lipschitz();
    let mut scratch = vec![0.0; n];
    let mut grad = vec![0.0; n];
    let mut v = vec![0.0; n];

    // Feasible start: one prox step from x0.
    let mut x = x0.to_vec();
    problem.prox_full_into(x0, step, &mut x);
    let mut y = x.clone();
    let mut x_new = vec![0.0; n];
    let mut t = 1.0;

    let mut best = x.clone();
    let mut best_res = math::sqrt(audit_residual_sq(problem, &x, &mut scratch));
    let mut used = 0;
    while used < max_iters && best_res > tol {
        used += 1;
        problem.grad_into(&y, &mut grad);
        for ((vi, yi), gi) in v.iter_mut().zip(&y).zip(&grad) {
            *vi = yi - step * gi;
        }
        problem.prox_full_into(&v, step, &mut x_new);

        // Gradient-based restart: drop momentum when it points uphill.
        let uphill: f64 = y
            .iter()
            .zip(&x_new)
            .zip(&x)
            .map(|((yi, xn), xo)| (yi - xn) * (xn - xo))
            .sum();
        if uphill > 0.0 {
            t = 1.0;
            y.copy_from_slice(&x_new);
        } else {
            let t_next = 0.5 * (1.0 + math::sqrt(1.0 + 4.0 * t * t));
            let w = (t - 1.0) / t_next;
            for ((yi, xn), xo) in y.iter_mut().zip(&x_new).zip(&x) {
                *yi = xn + w * (xn - xo);
            }
            t = t_next;
        }
        core::mem::swap(&mut x, &mut x_new);

        let res = math::sqrt(audit_residual_sq(problem, &x, &mut scratch));
        if res < best_res {
            best_res = res;
            best.copy_from_slice(&x);
        }
    }
    let f_star = problem.objective_unchecked(&best);
    Ok(ReferenceSolution {
        x_star: best,
        f_star,
        residual: best_res,
        iterations_used: used,
        converged: best_res <= tol,
    })
}
