#![allow(dead_code)]

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use pigd_core::library::{make_instance, InstanceSpec, ProblemKind};
use pigd_core::linalg::Matrix;
use pigd_core::rng::SeededRng;
use pigd_core::smooth::{DiagonalQuadratic, Quadratic};
use pigd_core::{BlockPartition, CompositeProblem, ProxKind, SolutionSet};

/// Hessian of a quadratic smooth part, recovered column by column from
/// gradient differences `∇f(e_j) − ∇f(0)`.
pub fn dense_hessian(problem: &CompositeProblem) -> DMatrix<f64> {
    let n = problem.dim();
    let g0 = problem.grad_f(&vec![0.0; n]).unwrap();
    let mut h = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let g = problem.grad_f(&e).unwrap();
        for i in 0..n {
            h[(i, j)] = g[i] - g0[i];
        }
    }
    (&h + h.transpose()) * 0.5
}

pub fn sym_eigenvalues(h: &DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = h.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

pub fn to_dvec(x: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(x)
}

pub fn random_vec(rng: &mut SeededRng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| scale * rng.normal()).collect()
}

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Minimizes a convex scalar function on `[lo, hi]` by repeated grid
/// refinement around the best grid point.
pub fn grid_min_1d(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let (lo0, hi0) = (lo, hi);
    let (mut lo, mut hi) = (lo, hi);
    let points = 2001;
    let mut best = lo;
    for _ in 0..6 {
        let h = (hi - lo) / (points - 1) as f64;
        let mut best_val = f64::INFINITY;
        for i in 0..points {
            let z = lo + i as f64 * h;
            let v = f(z);
            if v < best_val {
                best_val = v;
                best = z;
            }
        }
        lo = (best - 2.0 * h).max(lo0);
        hi = (best + 2.0 * h).min(hi0);
    }
    best
}

/// Two-dimensional version of [`grid_min_1d`] on a square.
pub fn grid_min_2d(f: impl Fn(f64, f64) -> f64, center: (f64, f64), radius: f64) -> (f64, f64) {
    let points = 201;
    let (mut cx, mut cy) = center;
    let mut r = radius;
    for _ in 0..8 {
        let h = 2.0 * r / (points - 1) as f64;
        let mut best = (cx, cy);
        let mut best_val = f64::INFINITY;
        for i in 0..points {
            for j in 0..points {
                let (x, y) = (cx - r + i as f64 * h, cy - r + j as f64 * h);
                let v = f(x, y);
                if v < best_val {
                    best_val = v;
                    best = (x, y);
                }
            }
        }
        (cx, cy) = best;
        r = 3.0 * h;
    }
    (cx, cy)
}

/// `f = ½‖x‖² − bᵀx` with a single block and the given regularizer.
pub fn shifted_identity(b: &[f64], g: ProxKind) -> CompositeProblem {
    let n = b.len();
    let q = Quadratic::new(Matrix::identity(n), b.to_vec()).unwrap();
    CompositeProblem::single_block(Arc::new(q), g, 1.0).unwrap()
}

/// Separable `Σ ½ d_j (x_j − c_j)²` split into `m` equal blocks, each with
/// an L1 term of weight `lambda`.
pub fn separable_problem(diag: &[f64], center: &[f64], m: usize, lambda: f64) -> CompositeProblem {
    let n = diag.len();
    let blocks = BlockPartition::equal(n, m).unwrap();
    let block_l: Vec<f64> = blocks
        .ranges()
        .iter()
        .map(|r| diag[r.clone()].iter().copied().fold(0.0, f64::max))
        .collect();
    let l = diag.iter().copied().fold(0.0, f64::max);
    let smooth = DiagonalQuadratic::new(diag.to_vec(), center.to_vec()).unwrap();
    CompositeProblem::new(Arc::new(smooth), blocks, vec![ProxKind::L1 { lambda }; m], l, block_l).unwrap()
}

/// `f = ½‖x‖²` in one dimension with `F* = 0` and minimizer 0.
pub fn unit_oscillator() -> CompositeProblem {
    let q = Quadratic::new(Matrix::identity(1), vec![0.0]).unwrap();
    CompositeProblem::single_block(Arc::new(q), ProxKind::Zero, 1.0)
        .unwrap()
        .with_f_star(0.0)
        .with_solution_set(SolutionSet::Point(vec![0.0]))
        .unwrap()
}

/// One small instance of every library kind.
pub fn library_zoo() -> Vec<(InstanceSpec, CompositeProblem)> {
    let specs = [
        InstanceSpec::new(ProblemKind::Quadratic, 12).with_blocks(3).with_seed(3),
        InstanceSpec::new(ProblemKind::QuadraticL1, 12).with_blocks(4).with_seed(4),
        InstanceSpec::new(ProblemKind::Lasso, 12).with_blocks(2).with_seed(5),
        InstanceSpec::new(ProblemKind::LogisticL1, 12).with_blocks(3).with_seed(6),
        InstanceSpec::new(ProblemKind::NoncoerciveQuadratic, 12)
            .with_rank_deficiency(3)
            .with_blocks(2)
            .with_seed(7),
    ];
    specs
        .into_iter()
        .map(|s| {
            let p = make_instance(&s).unwrap();
            (s, p)
        })
        .collect()
}
