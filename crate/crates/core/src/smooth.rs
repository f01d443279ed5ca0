//! Smooth parts used by the instance library.

use alloc::vec::Vec;
use core::ops::Range;

use crate::error::{check_len, contract, Result};
use crate::linalg::Matrix;
use crate::math;
use crate::problem::SmoothFunction;

/// `f(x) = ½ xᵀQx − bᵀx` with symmetric positive semidefinite `Q`.
#[derive(Debug, Clone)]
pub struct Quadratic {
    q: Matrix,
    b: Vec<f64>,
}

impl Quadratic {
    pub fn new(q: Matrix, b: Vec<f64>) -> Result<Self> {
        if q.rows() != q.cols() {
            return Err(contract("quadratic form needs a square matrix"));
        }
        check_len(q.rows(), b.len())?;
        Ok(Self { q, b })
    }

    pub fn hessian(&self) -> &Matrix {
        &self.q
    }

    pub fn linear_term(&self) -> &[f64] {
        &self.b
    }
}

impl SmoothFunction for Quadratic {
    fn dim(&self) -> usize {
        self.b.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let qx = self.q.matvec(x);
        0.5 * math::dot(x, &qx) - math::dot(&self.b, x)
    }

    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        self.q.matvec_into(x, out);
        math::axpy(-1.0, &self.b, out);
    }

    fn block_gradient_into(&self, x: &[f64], block: Range<usize>, out: &mut [f64]) {
        for (o, i) in out.iter_mut().zip(block) {
            *o = math::dot(self.q.row(i), x) - self.b[i];
        }
    }
}

/// `f(x) = ½ ‖P(x − c)‖²`. With rank-deficient `P` the minimizers form the
/// affine set `c + ker P` and `f` is not coercive.
#[derive(Debug, Clone)]
pub struct FactoredQuadratic {
    p: Matrix,
    center: Vec<f64>,
}

impl FactoredQuadratic {
    pub fn new(p: Matrix, center: Vec<f64>) -> Result<Self> {
        check_len(p.cols(), center.len())?;
        Ok(Self { p, center })
    }

    pub fn factor(&self) -> &Matrix {
        &self.p
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    fn residual(&self, x: &[f64]) -> Vec<f64> {
        let d = math::sub(x, &self.center);
        self.p.matvec(&d)
    }
}

impl SmoothFunction for FactoredQuadratic {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        0.5 * math::norm_sq(&self.residual(x))
    }

    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        let r = self.residual(x);
        self.p.matvec_t_into(&r, out);
    }

    fn block_gradient_into(&self, x: &[f64], block: Range<usize>, out: &mut [f64]) {
        let r = self.residual(x);
        for (o, j) in out.iter_mut().zip(block) {
            *o = (0..self.p.rows()).map(|i| self.p[(i, j)] * r[i]).sum();
        }
    }
}

/// `f(x) = ½ ‖Ax − b‖²`
#[derive(Debug, Clone)]
pub struct LeastSquares {
    a: Matrix,
    b: Vec<f64>,
}

impl LeastSquares {
    pub fn new(a: Matrix, b: Vec<f64>) -> Result<Self> {
        check_len(a.rows(), b.len())?;
        Ok(Self { a, b })
    }

    pub fn design(&self) -> &Matrix {
        &self.a
    }

    pub fn target(&self) -> &[f64] {
        &self.b
    }

    fn residual(&self, x: &[f64]) -> Vec<f64> {
        let mut r = self.a.matvec(x);
        math::axpy(-1.0, &self.b, &mut r);
        r
    }
}

impl SmoothFunction for LeastSquares {
    fn dim(&self) -> usize {
        self.a.cols()
    }

    fn value(&self, x: &[f64]) -> f64 {
        0.5 * math::norm_sq(&self.residual(x))
    }

    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        let r = self.residual(x);
        self.a.matvec_t_into(&r, out);
    }

    fn block_gradient_into(&self, x: &[f64], block: Range<usize>, out: &mut [f64]) {
        let r = self.residual(x);
        out.iter_mut().for_each(|o| *o = 0.0);
        for (i, ri) in r.iter().enumerate() {
            math::axpy(*ri, &self.a.row(i)[block.clone()], out);
        }
    }
}

/// Mean logistic loss `f(x) = (1/p) Σ_i log(1 + exp(−y_i a_iᵀx))`, labels `±1`.
#[derive(Debug, Clone)]
pub struct Logistic {
    a: Matrix,
    labels: Vec<f64>,
}

impl Logistic {
    pub fn new(a: Matrix, labels: Vec<f64>) -> Result<Self> {
        check_len(a.rows(), labels.len())?;
        if labels.iter().any(|&y| y != 1.0 && y != -1.0) {
            return Err(contract("logistic labels must be +1 or -1"));
        }
        if a.rows() == 0 {
            return Err(contract("logistic loss needs at least one sample"));
        }
        Ok(Self { a, labels })
    }

    pub fn design(&self) -> &Matrix {
        &self.a
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    /// `‖A‖² / (4p)`, the curvature bound of the mean logistic loss.
    pub fn lipschitz_from_norm_sq(&self, a_norm_sq: f64) -> f64 {
        a_norm_sq / (4.0 * self.a.rows() as f64)
    }

    fn weights(&self, x: &[f64]) -> Vec<f64> {
        // d/dz softplus(-y z) = -y σ(-y z)
        let p = self.a.rows() as f64;
        let margins = self.a.matvec(x);
        margins
            .iter()
            .zip(&self.labels)
            .map(|(m, y)| -y * math::sigmoid(-y * m) / p)
            .collect()
    }
}

impl SmoothFunction for Logistic {
    fn dim(&self) -> usize {
        self.a.cols()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let margins = self.a.matvec(x);
        let total: f64 = margins
            .iter()
            .zip(&self.labels)
            .map(|(m, y)| math::softplus(-y * m))
            .sum();
        total / self.a.rows() as f64
    }

    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        let w = self.weights(x);
        self.a.matvec_t_into(&w, out);
    }

    fn block_gradient_into(&self, x: &[f64], block: Range<usize>, out: &mut [f64]) {
        let w = self.weights(x);
        out.iter_mut().for_each(|o| *o = 0.0);
        for (i, wi) in w.iter().enumerate() {
            math::axpy(*wi, &self.a.row(i)[block.clone()], out);
        }
    }
}

/// Separable `f(x) = Σ_j ½ d_j (x_j − c_j)²`; handy for oracles where
/// coordinates must not interact.
#[derive(Debug, Clone)]
pub struct DiagonalQuadratic {
    diag: Vec<f64>,
    center: Vec<f64>,
}

impl DiagonalQuadratic {
    pub fn new(diag: Vec<f64>, center: Vec<f64>) -> Result<Self> {
        check_len(diag.len(), center.len())?;
        if diag.iter().any(|d| !(*d >= 0.0)) {
            return Err(contract("diagonal curvature must be nonnegative"));
        }
        Ok(Self { diag, center })
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }
}

impl SmoothFunction for DiagonalQuadratic {
    fn dim(&self) -> usize {
        self.diag.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.diag
            .iter()
            .zip(x.iter().zip(&self.center))
            .map(|(d, (xi, ci))| 0.5 * d * (xi - ci) * (xi - ci))
            .sum()
    }

    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        for (o, (d, (xi, ci))) in out.iter_mut().zip(self.diag.iter().zip(x.iter().zip(&self.center))) {
            *o = d * (xi - ci);
        }
    }

    fn block_gradient_into(&self, x: &[f64], block: Range<usize>, out: &mut [f64]) {
        for (o, j) in out.iter_mut().zip(block) {
            *o = self.diag[j] * (x[j] - self.center[j]);
        }
    }
}
