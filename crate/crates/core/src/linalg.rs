//! Dense row-major matrices and the handful of factorizations the instance
//! library needs: power iteration, cyclic Jacobi eigendecomposition and
//! random orthogonal matrices.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::rng::SeededRng;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds from row-major data. Panics if the length is wrong.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "row-major data has wrong length");
        Self { rows, cols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn random_normal(rows: usize, cols: usize, rng: &mut SeededRng) -> Self {
        Self::from_fn(rows, cols, |_, _| rng.normal())
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// `out = A x`
    pub fn matvec_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (i, o) in out.iter_mut().enumerate() {
            *o = math::dot(self.row(i), x);
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        self.matvec_into(x, &mut out);
        out
    }

    /// `out = Aᵀ y`
    pub fn matvec_t_into(&self, y: &[f64], out: &mut [f64]) {
        debug_assert_eq!(y.len(), self.rows);
        debug_assert_eq!(out.len(), self.cols);
        out.iter_mut().for_each(|o| *o = 0.0);
        for (i, &yi) in y.iter().enumerate() {
            math::axpy(yi, self.row(i), out);
        }
    }

    pub fn matvec_t(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        self.matvec_t_into(y, &mut out);
        out
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows);
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                math::axpy(a, other.row(k), dst);
            }
        }
        out
    }

    /// `AᵀA`
    pub fn gram(&self) -> Matrix {
        let mut g = Matrix::zeros(self.cols, self.cols);
        for r in 0..self.rows {
            let row = self.row(r);
            for i in 0..self.cols {
                let a = row[i];
                if a == 0.0 {
                    continue;
                }
                let out = &mut g.data[i * self.cols..(i + 1) * self.cols];
                for (o, r) in out[i..].iter_mut().zip(&row[i..]) {
                    *o += a * r;
                }
            }
        }
        for i in 0..self.cols {
            for j in 0..i {
                g.data[i * self.cols + j] = g.data[j * self.cols + i];
            }
        }
        g
    }

    /// Columns `lo..hi` as a new matrix.
    pub fn column_block(&self, lo: usize, hi: usize) -> Matrix {
        Matrix::from_fn(self.rows, hi - lo, |i, j| self[(i, lo + j)])
    }

    /// Square sub-matrix `[lo..hi, lo..hi]`.
    pub fn principal_block(&self, lo: usize, hi: usize) -> Matrix {
        Matrix::from_fn(hi - lo, hi - lo, |i, j| self[(lo + i, lo + j)])
    }
}

impl core::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl core::ops::IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Largest eigenvalue of a symmetric positive semidefinite operator of
/// dimension `n` by power iteration, stopped once successive Rayleigh
/// quotients agree to relative `rel_tol`.
pub fn power_iteration(
    n: usize,
    mut apply: impl FnMut(&[f64], &mut [f64]),
    rel_tol: f64,
    max_iters: usize,
) -> f64 {
    if n == 0 {
        return 0.0;
    }
    // Deterministic start with no special alignment to any basis vector.
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * math::sin(1.0 + i as f64)).collect();
    let nv = math::norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    let mut w = vec![0.0; n];
    let mut lambda = 0.0;
    for _ in 0..max_iters {
        apply(&v, &mut w);
        let next = math::dot(&v, &w);
        let nw = math::norm(&w);
        if nw == 0.0 {
            return 0.0;
        }
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / nw;
        }
        if (next - lambda).abs() <= rel_tol * next.abs() {
            return next.max(lambda);
        }
        lambda = next;
    }
    lambda
}

/// Spectral norm squared, `‖A‖₂² = λ_max(AᵀA)`.
pub fn spectral_norm_sq(a: &Matrix, rel_tol: f64) -> f64 {
    let mut tmp = vec![0.0; a.rows()];
    power_iteration(
        a.cols(),
        |v, out| {
            a.matvec_into(v, &mut tmp);
            a.matvec_t_into(&tmp, out);
        },
        rel_tol,
        100_000,
    )
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues in ascending order and the matching orthonormal
/// eigenvectors as the columns of the returned matrix.
pub fn symmetric_eigen(a: &Matrix) -> (Vec<f64>, Matrix) {
    assert_eq!(a.rows(), a.cols(), "symmetric_eigen needs a square matrix");
    let n = a.rows();
    let mut m = a.clone();
    let mut vecs = Matrix::identity(n);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)] * m[(i, j)])
            .sum();
        let scale: f64 = (0..n).map(|i| m[(i, i)] * m[(i, i)]).sum::<f64>() + off;
        if off <= 1e-30 * scale || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + math::sqrt(1.0 + theta * theta))
                } else {
                    -1.0 / (-theta + math::sqrt(1.0 + theta * theta))
                };
                let c = 1.0 / math::sqrt(1.0 + t * t);
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = vecs[(k, p)];
                    let vkq = vecs[(k, q)];
                    vecs[(k, p)] = c * vkp - s * vkq;
                    vecs[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].total_cmp(&m[(j, j)]));
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let sorted = Matrix::from_fn(n, n, |r, c| vecs[(r, order[c])]);
    (values, sorted)
}

/// Largest eigenvalue of a symmetric matrix via [`symmetric_eigen`].
pub fn max_eigenvalue(a: &Matrix) -> f64 {
    let (vals, _) = symmetric_eigen(a);
    vals.last().copied().unwrap_or(0.0)
}

/// Haar-ish random orthogonal matrix: modified Gram–Schmidt (applied twice)
/// on the columns of a standard normal matrix.
pub fn random_orthogonal(n: usize, rng: &mut SeededRng) -> Matrix {
    let g = Matrix::random_normal(n, n, rng);
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| g.column(j)).collect();
    for j in 0..n {
        for _pass in 0..2 {
            for k in 0..j {
                let proj = math::dot(&cols[k], &cols[j]);
                let (head, tail) = cols.split_at_mut(j);
                math::axpy(-proj, &head[k], &mut tail[0]);
            }
        }
        let nrm = math::norm(&cols[j]);
        cols[j].iter_mut().for_each(|x| *x /= nrm);
    }
    Matrix::from_fn(n, n, |i, j| cols[j][i])
}

/// `U diag(values) Uᵀ`
pub fn from_eigen(u: &Matrix, values: &[f64]) -> Matrix {
    let n = u.rows();
    let mut out = Matrix::zeros(n, n);
    for (k, &lam) in values.iter().enumerate() {
        if lam == 0.0 {
            continue;
        }
        for i in 0..n {
            let a = lam * u[(i, k)];
            for j in 0..n {
                out[(i, j)] += a * u[(j, k)];
            }
        }
    }
    // exact symmetry
    for i in 0..n {
        for j in 0..i {
            let s = 0.5 * (out[(i, j)] + out[(j, i)]);
            out[(i, j)] = s;
            out[(j, i)] = s;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_diagonalizes() {
        let a = Matrix::from_row_major(3, 3, vec![4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 1.0]);
        let (vals, vecs) = symmetric_eigen(&a);
        for (k, &lam) in vals.iter().enumerate() {
            let v = vecs.column(k);
            let av = a.matvec(&v);
            for i in 0..3 {
                assert!((av[i] - lam * v[i]).abs() < 1e-12);
            }
        }
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn orthogonal_is_orthogonal() {
        let mut rng = SeededRng::new(1);
        let q = random_orthogonal(12, &mut rng);
        let qtq = q.transpose().matmul(&q);
        for i in 0..12 {
            for j in 0..12 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((qtq[(i, j)] - e).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn power_iteration_matches_jacobi() {
        let mut rng = SeededRng::new(5);
        let a = Matrix::random_normal(30, 10, &mut rng);
        let exact = max_eigenvalue(&a.gram());
        let approx = spectral_norm_sq(&a, 1e-13);
        assert!((approx - exact).abs() <= 1e-10 * exact);
    }
}
