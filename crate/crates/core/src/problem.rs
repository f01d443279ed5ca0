//! The composite problem `F(x) = f(x) + Σ_i g_i(x_i)` with block structure.
//!
//! Blocks are 0-based and contiguous. The smooth part is any
//! [`SmoothFunction`]; the nonsmooth part is one [`ProxKind`] per block, so
//! the single-block problem is just `m = 1`.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::Range;

use crate::error::{check_len, contract, Error, Result};
use crate::linalg::Matrix;
use crate::math;
use crate::prox::ProxKind;

/// Smooth convex part `f` with a Lipschitz gradient.
pub trait SmoothFunction: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    fn gradient_into(&self, x: &[f64], out: &mut [f64]);

    /// `∇_B f(x)` for the coordinate range `block`. The default slices the
    /// full gradient; implementations override it when the block is cheaper.
    fn block_gradient_into(&self, x: &[f64], block: Range<usize>, out: &mut [f64]) {
        let mut full = vec![0.0; self.dim()];
        self.gradient_into(x, &mut full);
        out.copy_from_slice(&full[block]);
    }
}

/// Ordered partition of `0..n` into contiguous, nonempty ranges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockPartition {
    ranges: Vec<Range<usize>>,
}

impl BlockPartition {
    /// Blocks of the given sizes, laid out left to right.
    pub fn from_sizes(sizes: &[usize]) -> Result<Self> {
        if sizes.is_empty() {
            return Err(contract("a partition needs at least one block"));
        }
        let mut ranges = Vec::with_capacity(sizes.len());
        let mut lo = 0;
        for &s in sizes {
            if s == 0 {
                return Err(contract("blocks must be nonempty"));
            }
            ranges.push(lo..lo + s);
            lo += s;
        }
        Ok(Self { ranges })
    }

    /// `m` equal blocks of `0..n`; `m` must divide `n`.
    pub fn equal(n: usize, m: usize) -> Result<Self> {
        if m == 0 || n == 0 || !n.is_multiple_of(m) {
            return Err(contract("block count must divide the dimension"));
        }
        Self::from_sizes(&vec![n / m; m])
    }

    pub fn single(n: usize) -> Result<Self> {
        Self::equal(n, 1)
    }

    #[inline]
    pub fn count(&self) -> usize {
        self.ranges.len()
    }

    pub fn dim(&self) -> usize {
        self.ranges.last().map_or(0, |r| r.end)
    }

    #[inline]
    pub fn range(&self, i: usize) -> Range<usize> {
        self.ranges[i].clone()
    }

    pub fn ranges(&self) -> &[Range<usize>] {
        &self.ranges
    }

    /// `‖x_i − y_i‖²` for every block.
    pub fn block_dist_sq(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        self.ranges
            .iter()
            .map(|r| math::dist_sq(&x[r.clone()], &y[r.clone()]))
            .collect()
    }
}

/// The set `argmin F`, when it is known in closed form.
#[derive(Debug, Clone, PartialEq)]
pub enum SolutionSet {
    /// Unique minimizer.
    Point(Vec<f64>),
    /// `anchor + span(basis)`, with orthonormal basis columns.
    Affine { anchor: Vec<f64>, basis: Matrix },
}

impl SolutionSet {
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        match self {
            SolutionSet::Point(p) => p.clone(),
            SolutionSet::Affine { anchor, basis } => {
                let diff = math::sub(x, anchor);
                let coeffs = basis.matvec_t(&diff);
                let mut out = anchor.clone();
                math::axpy(1.0, &basis.matvec(&coeffs), &mut out);
                out
            }
        }
    }
}

/// Pair `(x^k, x^{k−1})` consumed by the inertial step.
#[derive(Debug, Clone, PartialEq)]
pub struct IterateState {
    pub x_curr: Vec<f64>,
    pub x_prev: Vec<f64>,
    pub k: usize,
}

impl IterateState {
    /// Start at `x0` with `x^{−1} = x^0`.
    pub fn new(x0: &[f64]) -> Self {
        Self {
            x_curr: x0.to_vec(),
            x_prev: x0.to_vec(),
            k: 0,
        }
    }

    /// Start at `x0` with an explicit `x^{−1}`.
    pub fn with_previous(x0: &[f64], x_minus1: &[f64]) -> Result<Self> {
        check_len(x0.len(), x_minus1.len())?;
        Ok(Self {
            x_curr: x0.to_vec(),
            x_prev: x_minus1.to_vec(),
            k: 0,
        })
    }

    /// Shift in a new iterate.
    pub fn advance(&mut self, next: Vec<f64>) {
        self.x_prev = core::mem::replace(&mut self.x_curr, next);
        self.k += 1;
    }

    pub fn step_sq(&self) -> f64 {
        math::dist_sq(&self.x_curr, &self.x_prev)
    }
}

#[derive(Clone)]
pub struct CompositeProblem {
    smooth: Arc<dyn SmoothFunction>,
    blocks: BlockPartition,
    regularizers: Vec<ProxKind>,
    lipschitz: f64,
    block_lipschitz: Vec<f64>,
    f_star: Option<f64>,
    nu: Option<f64>,
    solution_set: Option<SolutionSet>,
    coercive: Option<bool>,
}

impl fmt::Debug for CompositeProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CompositeProblem")
            .field("dim", &self.dim())
            .field("blocks", &self.blocks.count())
            .field("lipschitz", &self.lipschitz)
            .field("block_lipschitz", &self.block_lipschitz)
            .field("f_star", &self.f_star)
            .field("nu", &self.nu)
            .finish_non_exhaustive()
    }
}

impl CompositeProblem {
    /// Validates the block structure and Lipschitz constants.
    ///
    /// `block_lipschitz[i] <= lipschitz` is enforced with a `1e-12` relative
    /// allowance for the rounding in constants computed by power iteration.
    pub fn new(
        smooth: Arc<dyn SmoothFunction>,
        blocks: BlockPartition,
        regularizers: Vec<ProxKind>,
        lipschitz: f64,
        block_lipschitz: Vec<f64>,
    ) -> Result<Self> {
        check_len(smooth.dim(), blocks.dim())?;
        check_len(blocks.count(), regularizers.len())?;
        check_len(blocks.count(), block_lipschitz.len())?;
        if !(lipschitz > 0.0 && lipschitz.is_finite()) {
            return Err(contract("global Lipschitz constant must be positive and finite"));
        }
        for (i, &li) in block_lipschitz.iter().enumerate() {
            if !(li > 0.0 && li.is_finite()) {
                return Err(contract("block Lipschitz constants must be positive"));
            }
            if li > lipschitz * (1.0 + 1e-12) {
                return Err(Error::Contract(alloc::format!(
                    "block {i}: L_i = {li} exceeds global L = {lipschitz}"
                )));
            }
        }
        for (i, g) in regularizers.iter().enumerate() {
            g.validate(blocks.range(i).len())?;
        }
        Ok(Self {
            smooth,
            blocks,
            regularizers,
            lipschitz,
            block_lipschitz,
            f_star: None,
            nu: None,
            solution_set: None,
            coercive: None,
        })
    }

    /// Single-block convenience constructor (`L_1 = L`).
    pub fn single_block(smooth: Arc<dyn SmoothFunction>, g: ProxKind, lipschitz: f64) -> Result<Self> {
        let blocks = BlockPartition::single(smooth.dim())?;
        Self::new(smooth, blocks, vec![g], lipschitz, vec![lipschitz])
    }

    pub fn with_f_star(mut self, f_star: f64) -> Self {
        self.f_star = Some(f_star);
        self
    }

    pub fn with_nu(mut self, nu: f64) -> Result<Self> {
        if !(nu > 0.0) {
            return Err(contract("nu must be positive"));
        }
        self.nu = Some(nu);
        Ok(self)
    }

    pub fn with_solution_set(mut self, set: SolutionSet) -> Result<Self> {
        match &set {
            SolutionSet::Point(p) => check_len(self.dim(), p.len())?,
            SolutionSet::Affine { anchor, basis } => {
                check_len(self.dim(), anchor.len())?;
                check_len(self.dim(), basis.rows())?;
            }
        }
        self.solution_set = Some(set);
        Ok(self)
    }

    pub fn with_coercive(mut self, coercive: bool) -> Self {
        self.coercive = Some(coercive);
        self
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.blocks.dim()
    }

    #[inline]
    pub fn blocks(&self) -> &BlockPartition {
        &self.blocks
    }

    #[inline]
    pub fn block_count(&self) -> usize {
        self.blocks.count()
    }

    #[inline]
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn block_lipschitz(&self) -> &[f64] {
        &self.block_lipschitz
    }

    pub fn f_star(&self) -> Option<f64> {
        self.f_star
    }

    pub fn nu(&self) -> Option<f64> {
        self.nu
    }

    pub fn solution_set(&self) -> Option<&SolutionSet> {
        self.solution_set.as_ref()
    }

    pub fn coercive(&self) -> Option<bool> {
        self.coercive
    }

    pub fn regularizers(&self) -> &[ProxKind] {
        &self.regularizers
    }

    pub fn smooth(&self) -> &dyn SmoothFunction {
        &*self.smooth
    }

    /// `true` when every block regularizer is `g_i ≡ 0`.
    pub fn is_smooth_only(&self) -> bool {
        self.regularizers.iter().all(|g| matches!(g, ProxKind::Zero))
    }

    pub fn smooth_value(&self, x: &[f64]) -> Result<f64> {
        check_len(self.dim(), x.len())?;
        Ok(self.smooth.value(x))
    }

    /// `Σ_i g_i(x_i)`, possibly `+∞`.
    pub fn nonsmooth_value(&self, x: &[f64]) -> Result<f64> {
        check_len(self.dim(), x.len())?;
        Ok(self.nonsmooth_value_unchecked(x))
    }

    pub(crate) fn nonsmooth_value_unchecked(&self, x: &[f64]) -> f64 {
        self.regularizers
            .iter()
            .zip(self.blocks.ranges())
            .map(|(g, r)| g.value(&x[r.clone()]))
            .sum()
    }

    /// `F(x) = f(x) + Σ_i g_i(x_i)`.
    pub fn objective(&self, x: &[f64]) -> Result<f64> {
        check_len(self.dim(), x.len())?;
        Ok(self.objective_unchecked(x))
    }

    pub(crate) fn objective_unchecked(&self, x: &[f64]) -> f64 {
        self.smooth.value(x) + self.nonsmooth_value_unchecked(x)
    }

    pub fn grad_f(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.dim(), x.len())?;
        let mut out = vec![0.0; self.dim()];
        self.smooth.gradient_into(x, &mut out);
        Ok(out)
    }

    pub(crate) fn grad_into(&self, x: &[f64], out: &mut [f64]) {
        self.smooth.gradient_into(x, out);
    }

    /// Block `i` of `∇f(x)`.
    pub fn block_grad_f(&self, x: &[f64], i: usize) -> Result<Vec<f64>> {
        check_len(self.dim(), x.len())?;
        self.check_block(i)?;
        let r = self.blocks.range(i);
        let mut out = vec![0.0; r.len()];
        self.smooth.block_gradient_into(x, r, &mut out);
        Ok(out)
    }

    pub(crate) fn block_grad_into(&self, x: &[f64], i: usize, out: &mut [f64]) {
        self.smooth.block_gradient_into(x, self.blocks.range(i), out);
    }

    /// `prox_{γ g_i}(v)` for block `i`.
    pub fn prox_block(&self, i: usize, v: &[f64], gamma: f64) -> Result<Vec<f64>> {
        self.check_block(i)?;
        check_len(self.blocks.range(i).len(), v.len())?;
        if !(gamma > 0.0) {
            return Err(contract("prox stepsize must be positive"));
        }
        Ok(self.regularizers[i].prox(v, gamma))
    }

    pub(crate) fn prox_block_into(&self, i: usize, v: &[f64], gamma: f64, out: &mut [f64]) {
        self.regularizers[i].prox_into(v, gamma, out);
    }

    /// Blockwise prox of the full vector with a common stepsize.
    pub(crate) fn prox_full_into(&self, v: &[f64], gamma: f64, out: &mut [f64]) {
        for (g, r) in self.regularizers.iter().zip(self.blocks.ranges()) {
            g.prox_into(&v[r.clone()], gamma, &mut out[r.clone()]);
        }
    }

    /// Max over coordinates of `|∇_j f − FD_j| / max(1, |∇_j f|)`, with central
    /// differences of step `h`.
    pub fn check_gradient_fd(&self, x: &[f64], h: f64) -> Result<f64> {
        check_len(self.dim(), x.len())?;
        if !(h > 0.0) {
            return Err(contract("finite-difference step must be positive"));
        }
        let g = self.grad_f(x)?;
        let mut probe = x.to_vec();
        let mut worst: f64 = 0.0;
        for j in 0..x.len() {
            probe[j] = x[j] + h;
            let fp = self.smooth.value(&probe);
            probe[j] = x[j] - h;
            let fm = self.smooth.value(&probe);
            probe[j] = x[j];
            let fd = (fp - fm) / (2.0 * h);
            worst = worst.max((g[j] - fd).abs() / g[j].abs().max(1.0));
        }
        Ok(worst)
    }

    /// Euclidean projection onto `argmin F`.
    pub fn solution_project(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.dim(), x.len())?;
        self.solution_set
            .as_ref()
            .map(|s| s.project(x))
            .ok_or(Error::Unsupported("problem has no solution-set oracle"))
    }

    fn check_block(&self, i: usize) -> Result<()> {
        if i < self.block_count() {
            Ok(())
        } else {
            Err(Error::BlockOutOfRange {
                index: i,
                count: self.block_count(),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smooth::Quadratic;

    fn half_norm_sq(n: usize, g: ProxKind) -> CompositeProblem {
        let q = Quadratic::new(Matrix::identity(n), vec![0.0; n]).unwrap();
        CompositeProblem::single_block(Arc::new(q), g, 1.0).unwrap()
    }

    #[test]
    fn objective_arithmetic() {
        let p = half_norm_sq(2, ProxKind::L1 { lambda: 1.0 });
        assert_eq!(p.objective(&[1.0, -2.0]).unwrap(), 5.5);
        assert_eq!(p.objective(&[0.0, 0.0]).unwrap(), 0.0);
        assert!(matches!(p.objective(&[1.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn identity_hessian_gradient() {
        let p = half_norm_sq(2, ProxKind::Zero);
        assert_eq!(p.grad_f(&[3.0, -1.0]).unwrap(), vec![3.0, -1.0]);
        assert_eq!(p.block_grad_f(&[3.0, -1.0], 0).unwrap(), vec![3.0, -1.0]);
        assert!(matches!(p.block_grad_f(&[3.0, -1.0], 1), Err(Error::BlockOutOfRange { .. })));
    }

    #[test]
    fn prox_block_contracts() {
        let p = half_norm_sq(1, ProxKind::L1 { lambda: 1.0 });
        assert_eq!(p.prox_block(0, &[3.0], 1.0).unwrap(), vec![2.0]);
        assert!(p.prox_block(0, &[3.0], 0.0).is_err());
        assert!(p.prox_block(0, &[3.0, 1.0], 1.0).is_err());
        let z = half_norm_sq(3, ProxKind::Zero);
        assert_eq!(z.prox_block(0, &[1.0, 2.0, 3.0], 0.7).unwrap(), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn partition_invariants() {
        assert!(BlockPartition::equal(10, 3).is_err());
        assert!(BlockPartition::from_sizes(&[2, 0, 1]).is_err());
        let b = BlockPartition::equal(12, 4).unwrap();
        assert_eq!(b.range(3), 9..12);
        assert_eq!(b.dim(), 12);
    }

    #[test]
    fn block_lipschitz_bounded_by_global() {
        let q = Quadratic::new(Matrix::identity(4), vec![0.0; 4]).unwrap();
        let blocks = BlockPartition::equal(4, 2).unwrap();
        let bad = CompositeProblem::new(
            Arc::new(q),
            blocks,
            vec![ProxKind::Zero, ProxKind::Zero],
            1.0,
            vec![1.0, 2.0],
        );
        assert!(bad.is_err());
    }

    #[test]
    fn fd_check_at_zero_is_zero() {
        let p = half_norm_sq(3, ProxKind::Zero);
        assert_eq!(p.check_gradient_fd(&[0.0; 3], 1e-5).unwrap(), 0.0);
    }

    #[test]
    fn default_previous_is_x0() {
        let s = IterateState::new(&[1.0, 2.0]);
        assert_eq!(s.x_prev, s.x_curr);
        assert_eq!(s.step_sq(), 0.0);
    }
}
