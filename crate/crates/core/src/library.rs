//! Seeded test instances.
//!
//! * `quadratic`: `½xᵀQx − bᵀx`, `Q = U diag(λ) Uᵀ` with `U` random
//!   orthogonal and `λ` log-spaced on `[1/conditioning, 1]`.
//! * `quadratic_l1`: the same plus `λ‖x‖₁`.
//! * `lasso`: `½‖Ax − b‖² + λ‖x‖₁` with `A` i.i.d. standard normal
//!   (`rows × n`), `b = A x_true + 0.01·noise` and a planted 10%-sparse
//!   `x_true`.
//! * `logistic_l1`: mean logistic loss on standard normal features with
//!   labels `sign(a_iᵀw + 0.1·noise)`, plus `λ‖x‖₁`.
//! * `noncoercive_quadratic`: `½‖P(x − c)‖²` with `PᵀP` of rank
//!   `n − rank_deficiency`, so `argmin F = c + ker P` is an affine subspace.
//!
//! Quadratic kinds carry `ν = λ_min⁺/2`, the largest constant with
//! `F(x) − min F ≥ ν‖x − x̄‖²`, and a closed-form solution projection.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{contract, Result};
use crate::linalg::{from_eigen, max_eigenvalue, random_orthogonal, spectral_norm_sq, symmetric_eigen, Matrix};
use crate::math;
use crate::problem::{BlockPartition, CompositeProblem, SolutionSet};
use crate::prox::ProxKind;
use crate::reference::{solve_reference, ReferenceSolution, DEFAULT_MAX_ITERS, DEFAULT_TOL};
use crate::rng::SeededRng;
use crate::smooth::{FactoredQuadratic, LeastSquares, Logistic, Quadratic};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ProblemKind {
    Quadratic,
    QuadraticL1,
    Lasso,
    LogisticL1,
    /// A constructed example: minimizers exist but form an affine set, so F is not coercive.
    NoncoerciveQuadratic,
}

impl ProblemKind {
    pub fn is_quadratic_family(self) -> bool {
        matches!(
            self,
            ProblemKind::Quadratic | ProblemKind::QuadraticL1 | ProblemKind::NoncoerciveQuadratic
        )
    }

    fn has_data_matrix(self) -> bool {
        matches!(self, ProblemKind::Lasso | ProblemKind::LogisticL1)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct InstanceSpec {
    pub kind: ProblemKind,
    pub n: usize,
    /// Sample count `p` for lasso / logistic; defaults to `4n`.
    #[cfg_attr(feature = "serde", serde(default))]
    pub rows: Option<usize>,
    #[cfg_attr(feature = "serde", serde(default = "default_lambda"))]
    pub reg_lambda: f64,
    #[cfg_attr(feature = "serde", serde(default = "default_blocks"))]
    pub blocks: usize,
    #[cfg_attr(feature = "serde", serde(default))]
    pub seed: u64,
    /// `λ_max/λ_min⁺` for the quadratic kinds.
    #[cfg_attr(feature = "serde", serde(default = "default_conditioning"))]
    pub conditioning: f64,
    /// Dimension of `ker P` for the noncoercive kind; defaults to `n/4`.
    #[cfg_attr(feature = "serde", serde(default))]
    pub rank_deficiency: Option<usize>,
}

#[cfg(feature = "serde")]
fn default_lambda() -> f64 {
    0.1
}

#[cfg(feature = "serde")]
fn default_blocks() -> usize {
    1
}

#[cfg(feature = "serde")]
fn default_conditioning() -> f64 {
    10.0
}

impl InstanceSpec {
    pub fn new(kind: ProblemKind, n: usize) -> Self {
        Self {
            kind,
            n,
            rows: None,
            reg_lambda: 0.1,
            blocks: 1,
            seed: 0,
            conditioning: 10.0,
            rank_deficiency: None,
        }
    }

    pub fn with_rows(mut self, rows: usize) -> Self {
        self.rows = Some(rows);
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.reg_lambda = lambda;
        self
    }

    pub fn with_blocks(mut self, m: usize) -> Self {
        self.blocks = m;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_conditioning(mut self, conditioning: f64) -> Self {
        self.conditioning = conditioning;
        self
    }

    pub fn with_rank_deficiency(mut self, d: usize) -> Self {
        self.rank_deficiency = Some(d);
        self
    }

    pub fn sample_rows(&self) -> usize {
        self.rows.unwrap_or(4 * self.n)
    }

    pub fn kernel_dim(&self) -> usize {
        self.rank_deficiency.unwrap_or(self.n / 4)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(contract("instance dimension must be positive"));
        }
        if self.blocks == 0 || !self.n.is_multiple_of(self.blocks) {
            return Err(contract("block count must divide n"));
        }
        if !(self.reg_lambda >= 0.0 && self.reg_lambda.is_finite()) {
            return Err(contract("reg_lambda must be finite and >= 0"));
        }
        if !(self.conditioning >= 1.0 && self.conditioning.is_finite()) {
            return Err(contract("conditioning must be finite and >= 1"));
        }
        if self.kind.has_data_matrix() && self.sample_rows() == 0 {
            return Err(contract("data problems need at least one row"));
        }
        if self.kind == ProblemKind::NoncoerciveQuadratic {
            let d = self.kernel_dim();
            if d == 0 || d >= self.n {
                return Err(contract("rank deficiency must lie in [1, n)"));
            }
        }
        Ok(())
    }
}

/// Builds the instance and attaches `F*` (and the minimizer where it is the
/// solution set) from a reference solve when no closed form exists.
pub fn make_instance(spec: &InstanceSpec) -> Result<CompositeProblem> {
    let problem = make_instance_uncertified(spec)?;
    if problem.f_star().is_some() {
        return Ok(problem);
    }
    let reference = reference_for(&problem)?;
    Ok(attach_reference(spec, problem, &reference))
}

/// Reference solve with the library's default accuracy: `‖S_{1/L}‖` below
/// `1e-12` relative to its value at the origin.
pub fn reference_for(problem: &CompositeProblem) -> Result<ReferenceSolution> {
    let origin = vec![0.0; problem.dim()];
    let mut scratch = vec![0.0; problem.dim()];
    let scale = math::sqrt(crate::solver::audit_residual_sq(problem, &origin, &mut scratch)).max(1.0);
    solve_reference(problem, DEFAULT_TOL * scale, DEFAULT_MAX_ITERS)
}

/// Stores `F*` (and, for `quadratic_l1`, the unique minimizer) on the problem.
pub fn attach_reference(spec: &InstanceSpec, problem: CompositeProblem, reference: &ReferenceSolution) -> CompositeProblem {
    let problem = problem.with_f_star(reference.f_star);
    if spec.kind == ProblemKind::QuadraticL1 {
        // strongly convex: the minimizer is unique
        problem
            .with_solution_set(SolutionSet::Point(reference.x_star.clone()))
            .expect("reference minimizer has the problem dimension")
    } else {
        problem
    }
}

/// Builds the instance without any reference solve. Kinds whose `F*` has a
/// closed form (`quadratic`, `noncoercive_quadratic`) come back complete.
pub fn make_instance_uncertified(spec: &InstanceSpec) -> Result<CompositeProblem> {
    spec.validate()?;
    let mut rng = SeededRng::new(spec.seed);
    let blocks = BlockPartition::equal(spec.n, spec.blocks)?;
    match spec.kind {
        ProblemKind::Quadratic | ProblemKind::QuadraticL1 => quadratic(spec, blocks, &mut rng),
        ProblemKind::Lasso => lasso(spec, blocks, &mut rng),
        ProblemKind::LogisticL1 => logistic(spec, blocks, &mut rng),
        ProblemKind::NoncoerciveQuadratic => noncoercive(spec, blocks, &mut rng),
    }
}

/// `count` values log-spaced from `1` down to `1/conditioning`, descending.
pub fn log_spectrum(count: usize, conditioning: f64) -> Vec<f64> {
    if count == 1 {
        return vec![1.0];
    }
    (0..count)
        .map(|j| math::powf(conditioning, -(j as f64) / (count - 1) as f64))
        .collect()
}

fn block_lipschitz_from_hessian(h: &Matrix, blocks: &BlockPartition) -> Vec<f64> {
    blocks
        .ranges()
        .iter()
        .map(|r| max_eigenvalue(&h.principal_block(r.start, r.end)))
        .collect()
}

fn l1_regularizers(spec: &InstanceSpec) -> Vec<ProxKind> {
    vec![ProxKind::L1 { lambda: spec.reg_lambda }; spec.blocks]
}

/// Largest eigenvalue of `AᵀA`: dense Jacobi up to 256 columns, power
/// iteration to relative `1e-13` beyond.
fn gram_max_eigenvalue(a: &Matrix) -> f64 {
    if a.cols() <= 256 {
        max_eigenvalue(&a.gram())
    } else {
        spectral_norm_sq(a, 1e-13)
    }
}

fn quadratic(spec: &InstanceSpec, blocks: BlockPartition, rng: &mut SeededRng) -> Result<CompositeProblem> {
    let n = spec.n;
    let u = random_orthogonal(n, rng);
    let lambdas = log_spectrum(n, spec.conditioning);
    let q = from_eigen(&u, &lambdas);
    let b: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
    let l = lambdas[0];
    let lam_min = lambdas[n - 1];
    let block_l = block_lipschitz_from_hessian(&q, &blocks);
    let smooth = Arc::new(Quadratic::new(q, b.clone())?);

    if spec.kind == ProblemKind::Quadratic {
        let inv: Vec<f64> = lambdas.iter().map(|v| 1.0 / v).collect();
        let x_star = from_eigen(&u, &inv).matvec(&b);
        let problem = CompositeProblem::new(smooth, blocks, vec![ProxKind::Zero; spec.blocks], l, block_l)?;
        let f_star = problem.objective_unchecked(&x_star).min(-0.5 * math::dot(&b, &x_star));
        problem
            .with_f_star(f_star)
            .with_nu(0.5 * lam_min)?
            .with_solution_set(SolutionSet::Point(x_star))
            .map(|p| p.with_coercive(true))
    } else {
        CompositeProblem::new(smooth, blocks, l1_regularizers(spec), l, block_l)?
            .with_nu(0.5 * lam_min)
            .map(|p| p.with_coercive(true))
    }
}

fn lasso(spec: &InstanceSpec, blocks: BlockPartition, rng: &mut SeededRng) -> Result<CompositeProblem> {
    let (n, p) = (spec.n, spec.sample_rows());
    let a = Matrix::random_normal(p, n, rng);
    let support = n.div_ceil(10);
    let mut x_true = vec![0.0; n];
    let mut placed = 0;
    while placed < support {
        let j = rng.index(n);
        if x_true[j] == 0.0 {
            x_true[j] = rng.normal();
            if x_true[j] != 0.0 {
                placed += 1;
            }
        }
    }
    let mut b = a.matvec(&x_true);
    for bi in b.iter_mut() {
        *bi += 0.01 * rng.normal();
    }
    let l = gram_max_eigenvalue(&a);
    let block_l: Vec<f64> = blocks
        .ranges()
        .iter()
        .map(|r| gram_max_eigenvalue(&a.column_block(r.start, r.end)).min(l))
        .collect();
    let smooth = Arc::new(LeastSquares::new(a, b)?);
    Ok(CompositeProblem::new(smooth, blocks, l1_regularizers(spec), l, block_l)?
        .with_coercive(spec.reg_lambda > 0.0 || p >= n))
}

fn logistic(spec: &InstanceSpec, blocks: BlockPartition, rng: &mut SeededRng) -> Result<CompositeProblem> {
    let (n, p) = (spec.n, spec.sample_rows());
    let a = Matrix::random_normal(p, n, rng);
    let w: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
    let labels: Vec<f64> = a
        .matvec(&w)
        .iter()
        .map(|m| if m + 0.1 * rng.normal() >= 0.0 { 1.0 } else { -1.0 })
        .collect();
    let scale = 1.0 / (4.0 * p as f64);
    let l = gram_max_eigenvalue(&a) * scale;
    let block_l: Vec<f64> = blocks
        .ranges()
        .iter()
        .map(|r| (gram_max_eigenvalue(&a.column_block(r.start, r.end)) * scale).min(l))
        .collect();
    let smooth = Arc::new(Logistic::new(a, labels)?);
    Ok(CompositeProblem::new(smooth, blocks, l1_regularizers(spec), l, block_l)?.with_coercive(spec.reg_lambda > 0.0))
}

fn noncoercive(spec: &InstanceSpec, blocks: BlockPartition, rng: &mut SeededRng) -> Result<CompositeProblem> {
    let n = spec.n;
    let r = n - spec.kernel_dim();
    let u = random_orthogonal(n, rng);
    let lambdas = log_spectrum(r, spec.conditioning);
    // P = diag(√λ) U_rᵀ, so PᵀP = U_r diag(λ) U_rᵀ
    let p = Matrix::from_fn(r, n, |i, j| math::sqrt(lambdas[i]) * u[(j, i)]);
    let center: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
    let null_basis = Matrix::from_fn(n, n - r, |i, j| u[(i, r + j)]);
    let hessian = p.gram();
    let block_l = block_lipschitz_from_hessian(&hessian, &blocks);
    let smooth = Arc::new(FactoredQuadratic::new(p, center.clone())?);
    CompositeProblem::new(smooth, blocks, vec![ProxKind::Zero; spec.blocks], lambdas[0], block_l)?
        .with_f_star(0.0)
        .with_nu(0.5 * lambdas[r - 1])?
        .with_solution_set(SolutionSet::Affine {
            anchor: center,
            basis: null_basis,
        })
        .map(|p| p.with_coercive(false))
}

/// A unit vector in `ker P` of a noncoercive instance.
pub fn null_direction(problem: &CompositeProblem) -> Option<Vec<f64>> {
    match problem.solution_set()? {
        SolutionSet::Affine { basis, .. } if basis.cols() > 0 => Some(basis.column(0)),
        _ => None,
    }
}

/// Eigenvalues of the quadratic part's Hessian, ascending (quadratic kinds).
pub fn hessian_spectrum(problem: &CompositeProblem, spec: &InstanceSpec) -> Option<Vec<f64>> {
    if !spec.kind.is_quadratic_family() {
        return None;
    }
    let n = problem.dim();
    let mut h = Matrix::zeros(n, n);
    let mut e = vec![0.0; n];
    let mut g0 = vec![0.0; n];
    let mut g = vec![0.0; n];
    problem.smooth().gradient_into(&e, &mut g0);
    for j in 0..n {
        e[j] = 1.0;
        problem.smooth().gradient_into(&e, &mut g);
        for i in 0..n {
            h[(i, j)] = g[i] - g0[i];
        }
        e[j] = 0.0;
    }
    let (vals, _) = symmetric_eigen(&h);
    Some(vals)
}
