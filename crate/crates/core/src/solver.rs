//! Full-gradient, cyclic and stochastic proximal inertial gradient descent.
//!
//! Every runner records a [`Trace`]: per recorded iteration the objective,
//! the variant's Lyapunov value, the squared step, the squared prox-gradient
//! residual `‖S_{1/L}(x^k)‖²` and the slack of the variant's one-step descent
//! inequality for the step that produced `x^k`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_len, contract, Error, Result};
use crate::math;
use crate::problem::{CompositeProblem, IterateState};
use crate::rng::SeededRng;
use crate::schedule::{
    delta_coeff, gamma0_root, gamma_full, gamma_stochastic, linear_stochastic_beta, ParamSchedule, Variant,
};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub max_iters: usize,
    pub record_every: usize,
    /// Stop once `‖S_{1/L}(x^k)‖ <= stop_tol` at a recorded iteration.
    pub stop_tol: f64,
    /// Seed for the block sampler (stochastic variants only).
    pub seed: u64,
    /// Keep every recorded iterate (needed by the error-bound audits).
    pub keep_iterates: bool,
}

impl RunConfig {
    pub fn new(max_iters: usize) -> Self {
        Self {
            max_iters,
            record_every: 1,
            stop_tol: 0.0,
            seed: 0,
            keep_iterates: false,
        }
    }

    pub fn record_every(mut self, every: usize) -> Self {
        self.record_every = every;
        self
    }

    pub fn stop_tol(mut self, tol: f64) -> Self {
        self.stop_tol = tol;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn keep_iterates(mut self, keep: bool) -> Self {
        self.keep_iterates = keep;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.max_iters == 0 || self.record_every == 0 {
            return Err(contract("max_iters and record_every must be >= 1"));
        }
        if !(self.stop_tol >= 0.0) {
            return Err(contract("stop_tol must be >= 0"));
        }
        Ok(())
    }
}

/// Why a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    MaxIters,
    Converged,
}

/// Problem constants a trace needs to be audited on its own.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceMeta {
    pub variant: Variant,
    pub c: f64,
    pub lipschitz: f64,
    pub block_lipschitz: Vec<f64>,
    pub m: usize,
    pub f_star: Option<f64>,
    pub initial_objective: f64,
}

impl TraceMeta {
    /// Lyapunov value of the variant. `f_star` is subtracted when known.
    ///
    /// * full: `F + δ‖Δ‖² − F*` with `δ = ½(1/γ − L/2)`
    /// * cyclic: `F + Σ_i δ_i‖Δ_i‖² − F*` with `δ_i = ½(1/γ_i − L_i/2)`
    /// * stochastic: `F + β/(2√m γ)‖Δ‖² − F*`
    pub fn lyapunov(&self, objective: f64, beta: f64, gammas: &[f64], block_step_sq: &[f64]) -> f64 {
        let offset = self.f_star.unwrap_or(0.0);
        let inertia = match self.variant {
            Variant::Full => delta_coeff(gammas[0], self.lipschitz) * block_step_sq[0],
            Variant::Cyclic => gammas
                .iter()
                .zip(&self.block_lipschitz)
                .zip(block_step_sq)
                .map(|((g, l), s)| delta_coeff(*g, *l) * s)
                .sum(),
            Variant::Stochastic | Variant::StochasticLinear { .. } => {
                beta / (2.0 * math::sqrt(self.m as f64) * gammas[0]) * block_step_sq[0]
            }
        };
        objective + inertia - offset
    }

    /// Left-hand potential of the one-step descent inequality:
    /// `F + Σ β/(2γ_i)‖Δ_i‖²` (full/cyclic) or `F + β/(2√m γ)‖Δ‖²` (stochastic).
    pub fn potential(&self, objective: f64, beta: f64, gammas: &[f64], block_step_sq: &[f64]) -> f64 {
        let inertia: f64 = match self.variant {
            Variant::Full | Variant::Cyclic => gammas
                .iter()
                .zip(block_step_sq)
                .map(|(g, s)| beta / (2.0 * g) * s)
                .sum(),
            Variant::Stochastic | Variant::StochasticLinear { .. } => {
                beta / (2.0 * math::sqrt(self.m as f64) * gammas[0]) * block_step_sq[0]
            }
        };
        objective + inertia
    }

    /// Guaranteed decrease per unit `‖x^{k+1} − x^k‖²`:
    /// `(1−β)/γ − L/2`, `(1−c) min_i L_i/(2c)`, or `(1−β/√m)/γ − L/2`.
    pub fn decrease_coeff(&self, beta: f64, gammas: &[f64]) -> f64 {
        match self.variant {
            Variant::Full => (1.0 - beta) / gammas[0] - 0.5 * self.lipschitz,
            Variant::Cyclic => {
                let l_min = self.block_lipschitz.iter().copied().fold(f64::INFINITY, f64::min);
                (1.0 - self.c) * l_min / (2.0 * self.c)
            }
            Variant::Stochastic | Variant::StochasticLinear { .. } => {
                (1.0 - beta / math::sqrt(self.m as f64)) / gammas[0] - 0.5 * self.lipschitz
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub k: usize,
    pub objective: f64,
    pub lyapunov: f64,
    /// `‖x^k − x^{k−1}‖²`
    pub step_sq: f64,
    /// `‖S_{1/L}(x^k)‖²`
    pub residual_sq: f64,
    /// Slack of the descent inequality for the step `x^{k−1} → x^k`
    /// (0 at `k = 0`). Negative means violated.
    pub descent_slack: f64,
    /// `β_k`
    pub beta: f64,
    /// `γ_k` (one value) or `γ_{k,i}` per block for the cyclic variant.
    pub gammas: Vec<f64>,
    /// `‖x_i^k − x_i^{k−1}‖²` per block (cyclic) or `[step_sq]`.
    pub block_step_sq: Vec<f64>,
    /// `min_{1≤i≤k} ‖x^i − x^{i−1}‖²` over every iteration; `None` at `k = 0`.
    pub min_step_sq: Option<f64>,
    /// Running minimum of `residual_sq` over recorded iterations.
    pub min_residual_sq: f64,
    /// Block updated by the step into `x^k` (stochastic variants).
    pub block: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub meta: TraceMeta,
    pub entries: Vec<TraceEntry>,
    pub final_state: IterateState,
    /// `x^k` for every entry, when `keep_iterates` was set.
    pub iterates: Option<Vec<Vec<f64>>>,
    /// `x^{−1}` used by the run.
    pub x_minus1: Vec<f64>,
    pub stop: StopReason,
}

impl Trace {
    pub fn column(&self, f: impl Fn(&TraceEntry) -> f64) -> Vec<f64> {
        self.entries.iter().map(f).collect()
    }

    /// `(k, ξ_k)` pairs.
    pub fn lyapunov_series(&self) -> Vec<(usize, f64)> {
        self.entries.iter().map(|e| (e.k, e.lyapunov)).collect()
    }
}

/// One full PIGD step: `prox_{γg}(x^k − γ∇f(x^k) + β(x^k − x^{k−1}))`, with the
/// prox applied blockwise at the common stepsize.
pub fn pigd_step(problem: &CompositeProblem, state: &IterateState, gamma: f64, beta: f64) -> Result<Vec<f64>> {
    check_state(problem, state)?;
    if !(gamma > 0.0) {
        return Err(contract("stepsize must be positive"));
    }
    if !(0.0..1.0).contains(&beta) {
        return Err(contract("inertia must lie in [0, 1)"));
    }
    let mut scratch = vec![0.0; problem.dim()];
    pigd_step_unchecked(problem, state, gamma, beta, &mut scratch)
}

fn pigd_step_unchecked(
    problem: &CompositeProblem,
    state: &IterateState,
    gamma: f64,
    beta: f64,
    grad: &mut [f64],
) -> Result<Vec<f64>> {
    problem.grad_into(&state.x_curr, grad);
    if !math::all_finite(grad) {
        return Err(Error::NonFinite { what: "gradient", k: state.k });
    }
    let v: Vec<f64> = state
        .x_curr
        .iter()
        .zip(&state.x_prev)
        .zip(grad.iter())
        .map(|((x, xp), g)| x - gamma * g + beta * (x - xp))
        .collect();
    let mut next = vec![0.0; v.len()];
    problem.prox_full_into(&v, gamma, &mut next);
    Ok(next)
}

/// One Gauss–Seidel epoch: blocks `0..m` in order, block `i` seeing the
/// already-updated blocks `0..i`.
pub fn cyclic_pigd_epoch(
    problem: &CompositeProblem,
    state: &IterateState,
    gammas: &[f64],
    betas: &[f64],
) -> Result<Vec<f64>> {
    check_state(problem, state)?;
    check_len(problem.block_count(), gammas.len())?;
    check_len(problem.block_count(), betas.len())?;
    if gammas.iter().any(|g| !(*g > 0.0)) {
        return Err(contract("stepsizes must be positive"));
    }
    if betas.iter().any(|b| !(0.0..1.0).contains(b)) {
        return Err(contract("inertia must lie in [0, 1)"));
    }
    cyclic_epoch_unchecked(problem, state, gammas, betas)
}

fn cyclic_epoch_unchecked(
    problem: &CompositeProblem,
    state: &IterateState,
    gammas: &[f64],
    betas: &[f64],
) -> Result<Vec<f64>> {
    let mut work = state.x_curr.clone();
    let mut grad = Vec::new();
    let mut v = Vec::new();
    for i in 0..problem.block_count() {
        let r = problem.blocks().range(i);
        grad.resize(r.len(), 0.0);
        v.resize(r.len(), 0.0);
        problem.block_grad_into(&work, i, &mut grad);
        if !math::all_finite(&grad) {
            return Err(Error::NonFinite { what: "block gradient", k: state.k });
        }
        let (gamma, beta) = (gammas[i], betas[i]);
        for (j, idx) in r.clone().enumerate() {
            let x = state.x_curr[idx];
            v[j] = x - gamma * grad[j] + beta * (x - state.x_prev[idx]);
        }
        problem.prox_block_into(i, &v, gamma, &mut work[r]);
    }
    Ok(work)
}

/// One stochastic block step: draw `i` uniformly, update block `i` from the
/// gradient at `x^k`, leave the other blocks untouched.
pub fn stochastic_pigd_step(
    problem: &CompositeProblem,
    state: &IterateState,
    gamma: f64,
    beta: f64,
    rng: &mut SeededRng,
) -> Result<(Vec<f64>, usize)> {
    check_state(problem, state)?;
    if !(gamma > 0.0) {
        return Err(contract("stepsize must be positive"));
    }
    if !(beta >= 0.0 && beta < math::sqrt(problem.block_count() as f64)) {
        return Err(contract("inertia must lie in [0, sqrt(m))"));
    }
    stochastic_step_unchecked(problem, state, gamma, beta, rng)
}

fn stochastic_step_unchecked(
    problem: &CompositeProblem,
    state: &IterateState,
    gamma: f64,
    beta: f64,
    rng: &mut SeededRng,
) -> Result<(Vec<f64>, usize)> {
    let i = rng.index(problem.block_count());
    let r = problem.blocks().range(i);
    let mut grad = vec![0.0; r.len()];
    problem.block_grad_into(&state.x_curr, i, &mut grad);
    if !math::all_finite(&grad) {
        return Err(Error::NonFinite { what: "block gradient", k: state.k });
    }
    let v: Vec<f64> = r
        .clone()
        .zip(&grad)
        .map(|(idx, g)| {
            let x = state.x_curr[idx];
            x - gamma * g + beta * (x - state.x_prev[idx])
        })
        .collect();
    let mut next = state.x_curr.clone();
    problem.prox_block_into(i, &v, gamma, &mut next[r]);
    Ok((next, i))
}

fn check_state(problem: &CompositeProblem, state: &IterateState) -> Result<()> {
    check_len(problem.dim(), state.x_curr.len())?;
    check_len(problem.dim(), state.x_prev.len())
}

/// `‖S_{1/L}(x)‖²`, the residual recorded in traces.
pub(crate) fn audit_residual_sq(problem: &CompositeProblem, x: &[f64], grad: &mut [f64]) -> f64 {
    let gamma = 1.0 / problem.lipschitz();
    problem.grad_into(x, grad);
    let v: Vec<f64> = x.iter().zip(grad.iter()).map(|(xi, g)| xi - gamma * g).collect();
    let mut p = vec![0.0; x.len()];
    problem.prox_full_into(&v, gamma, &mut p);
    math::dist_sq(x, &p)
}

/// Shared recording logic of the three runners.
struct Recorder<'a> {
    problem: &'a CompositeProblem,
    cfg: &'a RunConfig,
    meta: TraceMeta,
    entries: Vec<TraceEntry>,
    iterates: Option<Vec<Vec<f64>>>,
    grad_scratch: Vec<f64>,
    prev_potential: f64,
    prev_coeff: f64,
    min_step: Option<f64>,
    min_residual: f64,
}

/// What a runner knows about `x^k` right after producing it.
struct Step {
    beta: f64,
    gammas: Vec<f64>,
    block: Option<usize>,
}

impl<'a> Recorder<'a> {
    fn start(
        problem: &'a CompositeProblem,
        cfg: &'a RunConfig,
        variant: Variant,
        c: f64,
        state: &IterateState,
        first: Step,
    ) -> Result<Self> {
        let initial_objective = problem.objective_unchecked(&state.x_curr);
        if !initial_objective.is_finite() {
            return Err(contract("F(x0) must be finite (x0 must be feasible)"));
        }
        let meta = TraceMeta {
            variant,
            c,
            lipschitz: problem.lipschitz(),
            block_lipschitz: problem.block_lipschitz().to_vec(),
            m: problem.block_count(),
            f_star: problem.f_star(),
            initial_objective,
        };
        let mut rec = Self {
            problem,
            cfg,
            meta,
            entries: Vec::new(),
            iterates: cfg.keep_iterates.then(Vec::new),
            grad_scratch: vec![0.0; problem.dim()],
            prev_potential: 0.0,
            prev_coeff: 0.0,
            min_step: None,
            min_residual: f64::INFINITY,
        };
        rec.observe(state, first, initial_objective, true)?;
        Ok(rec)
    }

    fn block_steps(&self, state: &IterateState) -> Vec<f64> {
        match self.meta.variant {
            Variant::Cyclic => self.problem.blocks().block_dist_sq(&state.x_curr, &state.x_prev),
            _ => vec![state.step_sq()],
        }
    }

    /// Book-keeps `x^k`; returns `true` when the stopping rule fired.
    fn observe(&mut self, state: &IterateState, step: Step, objective: f64, force_record: bool) -> Result<bool> {
        let k = state.k;
        if !objective.is_finite() {
            return Err(Error::NonFinite { what: "objective", k });
        }
        let f0 = self.meta.initial_objective;
        if objective > f0 + 1e10 * (1.0 + f0.abs()) {
            return Err(Error::Diverged {
                k,
                value: objective,
                initial: f0,
            });
        }
        let block_step_sq = self.block_steps(state);
        let step_sq = if block_step_sq.len() == 1 {
            block_step_sq[0]
        } else {
            state.step_sq()
        };
        let potential = self.meta.potential(objective, step.beta, &step.gammas, &block_step_sq);
        let slack = if k == 0 {
            0.0
        } else {
            self.prev_potential - potential - self.prev_coeff * step_sq
        };
        self.prev_potential = potential;
        self.prev_coeff = self.meta.decrease_coeff(step.beta, &step.gammas);
        if k > 0 {
            self.min_step = Some(self.min_step.map_or(step_sq, |m| m.min(step_sq)));
        }

        let record = force_record || k.is_multiple_of(self.cfg.record_every) || k == self.cfg.max_iters;
        if !record {
            return Ok(false);
        }
        let residual_sq = audit_residual_sq(self.problem, &state.x_curr, &mut self.grad_scratch);
        if !residual_sq.is_finite() {
            return Err(Error::NonFinite { what: "residual", k });
        }
        self.min_residual = self.min_residual.min(residual_sq);
        let lyapunov = self.meta.lyapunov(objective, step.beta, &step.gammas, &block_step_sq);
        self.entries.push(TraceEntry {
            k,
            objective,
            lyapunov,
            step_sq,
            residual_sq,
            descent_slack: slack,
            beta: step.beta,
            gammas: step.gammas,
            block_step_sq,
            min_step_sq: self.min_step,
            min_residual_sq: self.min_residual,
            block: step.block,
        });
        if let Some(its) = self.iterates.as_mut() {
            its.push(state.x_curr.clone());
        }
        Ok(self.cfg.stop_tol > 0.0 && math::sqrt(residual_sq) <= self.cfg.stop_tol)
    }

    fn finish(mut self, state: IterateState, x_minus1: Vec<f64>, stop: StopReason) -> Trace {
        // Make sure the final iterate is recorded.
        if self.entries.last().map(|e| e.k) != Some(state.k) {
            // unreachable in practice: the last iteration is always recorded
            debug_assert!(false, "final iterate was not recorded");
        }
        self.entries.shrink_to_fit();
        Trace {
            meta: self.meta,
            entries: self.entries,
            final_state: state,
            iterates: self.iterates,
            x_minus1,
            stop,
        }
    }
}

fn check_x0(problem: &CompositeProblem, x0: &[f64]) -> Result<()> {
    check_len(problem.dim(), x0.len())?;
    if !math::all_finite(x0) {
        return Err(contract("x0 must be finite"));
    }
    Ok(())
}

/// Full-gradient PIGD with `β_k` from the schedule and `γ_k = 2(1−β_k)c/L`.
pub fn run_pigd(problem: &CompositeProblem, schedule: &ParamSchedule, x0: &[f64], cfg: &RunConfig) -> Result<Trace> {
    run_pigd_from(problem, schedule, IterateState::new(x0), cfg)
}

/// As [`run_pigd`], starting from an explicit `(x^0, x^{−1})` pair.
pub fn run_pigd_from(
    problem: &CompositeProblem,
    schedule: &ParamSchedule,
    state: IterateState,
    cfg: &RunConfig,
) -> Result<Trace> {
    if schedule.variant != Variant::Full {
        return Err(contract("run_pigd needs a full-variant schedule"));
    }
    cfg.validate()?;
    check_x0(problem, &state.x_curr)?;
    check_state(problem, &state)?;
    let l = problem.lipschitz();
    let params = |k: usize| -> Result<Step> {
        let beta = schedule.beta_at(k);
        Ok(Step {
            beta,
            gammas: vec![gamma_full(beta, schedule.c, l)?],
            block: None,
        })
    };
    let x_minus1 = state.x_prev.clone();
    let mut state = state;
    state.k = 0;
    let mut rec = Recorder::start(problem, cfg, Variant::Full, schedule.c, &state, params(0)?)?;
    let mut grad = vec![0.0; problem.dim()];
    let mut stop = StopReason::MaxIters;
    for k in 0..cfg.max_iters {
        let current = params(k)?;
        let next = pigd_step_unchecked(problem, &state, current.gammas[0], current.beta, &mut grad)?;
        state.advance(next);
        let objective = problem.objective_unchecked(&state.x_curr);
        if rec.observe(&state, params(k + 1)?, objective, false)? {
            stop = StopReason::Converged;
            break;
        }
    }
    Ok(rec.finish(state, x_minus1, stop))
}

/// Cyclic block PIGD with `β_{k,i} = β_k` and `γ_{k,i} = 2(1−β_k)c/L_i`.
pub fn run_cyclic(problem: &CompositeProblem, schedule: &ParamSchedule, x0: &[f64], cfg: &RunConfig) -> Result<Trace> {
    if schedule.variant != Variant::Cyclic {
        return Err(contract("run_cyclic needs a cyclic-variant schedule"));
    }
    cfg.validate()?;
    check_x0(problem, x0)?;
    let params = |k: usize| -> Result<Step> {
        let beta = schedule.beta_at(k);
        let gammas = problem
            .block_lipschitz()
            .iter()
            .map(|&li| gamma_full(beta, schedule.c, li))
            .collect::<Result<Vec<_>>>()?;
        Ok(Step {
            beta,
            gammas,
            block: None,
        })
    };
    let mut state = IterateState::new(x0);
    let mut rec = Recorder::start(problem, cfg, Variant::Cyclic, schedule.c, &state, params(0)?)?;
    let mut stop = StopReason::MaxIters;
    for k in 0..cfg.max_iters {
        let current = params(k)?;
        let betas = vec![current.beta; problem.block_count()];
        let next = cyclic_epoch_unchecked(problem, &state, &current.gammas, &betas)?;
        state.advance(next);
        let objective = problem.objective_unchecked(&state.x_curr);
        if rec.observe(&state, params(k + 1)?, objective, false)? {
            stop = StopReason::Converged;
            break;
        }
    }
    Ok(rec.finish(state, x0.to_vec(), stop))
}

/// Stochastic block PIGD.
///
/// [`Variant::Stochastic`] uses the schedule's `β_k` with
/// `γ_k = 2(1−β_k/√m)c/L`. [`Variant::StochasticLinear`] ignores the inertia
/// rule and uses the fixed pair `γ = fraction·γ₀(m, ν, L)`, `β = γν/(4m)`.
pub fn run_stochastic(
    problem: &CompositeProblem,
    schedule: &ParamSchedule,
    x0: &[f64],
    cfg: &RunConfig,
) -> Result<Trace> {
    cfg.validate()?;
    check_x0(problem, x0)?;
    let m = problem.block_count();
    let l = problem.lipschitz();
    let fixed = match schedule.variant {
        Variant::Stochastic => None,
        Variant::StochasticLinear { gamma_fraction } => {
            let nu = problem
                .nu()
                .ok_or(Error::Unsupported("linear stochastic regime needs nu"))?;
            let gamma = gamma_fraction * gamma0_root(m, nu, l)?;
            Some((gamma, linear_stochastic_beta(gamma, nu, m)))
        }
        _ => return Err(contract("run_stochastic needs a stochastic-variant schedule")),
    };
    let params = |k: usize, block: Option<usize>| -> Result<Step> {
        let (gamma, beta) = match fixed {
            Some(pair) => pair,
            None => {
                let beta = schedule.beta_at(k);
                (gamma_stochastic(beta, schedule.c, l, m)?, beta)
            }
        };
        Ok(Step {
            beta,
            gammas: vec![gamma],
            block,
        })
    };
    let mut rng = SeededRng::new(cfg.seed);
    let mut state = IterateState::new(x0);
    let mut rec = Recorder::start(problem, cfg, schedule.variant, schedule.c, &state, params(0, None)?)?;
    let mut stop = StopReason::MaxIters;
    for k in 0..cfg.max_iters {
        let current = params(k, None)?;
        let (next, block) = stochastic_step_unchecked(problem, &state, current.gammas[0], current.beta, &mut rng)?;
        state.advance(next);
        let objective = problem.objective_unchecked(&state.x_curr);
        if rec.observe(&state, params(k + 1, Some(block))?, objective, false)? {
            stop = StopReason::Converged;
            break;
        }
    }
    Ok(rec.finish(state, x0.to_vec(), stop))
}
