//! Lyapunov values, inequality audits, optimality residuals and rate fits.
//!
//! Audits return the most negative slack found (0 when nothing is violated)
//! in the raw units of the inequality; callers scale by `1 + |F(x^0)|`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_len, contract, Error, Result};
use crate::math;
use crate::problem::CompositeProblem;
use crate::schedule::{delta_coeff, epsilon_coeff, epsilon_hat_coeff, Variant};
use crate::solver::{Trace, TraceEntry};

/// `F + δ‖Δ‖² − F*`.
pub fn lyapunov_xi(f_val: f64, step_sq: f64, delta: f64, f_star: f64) -> f64 {
    f_val + delta * step_sq - f_star
}

/// `S_γ(x) = x − prox_{γg}(x − γ∇f(x))`.
pub fn residual_s(problem: &CompositeProblem, x: &[f64], gamma: f64) -> Result<Vec<f64>> {
    check_len(problem.dim(), x.len())?;
    if !(gamma > 0.0) {
        return Err(contract("residual stepsize must be positive"));
    }
    let grad = problem.grad_f(x)?;
    let v: Vec<f64> = x.iter().zip(&grad).map(|(xi, g)| xi - gamma * g).collect();
    let mut p = vec![0.0; x.len()];
    problem.prox_full_into(&v, gamma, &mut p);
    Ok(math::sub(x, &p))
}

fn consecutive(a: &TraceEntry, b: &TraceEntry) -> bool {
    b.k == a.k + 1
}

/// Most negative slack of the variant's one-step descent inequality.
///
/// Consecutive recorded pairs are re-evaluated from the recorded values and
/// parameters; for a gap in the record the slack stored by the run for the
/// step into the later entry is used instead.
pub fn descent_audit(trace: &Trace) -> Result<f64> {
    if trace.entries.len() < 2 {
        return Err(contract("descent audit needs at least two recorded entries"));
    }
    let meta = &trace.meta;
    let mut worst: f64 = 0.0;
    for w in trace.entries.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let slack = if consecutive(a, b) {
            let va = meta.potential(a.objective, a.beta, &a.gammas, &a.block_step_sq);
            let vb = meta.potential(b.objective, b.beta, &b.gammas, &b.block_step_sq);
            va - vb - meta.decrease_coeff(a.beta, &a.gammas) * b.step_sq
        } else {
            b.descent_slack
        };
        worst = worst.min(slack);
    }
    Ok(worst)
}

/// Most negative `ξ_j − ξ_{j+1}` over consecutive recorded entries.
pub fn lyapunov_audit(trace: &Trace) -> Result<f64> {
    if trace.entries.len() < 2 {
        return Err(contract("Lyapunov audit needs at least two recorded entries"));
    }
    Ok(trace
        .entries
        .windows(2)
        .map(|w| w[0].lyapunov - w[1].lyapunov)
        .fold(0.0, f64::min))
}

/// One evaluated instance of the squared-Lyapunov error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorBoundTerm {
    pub k: usize,
    pub xi: f64,
    pub xi_next: f64,
    pub epsilon: f64,
    /// `2‖x^{k+1} − x̄^{k+1}‖² + ‖x^{k+1} − x^k‖²` (full) or
    /// `3‖x^{k+1} − x̄^{k+1}‖² + ‖x^{k−1} − x^k‖²` (cyclic).
    pub distance_factor: f64,
    /// `ε_k (ξ_k − ξ_{k+1}) · factor − ξ_{k+1}²`
    pub slack: f64,
}

impl ErrorBoundTerm {
    /// Slack divided by the sum of both sides' magnitudes, in `[−1, 1]`.
    pub fn relative_slack(&self) -> f64 {
        let rhs = self.epsilon * (self.xi - self.xi_next) * self.distance_factor;
        let scale = rhs.abs() + self.xi_next * self.xi_next;
        if scale > 0.0 {
            self.slack / scale
        } else {
            0.0
        }
    }
}

fn audit_inputs<'a>(trace: &'a Trace, problem: &CompositeProblem) -> Result<(&'a [Vec<f64>], f64)> {
    let iterates = trace
        .iterates
        .as_deref()
        .ok_or_else(|| contract("error-bound audit needs a trace with kept iterates"))?;
    if problem.solution_set().is_none() {
        return Err(Error::Unsupported("error-bound audit needs a solution projection"));
    }
    let f_star = trace
        .meta
        .f_star
        .ok_or(Error::Unsupported("error-bound audit needs min F"))?;
    Ok((iterates, f_star))
}

/// Evaluates `ξ_{k+1}² ≤ ε_k (ξ_k − ξ_{k+1}) · factor` on every recorded
/// consecutive pair, with `ε_k = 4cδ_{k+1}²/((1−c)L) + 4c/((1−c)Lγ_k²)` for the
/// full variant and the block coefficient `ε̂_k` for the cyclic one.
pub fn error_bound_terms(trace: &Trace, problem: &CompositeProblem) -> Result<Vec<ErrorBoundTerm>> {
    let (iterates, _) = audit_inputs(trace, problem)?;
    let meta = &trace.meta;
    let entries = &trace.entries;
    let mut out = Vec::new();
    for j in 0..entries.len().saturating_sub(1) {
        let (a, b) = (&entries[j], &entries[j + 1]);
        if !consecutive(a, b) {
            continue;
        }
        let x_next = &iterates[j + 1];
        let dist_sq = math::dist_sq(x_next, &problem.solution_project(x_next)?);
        let (epsilon, factor) = match meta.variant {
            Variant::Full => {
                let delta_next = delta_coeff(b.gammas[0], meta.lipschitz);
                let eps = epsilon_coeff(a.gammas[0], delta_next, meta.c, meta.lipschitz);
                (eps, 2.0 * dist_sq + b.step_sq)
            }
            Variant::Cyclic => {
                let deltas_next: Vec<f64> = b
                    .gammas
                    .iter()
                    .zip(&meta.block_lipschitz)
                    .map(|(g, l)| delta_coeff(*g, *l))
                    .collect();
                let eps = epsilon_hat_coeff(&a.gammas, &deltas_next, meta.c, &meta.block_lipschitz);
                let x_prev = if a.k == 0 {
                    &trace.x_minus1
                } else if j > 0 && consecutive(&entries[j - 1], a) {
                    &iterates[j - 1]
                } else {
                    continue;
                };
                (eps, 3.0 * dist_sq + math::dist_sq(x_prev, &iterates[j]))
            }
            _ => return Err(Error::Unsupported("error-bound audit covers the full and cyclic variants")),
        };
        let slack = epsilon * (a.lyapunov - b.lyapunov) * factor - b.lyapunov * b.lyapunov;
        out.push(ErrorBoundTerm {
            k: a.k,
            xi: a.lyapunov,
            xi_next: b.lyapunov,
            epsilon,
            distance_factor: factor,
            slack,
        });
    }
    Ok(out)
}

/// Most negative relative slack (see [`ErrorBoundTerm::relative_slack`]) of
/// the squared-Lyapunov error bound over steps with `ξ_k > floor`; below the
/// floor both sides are rounding noise.
pub fn lemma5_audit(trace: &Trace, problem: &CompositeProblem, floor: f64) -> Result<f64> {
    Ok(error_bound_terms(trace, problem)?
        .iter()
        .filter(|t| t.xi > floor)
        .map(ErrorBoundTerm::relative_slack)
        .fold(0.0, f64::min))
}

/// `2ℓ/(√(ℓ²+4ℓ) + ℓ)`, the positive root bound of `r² + ℓr − ℓ ≤ 0`.
pub fn omega_from_ell(ell: f64) -> f64 {
    if ell <= 0.0 {
        return 0.0;
    }
    2.0 * ell / (math::sqrt(ell * ell + 4.0 * ell) + ell)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearRateAudit {
    /// Running maximum of the per-step coefficient.
    pub ell: f64,
    pub omega: f64,
    /// Most negative `ω(ℓ_k) − ξ_{k+1}/ξ_k` (0 when every ratio is covered).
    pub max_violation: f64,
    pub checked_steps: usize,
}

/// Checks `ξ_{k+1}/ξ_k ≤ ω(ℓ)` step by step, where `ℓ` is the running max of
/// `ε_k(1/δ_k + 2/ν)` (full) or `ε̂_k + 3/ν + 1/min_i δ_{k,i}` (cyclic).
/// Steps with `ξ_k ≤ floor` are skipped.
pub fn linear_rate_audit(trace: &Trace, nu: f64, floor: f64) -> Result<LinearRateAudit> {
    if !(nu > 0.0) {
        return Err(contract("nu must be positive"));
    }
    let meta = &trace.meta;
    if meta.f_star.is_none() {
        return Err(Error::Unsupported("linear-rate audit needs min F"));
    }
    let mut ell: f64 = 0.0;
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for w in trace.entries.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if !consecutive(a, b) || a.lyapunov <= floor.max(0.0) {
            continue;
        }
        let coeff = match meta.variant {
            Variant::Full => {
                let delta_k = delta_coeff(a.gammas[0], meta.lipschitz);
                let delta_next = delta_coeff(b.gammas[0], meta.lipschitz);
                epsilon_coeff(a.gammas[0], delta_next, meta.c, meta.lipschitz) * (1.0 / delta_k + 2.0 / nu)
            }
            Variant::Cyclic => {
                let deltas = |e: &TraceEntry| -> Vec<f64> {
                    e.gammas
                        .iter()
                        .zip(&meta.block_lipschitz)
                        .map(|(g, l)| delta_coeff(*g, *l))
                        .collect()
                };
                let dk = deltas(a);
                let eps = epsilon_hat_coeff(&a.gammas, &deltas(b), meta.c, &meta.block_lipschitz);
                let d_min = dk.iter().copied().fold(f64::INFINITY, f64::min);
                eps + 3.0 / nu + 1.0 / d_min
            }
            _ => return Err(Error::Unsupported("linear-rate audit covers the full and cyclic variants")),
        };
        ell = ell.max(coeff);
        let ratio = b.lyapunov / a.lyapunov;
        worst = worst.min(omega_from_ell(ell) - ratio);
        checked += 1;
    }
    Ok(LinearRateAudit {
        ell,
        omega: omega_from_ell(ell),
        max_violation: worst,
        checked_steps: checked,
    })
}

/// Which law [`fit_rate`] fits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum RateModel {
    /// `value ≈ C k^{−p}`
    SublinearPower,
    /// `value ≈ C ω^k`
    Geometric,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RateEstimate {
    pub model: RateModel,
    /// `p` for the power law, `ω` for the geometric law.
    pub exponent_or_ratio: f64,
    /// RMS residual of the least-squares fit in log space.
    pub fit_residual: f64,
    pub window: (usize, usize),
    pub points: usize,
}

/// Least-squares fit of `log(value)` against `log k` (power law) or `k`
/// (geometric). Needs at least 10 points, all with positive value (and
/// `k ≥ 1` for the power law).
pub fn fit_rate(series: &[(usize, f64)], model: RateModel) -> Result<RateEstimate> {
    if series.len() < 10 {
        return Err(contract("rate fit needs at least 10 points"));
    }
    if series.iter().any(|&(_, v)| !(v > 0.0) || !v.is_finite()) {
        return Err(contract("rate fit needs strictly positive finite values"));
    }
    if model == RateModel::SublinearPower && series.iter().any(|&(k, _)| k == 0) {
        return Err(contract("power-law fit needs k >= 1"));
    }
    let xs: Vec<f64> = series
        .iter()
        .map(|&(k, _)| match model {
            RateModel::SublinearPower => math::ln(k as f64),
            RateModel::Geometric => k as f64,
        })
        .collect();
    let ys: Vec<f64> = series.iter().map(|&(_, v)| math::ln(v)).collect();
    let (slope, intercept) = least_squares_line(&xs, &ys)?;
    let rss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    let fit_residual = math::sqrt(rss / xs.len() as f64);
    let exponent_or_ratio = match model {
        RateModel::SublinearPower => -slope,
        RateModel::Geometric => math::exp(slope),
    };
    let window = (
        series.iter().map(|p| p.0).min().unwrap_or(0),
        series.iter().map(|p| p.0).max().unwrap_or(0),
    );
    Ok(RateEstimate {
        model,
        exponent_or_ratio,
        fit_residual,
        window,
        points: series.len(),
    })
}

fn least_squares_line(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if !(sxx > 0.0) {
        return Err(contract("rate fit needs at least two distinct abscissae"));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// Window selection for [`fit_rate`]: keeps `k_lo ≤ k ≤ k_hi` and drops
/// values at or below `floor` (rounding noise).
pub fn select_window(series: &[(usize, f64)], k_lo: usize, k_hi: usize, floor: f64) -> Vec<(usize, f64)> {
    series
        .iter()
        .copied()
        .filter(|&(k, v)| k >= k_lo && k <= k_hi && v > floor)
        .collect()
}

/// Default truncation level for log fits: `1e-14 · (1 + |F*|)`.
pub fn rounding_floor(f_star: f64) -> f64 {
    1e-14 * (1.0 + f_star.abs())
}

/// Skip level for audits built on Lyapunov differences `ξ_k − ξ_{k+1}`:
/// `1e-10 · (1 + |F*|)`. Below it consecutive values differ by a few ulps of
/// `F` and the sign of the difference is noise.
pub fn audit_floor(f_star: f64) -> f64 {
    1e-10 * (1.0 + f_star.abs())
}

/// Fits over `[max(burn_in · k_max, 1), k_max]` after truncating at `floor`.
pub fn fit_rate_after_burn_in(
    series: &[(usize, f64)],
    model: RateModel,
    burn_in: f64,
    floor: f64,
) -> Result<RateEstimate> {
    if !(0.0..1.0).contains(&burn_in) {
        return Err(contract("burn-in fraction must lie in [0, 1)"));
    }
    let k_max = series.iter().map(|p| p.0).max().unwrap_or(0);
    let k_lo = ((burn_in * k_max as f64) as usize).max(1);
    fit_rate(&select_window(series, k_lo, k_max, floor), model)
}

/// Prefix minimum.
pub fn running_min(series: &[f64]) -> Vec<f64> {
    let mut best = f64::INFINITY;
    series
        .iter()
        .map(|&v| {
            best = best.min(v);
            best
        })
        .collect()
}

/// Entrywise mean of one column over traces recorded at the same `k`s.
pub fn seed_mean(traces: &[Trace], column: impl Fn(&TraceEntry) -> f64) -> Result<Vec<(usize, f64)>> {
    let first = traces.first().ok_or_else(|| contract("seed mean needs at least one trace"))?;
    let len = first.entries.len();
    for t in traces {
        if t.entries.len() != len || t.entries.iter().zip(&first.entries).any(|(a, b)| a.k != b.k) {
            return Err(contract("seed mean needs traces recorded at identical iterations"));
        }
    }
    let n = traces.len() as f64;
    Ok((0..len)
        .map(|j| {
            let total: f64 = traces.iter().map(|t| column(&t.entries[j])).sum();
            (first.entries[j].k, total / n)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn xi_examples() {
        assert_eq!(lyapunov_xi(3.0, 0.0, 0.75, 3.0), 0.0);
        assert_eq!(lyapunov_xi(2.0, 4.0, 0.75, 1.0), 4.0);
    }

    #[test]
    fn running_min_examples() {
        assert_eq!(running_min(&[3.0, 1.0, 2.0, 0.5]), vec![3.0, 1.0, 1.0, 0.5]);
        assert_eq!(running_min(&[2.0; 4]), vec![2.0; 4]);
    }

    #[test]
    fn exact_power_law() {
        let s: Vec<(usize, f64)> = (10..=1000).map(|k| (k, 7.0 / k as f64)).collect();
        let r = fit_rate(&s, RateModel::SublinearPower).unwrap();
        assert!((r.exponent_or_ratio - 1.0).abs() < 1e-6);
        assert!(r.fit_residual < 1e-9);
        assert_eq!(r.window, (10, 1000));
    }

    #[test]
    fn exact_geometric() {
        let s: Vec<(usize, f64)> = (0..200).map(|k| (k, 3.0 * math::powf(0.9, k as f64))).collect();
        let r = fit_rate(&s, RateModel::Geometric).unwrap();
        assert!((r.exponent_or_ratio - 0.9).abs() < 1e-6);
    }

    #[test]
    fn fit_rejects_bad_input() {
        let short: Vec<(usize, f64)> = (1..5).map(|k| (k, 1.0)).collect();
        assert!(fit_rate(&short, RateModel::Geometric).is_err());
        let mut s: Vec<(usize, f64)> = (1..20).map(|k| (k, 1.0 / k as f64)).collect();
        s[3].1 = 0.0;
        assert!(fit_rate(&s, RateModel::SublinearPower).is_err());
    }

    #[test]
    fn omega_limits() {
        assert!(omega_from_ell(1e-9) < 1e-4);
        assert!(omega_from_ell(1e9) < 1.0);
        // r = ω solves r² + ℓr − ℓ = 0
        let ell = 3.7;
        let r = omega_from_ell(ell);
        assert!((r * r + ell * r - ell).abs() < 1e-12);
    }
}
