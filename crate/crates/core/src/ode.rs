//! Heavy-ball dynamics `ẍ + αẋ + ∇f(x) = 0` integrated with classical RK4.

use alloc::vec::Vec;

use crate::error::{check_len, contract, Error, Result};
use crate::math;
use crate::problem::CompositeProblem;

#[derive(Debug, Clone, PartialEq)]
pub struct OdeSample {
    pub t: f64,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    /// `ẍ = −αv − ∇f(x)`
    pub a: Vec<f64>,
    /// `f(x) + ½‖v‖² − min f`
    pub xi_f: f64,
    /// `‖ẍ‖/‖ẋ‖`; `+∞` when `ẋ = 0 ≠ ẍ`, and 0 at rest (`ẋ = ẍ = 0`).
    pub accel_ratio: f64,
    /// `‖x − x̄‖` with `x̄` the projection onto `argmin f`.
    pub dist_to_solution: f64,
}

impl OdeSample {
    pub fn speed_sq(&self) -> f64 {
        math::norm_sq(&self.v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OdeTrace {
    pub samples: Vec<OdeSample>,
    pub alpha: f64,
    pub step_h: f64,
}

/// Integrates from `(x0, v0)` up to `t_end` with fixed step `h`, sampling
/// every step. Needs a smooth-only problem with `min f` and a solution
/// projection, and `h ≤ 0.1/√L`.
pub fn simulate_heavy_ball(
    problem: &CompositeProblem,
    x0: &[f64],
    v0: &[f64],
    alpha: f64,
    h: f64,
    t_end: f64,
) -> Result<OdeTrace> {
    let n = problem.dim();
    check_len(n, x0.len())?;
    check_len(n, v0.len())?;
    if !problem.is_smooth_only() {
        return Err(contract("heavy-ball dynamics need g = 0"));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(contract("damping alpha must be positive"));
    }
    if !(h > 0.0 && t_end > 0.0 && t_end.is_finite()) {
        return Err(contract("step and horizon must be positive"));
    }
    if h > 0.1 / math::sqrt(problem.lipschitz()) {
        return Err(contract("step h exceeds the stability limit 0.1/sqrt(L)"));
    }
    let f_star = problem
        .f_star()
        .ok_or(Error::Unsupported("heavy-ball audit needs min f"))?;
    problem.solution_project(x0)?;

    let steps = math::ceil(t_end / h - 1e-9) as usize;
    let smooth = problem.smooth();
    let field = |x: &[f64], v: &[f64], dx: &mut [f64], dv: &mut [f64], g: &mut [f64]| {
        smooth.gradient_into(x, g);
        for j in 0..x.len() {
            dx[j] = v[j];
            dv[j] = -alpha * v[j] - g[j];
        }
    };

    let mut samples = Vec::with_capacity(steps + 1);
    let mut x = x0.to_vec();
    let mut v = v0.to_vec();
    let mut g = alloc::vec![0.0; n];
    let (mut k1x, mut k1v) = (alloc::vec![0.0; n], alloc::vec![0.0; n]);
    let (mut k2x, mut k2v) = (alloc::vec![0.0; n], alloc::vec![0.0; n]);
    let (mut k3x, mut k3v) = (alloc::vec![0.0; n], alloc::vec![0.0; n]);
    let (mut k4x, mut k4v) = (alloc::vec![0.0; n], alloc::vec![0.0; n]);
    let (mut xt, mut vt) = (alloc::vec![0.0; n], alloc::vec![0.0; n]);

    for i in 0..=steps {
        let t = i as f64 * h;
        samples.push(sample(problem, f_star, alpha, t, &x, &v)?);
        if i == steps {
            break;
        }
        field(&x, &v, &mut k1x, &mut k1v, &mut g);
        for j in 0..n {
            xt[j] = x[j] + 0.5 * h * k1x[j];
            vt[j] = v[j] + 0.5 * h * k1v[j];
        }
        field(&xt, &vt, &mut k2x, &mut k2v, &mut g);
        for j in 0..n {
            xt[j] = x[j] + 0.5 * h * k2x[j];
            vt[j] = v[j] + 0.5 * h * k2v[j];
        }
        field(&xt, &vt, &mut k3x, &mut k3v, &mut g);
        for j in 0..n {
            xt[j] = x[j] + h * k3x[j];
            vt[j] = v[j] + h * k3v[j];
        }
        field(&xt, &vt, &mut k4x, &mut k4v, &mut g);
        for j in 0..n {
            x[j] += h / 6.0 * (k1x[j] + 2.0 * k2x[j] + 2.0 * k3x[j] + k4x[j]);
            v[j] += h / 6.0 * (k1v[j] + 2.0 * k2v[j] + 2.0 * k3v[j] + k4v[j]);
        }
        if !math::all_finite(&x) || !math::all_finite(&v) {
            return Err(Error::IntegrationBlowup { t: (i + 1) as f64 * h });
        }
    }
    Ok(OdeTrace {
        samples,
        alpha,
        step_h: h,
    })
}

fn sample(problem: &CompositeProblem, f_star: f64, alpha: f64, t: f64, x: &[f64], v: &[f64]) -> Result<OdeSample> {
    let grad = problem.grad_f(x)?;
    let a: Vec<f64> = v.iter().zip(&grad).map(|(vi, gi)| -alpha * vi - gi).collect();
    let (speed, accel) = (math::norm(v), math::norm(&a));
    let accel_ratio = if speed > 0.0 {
        accel / speed
    } else if accel > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    let xi_f = problem.smooth().value(x) + 0.5 * speed * speed - f_star;
    if !xi_f.is_finite() {
        return Err(Error::IntegrationBlowup { t });
    }
    let dist_to_solution = math::sqrt(math::dist_sq(x, &problem.solution_project(x)?));
    Ok(OdeSample {
        t,
        x: x.to_vec(),
        v: v.to_vec(),
        a,
        xi_f,
        accel_ratio,
        dist_to_solution,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OdeAudit {
    /// Largest `ξ_f(t_{i+1}) − ξ_f(t_i)` (0 when non-increasing).
    pub max_xi_increase: f64,
    /// `sup_t max{(α+θ)‖x − x*‖, ‖ẋ‖/2}` over the samples.
    pub r_measured: f64,
    /// Fraction of samples with `‖ẍ‖ > θ‖ẋ‖`.
    pub ratio_violation_fraction: f64,
    /// `ξ_f(t) ≤ 1/(αt/R² + 1/ξ_f(0))` at every sample.
    pub corrected_bound_holds: bool,
    /// Smallest `(bound − ξ_f)/bound` of the corrected bound.
    pub corrected_bound_margin: f64,
    /// The bound as typeset with `+ ξ_f(0)` in the denominator.
    pub literal_bound_holds: bool,
}

/// `1/(αt/R² + 1/ξ₀)`, with the limits `ξ₀ = 0 → 0` and `R = 0 → 0` (t > 0).
pub fn corrected_bound(alpha: f64, r: f64, t: f64, xi0: f64) -> f64 {
    if xi0 <= 0.0 {
        return 0.0;
    }
    if t == 0.0 {
        return xi0;
    }
    if r == 0.0 {
        return 0.0;
    }
    1.0 / (alpha * t / (r * r) + 1.0 / xi0)
}

/// `1/(αt/R² + ξ₀)`
pub fn literal_bound(alpha: f64, r: f64, t: f64, xi0: f64) -> f64 {
    if r == 0.0 {
        return if t == 0.0 && xi0 > 0.0 { 1.0 / xi0 } else { 0.0 };
    }
    1.0 / (alpha * t / (r * r) + xi0)
}

/// Relative tolerance for the pointwise bound checks (rounding only).
const BOUND_RTOL: f64 = 1e-12;

pub fn ode_audit(trace: &OdeTrace, theta: f64) -> Result<OdeAudit> {
    let s = &trace.samples;
    if s.is_empty() {
        return Err(contract("ODE audit needs at least one sample"));
    }
    if !(theta > 0.0) {
        return Err(contract("theta must be positive"));
    }
    let alpha = trace.alpha;
    let max_xi_increase = s.windows(2).map(|w| w[1].xi_f - w[0].xi_f).fold(0.0, f64::max);
    let r = s
        .iter()
        .map(|p| ((alpha + theta) * p.dist_to_solution).max(0.5 * math::norm(&p.v)))
        .fold(0.0, f64::max);
    let violations = s.iter().filter(|p| p.accel_ratio > theta).count();
    let xi0 = s[0].xi_f;
    let mut corrected_ok = true;
    let mut literal_ok = true;
    let mut margin = f64::INFINITY;
    for p in s {
        let b = corrected_bound(alpha, r, p.t, xi0);
        let slack = BOUND_RTOL * b.max(f64::MIN_POSITIVE);
        if p.xi_f > b + slack {
            corrected_ok = false;
        }
        if b > 0.0 {
            margin = margin.min((b - p.xi_f) / b);
        }
        let lb = literal_bound(alpha, r, p.t, xi0);
        if p.xi_f > lb + BOUND_RTOL * lb {
            literal_ok = false;
        }
    }
    Ok(OdeAudit {
        max_xi_increase,
        r_measured: r,
        ratio_violation_fraction: violations as f64 / s.len() as f64,
        corrected_bound_holds: corrected_ok,
        corrected_bound_margin: if margin.is_finite() { margin } else { 0.0 },
        literal_bound_holds: literal_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_limits() {
        assert_eq!(corrected_bound(1.0, 1.0, 0.0, 2.0), 2.0);
        assert_eq!(corrected_bound(1.0, 0.0, 1.0, 2.0), 0.0);
        assert_eq!(corrected_bound(1.0, 1.0, 3.0, 0.0), 0.0);
        assert!((corrected_bound(1.0, 2.0, 4.0, 1.0) - 0.5).abs() < 1e-15);
        assert!((literal_bound(1.0, 2.0, 4.0, 1.0) - 0.5).abs() < 1e-15);
    }
}
