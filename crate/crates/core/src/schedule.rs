//! Inertia rules, closed-form stepsizes and the Lyapunov coefficients.

use crate::error::{contract, Result};
use crate::math;

/// How `β_k` evolves with the iteration counter.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields))]
pub enum BetaRule {
    /// `β_k ≡ β₀`, `0 ≤ β₀ < 1`.
    Constant { beta0: f64 },
    /// `β_k = 1/(k+2)^θ`, `θ > 1` (summable).
    Diminishing { theta: f64 },
}

impl BetaRule {
    pub fn validate(&self) -> Result<()> {
        match *self {
            BetaRule::Constant { beta0 } if (0.0..1.0).contains(&beta0) => Ok(()),
            BetaRule::Constant { .. } => Err(contract("constant inertia needs 0 <= beta0 < 1")),
            BetaRule::Diminishing { theta } if theta > 1.0 && theta.is_finite() => Ok(()),
            BetaRule::Diminishing { .. } => Err(contract("diminishing inertia needs theta > 1")),
        }
    }
}

/// Which scheme a schedule drives.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields))]
pub enum Variant {
    Full,
    Cyclic,
    /// Random block, `γ_k = 2(1 − β_k/√m)c/L`.
    Stochastic,
    /// Random block with fixed `γ = gamma_fraction · γ₀` and `β = γν/(4m)`;
    /// needs a problem with `ν`.
    StochasticLinear { gamma_fraction: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamSchedule {
    pub beta_rule: BetaRule,
    pub c: f64,
    pub variant: Variant,
    pub m: usize,
}

impl ParamSchedule {
    pub fn new(beta_rule: BetaRule, c: f64, variant: Variant, m: usize) -> Result<Self> {
        beta_rule.validate()?;
        check_c(c)?;
        if m == 0 {
            return Err(contract("block count must be positive"));
        }
        if let Variant::StochasticLinear { gamma_fraction } = variant {
            if !(gamma_fraction > 0.0 && gamma_fraction < 1.0) {
                return Err(contract("linear regime needs 0 < gamma_fraction < 1"));
            }
        }
        Ok(Self {
            beta_rule,
            c,
            variant,
            m,
        })
    }

    pub fn beta_at(&self, k: usize) -> f64 {
        beta_at(&self.beta_rule, k)
    }
}

fn check_c(c: f64) -> Result<()> {
    if c > 0.0 && c < 1.0 {
        Ok(())
    } else {
        Err(contract("contraction factor c must lie in (0, 1)"))
    }
}

/// `β_k`. The diminishing rule is shifted by one, `1/(k+2)^θ`, so that
/// `β_0 < 1`.
pub fn beta_at(rule: &BetaRule, k: usize) -> f64 {
    match *rule {
        BetaRule::Constant { beta0 } => beta0,
        BetaRule::Diminishing { theta } => 1.0 / math::powf(k as f64 + 2.0, theta),
    }
}

/// `γ = 2(1 − β)c/L`.
pub fn gamma_full(beta: f64, c: f64, lipschitz: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&beta) {
        return Err(contract("gamma_full needs 0 <= beta < 1"));
    }
    check_c(c)?;
    if !(lipschitz > 0.0) {
        return Err(contract("Lipschitz constant must be positive"));
    }
    Ok(2.0 * (1.0 - beta) * c / lipschitz)
}

/// `γ = 2(1 − β/√m)c/L`, valid for `0 ≤ β < √m`.
pub fn gamma_stochastic(beta: f64, c: f64, lipschitz: f64, m: usize) -> Result<f64> {
    let root_m = math::sqrt(m as f64);
    if m == 0 || !(beta >= 0.0 && beta < root_m) {
        return Err(contract("gamma_stochastic needs 0 <= beta < sqrt(m)"));
    }
    check_c(c)?;
    if !(lipschitz > 0.0) {
        return Err(contract("Lipschitz constant must be positive"));
    }
    Ok(2.0 * (1.0 - beta / root_m) * c / lipschitz)
}

/// `δ = ½(1/γ − L/2)`.
#[inline]
pub fn delta_coeff(gamma: f64, lipschitz: f64) -> f64 {
    0.5 * (1.0 / gamma - 0.5 * lipschitz)
}

/// `ε_k = 4cδ_{k+1}²/((1−c)L) + 4c/((1−c)Lγ_k²)`.
pub fn epsilon_coeff(gamma: f64, delta_next: f64, c: f64, lipschitz: f64) -> f64 {
    let scale = 4.0 * c / ((1.0 - c) * lipschitz);
    scale * delta_next * delta_next + scale / (gamma * gamma)
}

/// Block version: `max{ κ Σ_i (δ_{k+1,i}² + L_i²), κ Σ_i 1/γ_{k,i}² }` with
/// `κ = 4c/((1−c) min_i L_i)`.
pub fn epsilon_hat_coeff(gammas: &[f64], deltas_next: &[f64], c: f64, block_lipschitz: &[f64]) -> f64 {
    let l_min = block_lipschitz.iter().copied().fold(f64::INFINITY, f64::min);
    let kappa = 4.0 * c / ((1.0 - c) * l_min);
    let first: f64 = deltas_next
        .iter()
        .zip(block_lipschitz)
        .map(|(d, l)| d * d + l * l)
        .sum();
    let second: f64 = gammas.iter().map(|g| 1.0 / (g * g)).sum();
    (kappa * first).max(kappa * second)
}

/// Positive root `γ₀` of
/// `(min{ν,1}ν/(8m³))γ² + (L + ν/(2m) − ν/(4m²))γ − 1 = 0`.
///
/// Uses `2/(b + √(b² + 4a))`, which has no cancellation for `a, b > 0`.
pub fn gamma0_root(m: usize, nu: f64, lipschitz: f64) -> Result<f64> {
    if m == 0 || !(nu > 0.0) || !(lipschitz > 0.0) {
        return Err(contract("gamma0_root needs m >= 1, nu > 0, L > 0"));
    }
    let mf = m as f64;
    let a = nu.min(1.0) * nu / (8.0 * mf * mf * mf);
    let b = lipschitz + nu / (2.0 * mf) - nu / (4.0 * mf * mf);
    Ok(2.0 / (b + math::sqrt(b * b + 4.0 * a)))
}

/// `β = γν/(4m)` for the linear stochastic regime.
pub fn linear_stochastic_beta(gamma: f64, nu: f64, m: usize) -> f64 {
    gamma * nu / (4.0 * m as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beta_rules() {
        let c = BetaRule::Constant { beta0: 0.5 };
        assert_eq!(beta_at(&c, 0), 0.5);
        assert_eq!(beta_at(&c, 10_000), 0.5);
        let d = BetaRule::Diminishing { theta: 2.0 };
        assert_eq!(beta_at(&d, 0), 0.25);
        assert!(BetaRule::Diminishing { theta: 1.0 }.validate().is_err());
        assert!(BetaRule::Constant { beta0: 1.0 }.validate().is_err());
    }

    #[test]
    fn stepsize_arithmetic() {
        assert_eq!(gamma_full(0.5, 0.5, 1.0).unwrap(), 0.5);
        assert_eq!(gamma_full(0.0, 0.5, 2.0).unwrap(), 0.5);
        assert!(gamma_full(1.0, 0.5, 1.0).is_err());
        assert!(gamma_full(0.5, 1.0, 1.0).is_err());
        assert_eq!(gamma_stochastic(1.0, 0.5, 1.0, 4).unwrap(), 0.5);
        assert_eq!(gamma_stochastic(0.0, 0.7, 3.0, 9).unwrap(), gamma_full(0.0, 0.7, 3.0).unwrap());
        assert!(gamma_stochastic(2.0, 0.5, 1.0, 4).is_err());
    }

    #[test]
    fn delta_and_epsilon() {
        assert_eq!(delta_coeff(0.5, 1.0), 0.75);
        assert_eq!(delta_coeff(2.0 / 3.0, 3.0), 0.0);
        assert_eq!(epsilon_coeff(1.0, 0.0, 0.5, 1.0), 4.0);
        assert!(epsilon_coeff(1.0, 2.0, 0.5, 1.0) > epsilon_coeff(1.0, 1.0, 0.5, 1.0));
        assert!(epsilon_coeff(0.5, 1.0, 0.5, 1.0) > epsilon_coeff(1.0, 1.0, 0.5, 1.0));
    }

    #[test]
    fn gamma0_reference_value() {
        let g0 = gamma0_root(1, 1.0, 1.0).unwrap();
        assert!((g0 - 0.744_562_646_538_029).abs() < 1e-12);
        let resid = 0.125 * g0 * g0 + 1.25 * g0 - 1.0;
        assert!(resid.abs() < 1e-12);
    }

    #[test]
    fn linear_beta() {
        assert_eq!(linear_stochastic_beta(0.5, 1.0, 1), 0.125);
        assert_eq!(linear_stochastic_beta(0.0, 1.0, 3), 0.0);
    }
}
