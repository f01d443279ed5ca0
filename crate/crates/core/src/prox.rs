//! Closed-form proximal operators.

use alloc::vec::Vec;

use crate::error::{check_len, contract, Result};
use crate::math;

/// A block regularizer `g_i` with a closed-form prox.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "tag", rename_all = "snake_case"))]
pub enum ProxKind {
    /// `g ≡ 0`
    Zero,
    /// `g(z) = λ‖z‖₁`
    L1 { lambda: f64 },
    /// Indicator of `[lo, hi]` (elementwise).
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// `g(z) = λ‖z‖₂` (one group per block).
    GroupL2 { lambda: f64 },
}

impl ProxKind {
    /// Checks parameter invariants against a block of dimension `dim`.
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            ProxKind::Zero => Ok(()),
            ProxKind::L1 { lambda } | ProxKind::GroupL2 { lambda } => {
                if *lambda >= 0.0 && lambda.is_finite() {
                    Ok(())
                } else {
                    Err(contract("regularization weight must be finite and >= 0"))
                }
            }
            ProxKind::Box { lo, hi } => {
                check_len(dim, lo.len())?;
                check_len(dim, hi.len())?;
                if lo.iter().zip(hi).all(|(l, h)| l <= h) {
                    Ok(())
                } else {
                    Err(contract("box bounds need lo <= hi elementwise"))
                }
            }
        }
    }

    /// `g(z)`; `+∞` outside the box for the indicator.
    pub fn value(&self, z: &[f64]) -> f64 {
        match self {
            ProxKind::Zero => 0.0,
            ProxKind::L1 { lambda } => lambda * z.iter().map(|v| v.abs()).sum::<f64>(),
            ProxKind::GroupL2 { lambda } => lambda * math::norm(z),
            ProxKind::Box { lo, hi } => {
                let inside = z
                    .iter()
                    .zip(lo.iter().zip(hi))
                    .all(|(v, (l, h))| *l <= *v && *v <= *h);
                if inside {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// `prox_{γ g}(v)` written into `out`.
    pub fn prox_into(&self, v: &[f64], gamma: f64, out: &mut [f64]) {
        debug_assert_eq!(v.len(), out.len());
        match self {
            ProxKind::Zero => out.copy_from_slice(v),
            ProxKind::L1 { lambda } => {
                let tau = gamma * lambda;
                for (o, &x) in out.iter_mut().zip(v) {
                    *o = shrink(x, tau);
                }
            }
            ProxKind::Box { lo, hi } => {
                for ((o, &x), (l, h)) in out.iter_mut().zip(v).zip(lo.iter().zip(hi)) {
                    *o = x.clamp(*l, *h);
                }
            }
            ProxKind::GroupL2 { lambda } => {
                let scale = group_scale(math::norm(v), gamma * lambda);
                for (o, &x) in out.iter_mut().zip(v) {
                    *o = scale * x;
                }
            }
        }
    }

    pub fn prox(&self, v: &[f64], gamma: f64) -> Vec<f64> {
        let mut out = alloc::vec![0.0; v.len()];
        self.prox_into(v, gamma, &mut out);
        out
    }
}

#[inline]
fn shrink(x: f64, tau: f64) -> f64 {
    if x > tau {
        x - tau
    } else if x < -tau {
        x + tau
    } else {
        0.0
    }
}

#[inline]
fn group_scale(norm: f64, tau: f64) -> f64 {
    // v = 0 maps to 0 (removable singularity of 1 - τ/‖v‖)
    if norm <= tau || norm == 0.0 {
        0.0
    } else {
        1.0 - tau / norm
    }
}

/// `sign(v_j) · max(|v_j| − τ, 0)` per coordinate.
pub fn soft_threshold(v: &[f64], tau: f64) -> Result<Vec<f64>> {
    if !(tau >= 0.0) {
        return Err(contract("soft_threshold needs tau >= 0"));
    }
    Ok(v.iter().map(|&x| shrink(x, tau)).collect())
}

/// Per-coordinate clamp onto `[lo, hi]`.
pub fn project_box(v: &[f64], lo: &[f64], hi: &[f64]) -> Result<Vec<f64>> {
    check_len(v.len(), lo.len())?;
    check_len(v.len(), hi.len())?;
    if lo.iter().zip(hi).any(|(l, h)| !(l <= h)) {
        return Err(contract("project_box needs lo <= hi elementwise"));
    }
    Ok(v.iter()
        .zip(lo.iter().zip(hi))
        .map(|(&x, (&l, &h))| x.clamp(l, h))
        .collect())
}

/// Block shrinkage `v · max(1 − τ/‖v‖, 0)`, the prox of `τ‖·‖₂`.
pub fn group_shrink(v: &[f64], tau: f64) -> Result<Vec<f64>> {
    if !(tau >= 0.0) {
        return Err(contract("group_shrink needs tau >= 0"));
    }
    let s = group_scale(math::norm(v), tau);
    Ok(v.iter().map(|x| s * x).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn soft_threshold_closed_form() {
        assert_eq!(soft_threshold(&[3.0, -0.5, -3.0], 1.0).unwrap(), vec![2.0, 0.0, -2.0]);
        let v = [1.5, -2.25, 0.0, 7.0];
        assert_eq!(soft_threshold(&v, 0.0).unwrap(), v.to_vec());
        assert!(soft_threshold(&v, -1.0).is_err());
    }

    #[test]
    fn box_projection() {
        let lo = [-1.0, -1.0];
        let hi = [1.0, 1.0];
        assert_eq!(project_box(&[2.0, -2.0], &lo, &hi).unwrap(), vec![1.0, -1.0]);
        assert_eq!(project_box(&[0.25, -0.5], &lo, &hi).unwrap(), vec![0.25, -0.5]);
        assert!(project_box(&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn group_shrink_zero_and_interior() {
        assert_eq!(group_shrink(&[0.0, 0.0], 1.0).unwrap(), vec![0.0, 0.0]);
        assert_eq!(group_shrink(&[0.3, 0.4], 1.0).unwrap(), vec![0.0, 0.0]);
        let out = group_shrink(&[3.0, 4.0], 1.0).unwrap();
        assert!((out[0] - 2.4).abs() < 1e-15 && (out[1] - 3.2).abs() < 1e-15);
    }

    #[test]
    fn scalar_l1_prox() {
        let g = ProxKind::L1 { lambda: 2.0 };
        assert_eq!(g.prox(&[3.0], 0.5), vec![2.0]);
        assert_eq!(ProxKind::Zero.prox(&[3.0, -1.0], 10.0), vec![3.0, -1.0]);
    }

    #[test]
    fn box_value_is_indicator() {
        let g = ProxKind::Box { lo: vec![0.0], hi: vec![1.0] };
        assert_eq!(g.value(&[0.5]), 0.0);
        assert_eq!(g.value(&[1.5]), f64::INFINITY);
        assert!(g.validate(1).is_ok());
        assert!(g.validate(2).is_err());
    }
}
