mod common;

use common::*;
use pigd_core::diagnostics::{
    audit_floor, descent_audit, error_bound_terms, fit_rate, lemma5_audit, linear_rate_audit, lyapunov_audit,
    lyapunov_xi, omega_from_ell, residual_s, rounding_floor, running_min, seed_mean, select_window, RateModel,
};
use pigd_core::library::{make_instance, InstanceSpec, ProblemKind};
use pigd_core::rng::SeededRng;
use pigd_core::schedule::{delta_coeff, epsilon_coeff};
use pigd_core::solver::{run_cyclic, run_pigd, run_stochastic};
use pigd_core::{BetaRule, ParamSchedule, ProxKind, RunConfig, Variant};

fn full(beta0: f64, c: f64) -> ParamSchedule {
    ParamSchedule::new(BetaRule::Constant { beta0 }, c, Variant::Full, 1).unwrap()
}

fn strongly_convex(n: usize, seed: u64) -> pigd_core::CompositeProblem {
    make_instance(&InstanceSpec::new(ProblemKind::Quadratic, n).with_conditioning(20.0).with_seed(seed)).unwrap()
}

#[test]
fn lyapunov_xi_examples() {
    assert_eq!(lyapunov_xi(2.0, 4.0, 0.75, 1.0), 4.0);
    assert_eq!(lyapunov_xi(-3.5, 0.0, 10.0, -3.5), 0.0);
}

#[test]
fn running_min_examples() {
    assert_eq!(running_min(&[3.0, 1.0, 2.0, 0.5]), vec![3.0, 1.0, 1.0, 0.5]);
    assert_eq!(running_min(&[2.0; 5]), vec![2.0; 5]);
    assert!(running_min(&[]).is_empty());
}

#[test]
fn fit_rate_exact_laws() {
    let power: Vec<(usize, f64)> = (10..=1000).map(|k| (k, 7.0 / k as f64)).collect();
    let est = fit_rate(&power, RateModel::SublinearPower).unwrap();
    assert!((est.exponent_or_ratio - 1.0).abs() < 1e-6);
    let geo: Vec<(usize, f64)> = (0..200).map(|k| (k, 3.0 * 0.9f64.powi(k as i32))).collect();
    let est = fit_rate(&geo, RateModel::Geometric).unwrap();
    assert!((est.exponent_or_ratio - 0.9).abs() < 1e-6);
    assert!(est.fit_residual < 1e-10);
    assert!(fit_rate(&power[..5], RateModel::SublinearPower).is_err());
}

#[test]
fn window_selection_drops_floor_and_range() {
    let s = vec![(1, 1.0), (5, 1e-3), (10, 1e-20), (20, 0.5)];
    assert_eq!(select_window(&s, 2, 20, 1e-16), vec![(5, 1e-3), (20, 0.5)]);
}

#[test]
fn omega_limits() {
    assert_eq!(omega_from_ell(0.0), 0.0);
    for ell in [1e-3, 0.5, 1.0, 10.0, 1e6] {
        let w = omega_from_ell(ell);
        assert!(w > 0.0 && w < 1.0);
        assert!((w * w + ell * w - ell).abs() < 1e-9 * ell.max(1.0));
    }
}

#[test]
fn residual_vanishes_at_minimizer() {
    let p = strongly_convex(8, 1);
    let x_star = p.solution_project(&[0.0; 8]).unwrap();
    let s = residual_s(&p, &x_star, 0.7).unwrap();
    assert!(norm(&s) < 1e-12);
}

#[test]
fn residual_without_regularizer_is_scaled_gradient() {
    let p = strongly_convex(8, 2);
    let x = vec![0.4; 8];
    let g = p.grad_f(&x).unwrap();
    let s = residual_s(&p, &x, 0.3).unwrap();
    for j in 0..8 {
        assert!((s[j] - 0.3 * g[j]).abs() < 1e-15);
    }
}

#[test]
fn residual_matches_composed_evaluation() {
    let p = make_instance(&InstanceSpec::new(ProblemKind::Lasso, 20).with_blocks(4).with_seed(6)).unwrap();
    let mut rng = SeededRng::new(7);
    for _ in 0..20 {
        let x = random_vec(&mut rng, 20, 1.0);
        let gamma = 0.5 / p.lipschitz();
        let g = p.grad_f(&x).unwrap();
        let mut composed = Vec::new();
        for i in 0..4 {
            let r = p.blocks().range(i);
            let v: Vec<f64> = r.clone().map(|j| x[j] - gamma * g[j]).collect();
            let z = p.prox_block(i, &v, gamma).unwrap();
            composed.extend(r.zip(z).map(|(j, zj)| x[j] - zj));
        }
        let s = residual_s(&p, &x, gamma).unwrap();
        assert!(dist(&s, &composed) <= 1e-14 * (1.0 + norm(&composed)));
    }
}

#[test]
fn descent_audit_flags_constructed_counterexample() {
    let p = make_instance(&InstanceSpec::new(ProblemKind::Lasso, 10).with_seed(1)).unwrap();
    let mut t = run_pigd(&p, &full(0.5, 0.9), &[0.0; 10], &RunConfig::new(20)).unwrap();
    assert!(descent_audit(&t).unwrap() >= -1e-12);
    t.entries[7].objective += 1.0;
    assert!(descent_audit(&t).unwrap() < -0.5);
}

#[test]
fn zero_inertia_audit_is_sufficient_decrease() {
    let p = make_instance(&InstanceSpec::new(ProblemKind::Lasso, 15).with_seed(2)).unwrap();
    let c = 0.8;
    let t = run_pigd(&p, &full(0.0, c), &[0.0; 15], &RunConfig::new(300).keep_iterates(true)).unwrap();
    let its = t.iterates.as_ref().unwrap();
    let gamma = 2.0 * c / p.lipschitz();
    let coeff = 1.0 / gamma - p.lipschitz() / 2.0;
    let mut direct: f64 = 0.0;
    for w in its.windows(2) {
        let d = dist(&w[0], &w[1]);
        let slack = p.objective(&w[0]).unwrap() - p.objective(&w[1]).unwrap() - coeff * d * d;
        direct = direct.min(slack);
    }
    let audited = descent_audit(&t).unwrap();
    assert!((audited - direct).abs() <= 1e-12 * (1.0 + t.meta.initial_objective.abs()));
}

#[test]
fn error_bound_holds_on_strongly_convex_quadratic() {
    let p = strongly_convex(10, 3);
    let t = run_pigd(&p, &full(0.5, 0.9), &[1.0; 10], &RunConfig::new(1000).keep_iterates(true)).unwrap();
    let floor = audit_floor(p.f_star().unwrap());
    assert!(lemma5_audit(&t, &p, floor).unwrap() >= -1e-8);
    let terms = error_bound_terms(&t, &p).unwrap();
    assert_eq!(terms.len(), 1000);
    for (term, w) in terms.iter().zip(t.entries.windows(2)) {
        let delta_next = delta_coeff(w[1].gammas[0], p.lipschitz());
        assert_eq!(term.epsilon, epsilon_coeff(w[0].gammas[0], delta_next, 0.9, p.lipschitz()));
    }
}

#[test]
fn error_bound_at_optimum_is_trivial() {
    let p = strongly_convex(6, 4);
    let x_star = p.solution_project(&[0.0; 6]).unwrap();
    let t = run_pigd(&p, &full(0.5, 0.9), &x_star, &RunConfig::new(10).keep_iterates(true)).unwrap();
    let terms = error_bound_terms(&t, &p).unwrap();
    for term in &terms {
        assert!(term.slack >= -1e-24);
    }
    assert_eq!(lemma5_audit(&t, &p, audit_floor(p.f_star().unwrap())).unwrap(), 0.0);
}

#[test]
fn error_bound_audit_needs_iterates_and_projection() {
    let p = strongly_convex(6, 4);
    let t = run_pigd(&p, &full(0.5, 0.9), &[1.0; 6], &RunConfig::new(10)).unwrap();
    assert!(error_bound_terms(&t, &p).is_err());
    let lasso = make_instance(&InstanceSpec::new(ProblemKind::Lasso, 6).with_seed(1)).unwrap();
    let t = run_pigd(&lasso, &full(0.5, 0.9), &[0.0; 6], &RunConfig::new(10).keep_iterates(true)).unwrap();
    assert!(error_bound_terms(&t, &lasso).is_err());
}

#[test]
fn linear_rate_ratio_is_covered_per_step() {
    let p = strongly_convex(10, 5);
    let t = run_pigd(&p, &full(0.5, 0.9), &[1.0; 10], &RunConfig::new(500)).unwrap();
    let audit = linear_rate_audit(&t, p.nu().unwrap(), audit_floor(p.f_star().unwrap())).unwrap();
    assert!(audit.checked_steps > 10);
    assert!(audit.omega < 1.0);
    assert!(audit.max_violation >= 0.0);
}

#[test]
fn cyclic_error_bound_and_rate_on_block_quadratic() {
    let spec = InstanceSpec::new(ProblemKind::Quadratic, 48).with_blocks(4).with_conditioning(100.0);
    let p = make_instance(&spec).unwrap();
    let sched = ParamSchedule::new(BetaRule::Constant { beta0: 0.5 }, 0.9, Variant::Cyclic, 4).unwrap();
    let t = run_cyclic(&p, &sched, &[1.0; 48], &RunConfig::new(2000).keep_iterates(true)).unwrap();
    let floor = audit_floor(p.f_star().unwrap());
    assert!(lemma5_audit(&t, &p, floor).unwrap() >= -1e-8);
    let audit = linear_rate_audit(&t, p.nu().unwrap(), floor).unwrap();
    assert!(audit.checked_steps > 100);
    assert!(audit.max_violation >= 0.0);
}

#[test]
fn underdetermined_lasso_sublinear_fit() {
    for seed in 0..3 {
        let spec = InstanceSpec::new(ProblemKind::Lasso, 200).with_rows(50).with_lambda(0.1).with_seed(seed);
        let p = make_instance(&spec).unwrap();
        let t = run_pigd(&p, &full(0.5, 0.9), &[0.0; 200], &RunConfig::new(10_000)).unwrap();
        let w = select_window(&t.lyapunov_series(), 100, 10_000, rounding_floor(p.f_star().unwrap()));
        let est = fit_rate(&w, RateModel::SublinearPower).unwrap();
        assert!(est.exponent_or_ratio >= 0.9, "seed {seed}: p = {}", est.exponent_or_ratio);
    }
}

#[test]
fn seed_mean_aligns_and_averages() {
    let p = make_instance(&InstanceSpec::new(ProblemKind::Lasso, 8).with_blocks(2).with_seed(1)).unwrap();
    let sched = ParamSchedule::new(BetaRule::Constant { beta0: 0.5 }, 0.9, Variant::Stochastic, 2).unwrap();
    let traces: Vec<_> = (0..3)
        .map(|s| run_stochastic(&p, &sched, &[0.0; 8], &RunConfig::new(30).seed(s)).unwrap())
        .collect();
    let mean = seed_mean(&traces, |e| e.objective).unwrap();
    assert_eq!(mean.len(), 31);
    for (j, &(k, v)) in mean.iter().enumerate() {
        assert_eq!(k, j);
        let direct = traces.iter().map(|t| t.entries[j].objective).sum::<f64>() / 3.0;
        assert!((v - direct).abs() <= 1e-15 * (1.0 + direct.abs()));
    }
    assert!(seed_mean(&[], |e| e.objective).is_err());
}

#[test]
fn seed_mean_running_min_decays_like_one_over_k() {
    let spec = InstanceSpec::new(ProblemKind::Quadratic, 32).with_blocks(8).with_conditioning(100.0);
    let p = make_instance(&spec).unwrap();
    let sched = ParamSchedule::new(BetaRule::Constant { beta0: 0.5 }, 0.9, Variant::Stochastic, 8).unwrap();
    let traces: Vec<_> = (0..20)
        .map(|s| run_stochastic(&p, &sched, &[1.0; 32], &RunConfig::new(5000).seed(s).record_every(100)).unwrap())
        .collect();
    let rm = seed_mean(&traces, |e| e.min_residual_sq).unwrap();
    let tail: Vec<f64> = rm.iter().filter(|(k, _)| *k >= 500).map(|(k, v)| *k as f64 * v).collect();
    assert!(tail.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn box_constrained_run_audits_clean() {
    let b = [2.0, -3.0, 0.5];
    let p = shifted_identity(&b, ProxKind::Box { lo: vec![-1.0; 3], hi: vec![1.0; 3] }).with_f_star(-4.125);
    let t = run_pigd(&p, &full(0.3, 0.7), &[0.0; 3], &RunConfig::new(100)).unwrap();
    assert!(lyapunov_audit(&t).unwrap() >= -1e-12);
    assert!(t.entries.last().unwrap().lyapunov.abs() < 1e-12);
}
