//! Executes one configured experiment and writes its artifacts.

use std::path::Path;

use pigd_core::diagnostics::{
    audit_floor, descent_audit, fit_rate, fit_rate_after_burn_in, lemma5_audit, linear_rate_audit, lyapunov_audit,
    rounding_floor, select_window, LinearRateAudit, RateEstimate, RateModel,
};
use pigd_core::library::InstanceSpec;
use pigd_core::solver::{run_cyclic, run_pigd, run_stochastic, StopReason};
use pigd_core::{BetaRule, CompositeProblem, RunConfig, Trace, Variant};
use rayon::prelude::*;
use serde::Serialize;

use crate::cache::{ReferenceCache, ReferenceSource};
use crate::config::{Algorithm, Audit, ExperimentConfig, RateFitSection};
use crate::error::{io_err, LabError, Result};
use crate::traces::{mean_rows, rows, write_trace_csv, TraceRow};

/// Relative tolerance for the deterministic monotonicity audits.
pub const DETERMINISTIC_AUDIT_TOL: f64 = 1e-9;
/// Relative tolerance for the seed-averaged descent audit.
pub const STOCHASTIC_AUDIT_TOL: f64 = 1e-3;

pub const SUMMARY_FILE: &str = "summary.json";
pub const TRACE_FILE: &str = "trace.csv";
pub const MEAN_FILE: &str = "mean.csv";

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed_offset: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReferenceInfo {
    /// Cache key; `None` when `F*` has a closed form.
    pub key: Option<String>,
    pub source: ReferenceSource,
    pub f_star: f64,
    pub residual: Option<f64>,
    pub converged: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunInfo {
    pub seed: Option<u64>,
    pub csv: String,
    pub last_k: usize,
    pub stop: &'static str,
    pub initial_objective: f64,
    pub final_objective: f64,
    pub final_lyapunov: f64,
}

/// Worst slack of an audit; `relative` divides by `1 + |F(x⁰)|` except for
/// `lemma5`, whose slack is already relative.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditResult {
    pub worst_slack: f64,
    pub relative: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl AuditResult {
    fn new(worst_slack: f64, scale: f64, tolerance: f64) -> Self {
        let relative = worst_slack / scale;
        Self {
            worst_slack,
            relative,
            tolerance,
            passed: relative >= -tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearRateInfo {
    pub nu: f64,
    pub ell: f64,
    pub omega: f64,
    pub max_violation: f64,
    pub checked_steps: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct AuditSummary {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub descent: Option<AuditResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lyapunov: Option<AuditResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lemma5: Option<AuditResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub linear_rate: Option<LinearRateInfo>,
    /// Requested audits the instance cannot support, with the reason.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub skipped: Vec<SkippedAudit>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedAudit {
    pub audit: Audit,
    pub reason: String,
}

/// A rate fit, or why it could not be made.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateResult {
    pub model: RateModel,
    pub estimate: Option<RateEstimate>,
    pub error: Option<String>,
}

impl RateResult {
    fn from_fit(model: RateModel, fit: pigd_core::Result<RateEstimate>) -> Self {
        match fit {
            Ok(estimate) => Self {
                model,
                estimate: Some(estimate),
                error: None,
            },
            Err(e) => Self {
                model,
                estimate: None,
                error: Some(e.to_string()),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScheduleInfo {
    pub beta: BetaRule,
    pub c: f64,
    pub variant: Variant,
    pub m: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub schema: u32,
    pub name: Option<String>,
    pub algorithm: Algorithm,
    pub instance: InstanceSpec,
    pub schedule: ScheduleInfo,
    pub reference: ReferenceInfo,
    pub runs: Vec<RunInfo>,
    pub mean_csv: Option<String>,
    pub audits: AuditSummary,
    pub rates: Vec<RateResult>,
}

impl Summary {
    pub fn rate(&self, model: RateModel) -> Option<&RateEstimate> {
        self.rates.iter().find(|r| r.model == model)?.estimate.as_ref()
    }
}

/// Runs the configured experiment into `out`, using `cache` for `F*`.
pub fn run_experiment(cfg: &ExperimentConfig, out: &Path, cache: &ReferenceCache, opts: &RunOptions) -> Result<Summary> {
    cfg.validate()?;
    std::fs::create_dir_all(out).map_err(io_err(format!("creating {}", out.display())))?;
    let certified = cache.certify(&cfg.instance)?;
    let problem = &certified.problem;
    let f_star = problem
        .f_star()
        .expect("certified instances carry F*");
    let schedule = cfg.param_schedule()?;
    let x0 = vec![cfg.run.x0_fill; cfg.instance.n];
    let run_cfg = RunConfig::new(cfg.run.max_iters)
        .record_every(cfg.run.record_every)
        .stop_tol(cfg.run.stop_tol)
        .keep_iterates(cfg.audits.contains(&Audit::Lemma5));

    let seeds = cfg.run_seeds(opts.seed_offset);
    let traces: Vec<Trace> = seeds
        .par_iter()
        .map(|seed| {
            let rc = run_cfg.clone().seed(seed.unwrap_or(0));
            match cfg.algorithm {
                Algorithm::Pigd | Algorithm::ProxGradBaseline => run_pigd(problem, &schedule, &x0, &rc),
                Algorithm::Cyclic => run_cyclic(problem, &schedule, &x0, &rc),
                Algorithm::Stochastic => run_stochastic(problem, &schedule, &x0, &rc),
            }
        })
        .collect::<pigd_core::Result<_>>()?;

    let mut runs = Vec::with_capacity(traces.len());
    for (seed, trace) in seeds.iter().zip(&traces) {
        let name = match seed {
            Some(s) => format!("trace_seed{s}.csv"),
            None => TRACE_FILE.to_owned(),
        };
        write_trace_csv(&out.join(&name), &rows(trace))?;
        let last = trace.entries.last().expect("traces record k = 0");
        runs.push(RunInfo {
            seed: *seed,
            csv: name,
            last_k: last.k,
            stop: match trace.stop {
                StopReason::MaxIters => "max_iters",
                StopReason::Converged => "converged",
            },
            initial_objective: trace.meta.initial_objective,
            final_objective: last.objective,
            final_lyapunov: last.lyapunov,
        });
    }

    let stochastic = cfg.algorithm == Algorithm::Stochastic;
    let (mean_csv, mean) = if stochastic {
        let mean = mean_rows(&traces)?;
        write_trace_csv(&out.join(MEAN_FILE), &mean)?;
        (Some(MEAN_FILE.to_owned()), Some(mean))
    } else {
        (None, None)
    };

    let audits = audit(cfg, problem, &traces, mean.as_deref(), f_star)?;
    let lyapunov_series: Vec<(usize, f64)> = match &mean {
        Some(mean) => mean.iter().map(|r| (r.k, r.lyapunov)).collect(),
        None => traces[0].lyapunov_series(),
    };
    let rates = if cfg.audits.contains(&Audit::Rates) {
        fit_both(&lyapunov_series, &cfg.rate_fit, f_star)
    } else {
        Vec::new()
    };

    let summary = Summary {
        schema: cfg.schema,
        name: cfg.name.clone(),
        algorithm: cfg.algorithm,
        instance: cfg.instance.clone(),
        schedule: ScheduleInfo {
            beta: schedule.beta_rule,
            c: schedule.c,
            variant: schedule.variant,
            m: schedule.m,
        },
        reference: ReferenceInfo {
            key: certified.key.clone(),
            source: certified.source,
            f_star,
            residual: certified.solution.as_ref().map(|s| s.residual),
            converged: certified.solution.as_ref().map(|s| s.converged),
        },
        runs,
        mean_csv,
        audits,
        rates,
    };
    write_json(&out.join(SUMMARY_FILE), &summary)?;
    Ok(summary)
}

fn audit(
    cfg: &ExperimentConfig,
    problem: &CompositeProblem,
    traces: &[Trace],
    mean: Option<&[TraceRow]>,
    f_star: f64,
) -> Result<AuditSummary> {
    let mut out = AuditSummary::default();
    let wants = |a: Audit| cfg.audits.contains(&a);
    let min_diff = |v: &[f64]| v.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::min);

    if let Some(mean) = mean {
        let scale = 1.0 + mean[0].objective.abs();
        if wants(Audit::Descent) {
            let worst = mean.iter().map(|r| r.descent_slack).fold(0.0, f64::min);
            out.descent = Some(AuditResult::new(worst, scale, STOCHASTIC_AUDIT_TOL));
        }
        if wants(Audit::Lyapunov) {
            let xi: Vec<f64> = mean.iter().map(|r| r.lyapunov).collect();
            out.lyapunov = Some(AuditResult::new(min_diff(&xi), scale, STOCHASTIC_AUDIT_TOL));
        }
        return Ok(out);
    }

    let trace = &traces[0];
    let scale = 1.0 + trace.meta.initial_objective.abs();
    if trace.entries.len() < 2 {
        return Ok(out);
    }
    if wants(Audit::Descent) {
        out.descent = Some(AuditResult::new(descent_audit(trace)?, scale, DETERMINISTIC_AUDIT_TOL));
    }
    if wants(Audit::Lyapunov) {
        out.lyapunov = Some(AuditResult::new(lyapunov_audit(trace)?, scale, DETERMINISTIC_AUDIT_TOL));
    }
    if wants(Audit::Lemma5) {
        match lemma5_audit(trace, problem, audit_floor(f_star)) {
            Ok(worst) => out.lemma5 = Some(AuditResult::new(worst, 1.0, DETERMINISTIC_AUDIT_TOL)),
            Err(e @ pigd_core::Error::Unsupported(_)) => out.skipped.push(SkippedAudit {
                audit: Audit::Lemma5,
                reason: e.to_string(),
            }),
            Err(e) => return Err(e.into()),
        }
    }
    if wants(Audit::Rates) {
        if let Some(nu) = problem.nu() {
            let LinearRateAudit {
                ell,
                omega,
                max_violation,
                checked_steps,
            } = linear_rate_audit(trace, nu, audit_floor(f_star))?;
            out.linear_rate = Some(LinearRateInfo {
                nu,
                ell,
                omega,
                max_violation,
                checked_steps,
            });
        }
    }
    Ok(out)
}

/// Power-law and geometric fits of `series` under the configured window.
pub fn fit_both(series: &[(usize, f64)], fit: &RateFitSection, f_star: f64) -> Vec<RateResult> {
    let floor = fit.floor.unwrap_or_else(|| rounding_floor(f_star));
    [RateModel::SublinearPower, RateModel::Geometric]
        .into_iter()
        .map(|model| {
            let est = match fit.window {
                Some((lo, hi)) => fit_rate(&select_window(series, lo, hi, floor), model),
                None => fit_rate_after_burn_in(series, model, fit.burn_in, floor),
            };
            RateResult::from_fit(model, est)
        })
        .collect()
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(io_err(format!("writing {}", path.display())))?;
    Ok(())
}

/// Output directory: the CLI flag wins over the config's `output_dir`.
pub fn resolve_out(cli: Option<&Path>, cfg: &ExperimentConfig) -> Result<std::path::PathBuf> {
    cli.map(Path::to_path_buf)
        .or_else(|| cfg.output_dir.clone())
        .ok_or_else(|| LabError::Config {
            path: "output_dir".into(),
            message: "no output directory (set output_dir or pass --out)".into(),
        })
}

/// Cache directory: the config's `reference_cache`, else `<out>/reference_cache`.
pub fn resolve_cache(out: &Path, cfg: &ExperimentConfig) -> ReferenceCache {
    ReferenceCache::new(
        cfg.reference_cache
            .clone()
            .unwrap_or_else(|| out.join("reference_cache")),
    )
}
