//! Experiment configuration: versioned JSON, unknown keys rejected.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use pigd_core::library::InstanceSpec;
use pigd_core::{BetaRule, ParamSchedule, Variant};
use serde::{Deserialize, Serialize};

use crate::error::{config_err, io_err, LabError, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Pigd,
    Cyclic,
    Stochastic,
    /// Plain forward-backward splitting (`β ≡ 0`).
    ProxGradBaseline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Audit {
    Descent,
    Lemma5,
    Lyapunov,
    Rates,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSection {
    /// Required except for `prox_grad_baseline`, which only accepts `β ≡ 0`.
    #[serde(default)]
    pub beta: Option<BetaRule>,
    pub c: f64,
    /// Defaults to the variant implied by the algorithm.
    #[serde(default)]
    pub variant: Option<Variant>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub max_iters: usize,
    #[serde(default = "one")]
    pub record_every: usize,
    #[serde(default)]
    pub stop_tol: f64,
    /// Every coordinate of `x⁰` (and `x⁻¹ = x⁰`).
    #[serde(default)]
    pub x0_fill: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateFitSection {
    /// Inclusive `[k_lo, k_hi]`; otherwise the last 90% of the run.
    #[serde(default)]
    pub window: Option<(usize, usize)>,
    #[serde(default = "default_burn_in")]
    pub burn_in: f64,
    /// Values at or below this are dropped; defaults to `1e-14(1+|F*|)`.
    #[serde(default)]
    pub floor: Option<f64>,
}

impl Default for RateFitSection {
    fn default() -> Self {
        Self {
            window: None,
            burn_in: default_burn_in(),
            floor: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    #[serde(default)]
    pub c: Vec<f64>,
    #[serde(default)]
    pub beta0: Vec<f64>,
    #[serde(default)]
    pub theta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OdeSection {
    /// Defaults to all ones.
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
    /// Defaults to `−∇f(x0)`.
    #[serde(default)]
    pub v0: Option<Vec<f64>>,
    pub alpha: f64,
    pub h: f64,
    pub t_end: f64,
    pub theta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: u32,
    #[serde(default)]
    pub name: Option<String>,
    pub instance: InstanceSpec,
    pub algorithm: Algorithm,
    pub schedule: ScheduleSection,
    pub run: RunSection,
    #[serde(default)]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub audits: BTreeSet<Audit>,
    #[serde(default)]
    pub rate_fit: RateFitSection,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Defaults to `<out>/reference_cache`.
    #[serde(default)]
    pub reference_cache: Option<PathBuf>,
    #[serde(default)]
    pub sweep: Option<SweepGrid>,
    #[serde(default)]
    pub ode: Option<OdeSection>,
}

fn one() -> usize {
    1
}

fn default_burn_in() -> f64 {
    0.1
}

pub fn load(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(io_err(format!("reading {}", path.display())))?;
    parse(&text)
}

/// Parses and validates; errors carry the offending field path.
pub fn parse(text: &str) -> Result<ExperimentConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| LabError::Config {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    cfg.validate()?;
    Ok(cfg)
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA_VERSION {
            return Err(config_err(
                "schema",
                format!("unsupported schema {}, expected {SCHEMA_VERSION}", self.schema),
            ));
        }
        self.instance
            .validate()
            .map_err(|e| config_err("instance", e.to_string()))?;
        self.variant()?;
        self.beta_rule()?;
        self.param_schedule()?;

        let run = &self.run;
        if run.max_iters == 0 {
            return Err(config_err("run.max_iters", "must be >= 1"));
        }
        if run.record_every == 0 {
            return Err(config_err("run.record_every", "must be >= 1"));
        }
        if !(run.stop_tol >= 0.0 && run.stop_tol.is_finite()) {
            return Err(config_err("run.stop_tol", "must be finite and >= 0"));
        }
        if !run.x0_fill.is_finite() {
            return Err(config_err("run.x0_fill", "must be finite"));
        }

        if self.algorithm == Algorithm::Stochastic && self.seeds.is_empty() {
            return Err(config_err("seeds", "stochastic runs need at least one seed"));
        }
        let distinct: BTreeSet<u64> = self.seeds.iter().copied().collect();
        if distinct.len() != self.seeds.len() {
            return Err(config_err("seeds", "seeds must be distinct"));
        }
        if self.algorithm == Algorithm::Stochastic && self.audits.contains(&Audit::Lemma5) {
            return Err(config_err("audits", "lemma5 covers the full and cyclic variants"));
        }

        let fit = &self.rate_fit;
        if let Some((lo, hi)) = fit.window {
            if lo >= hi {
                return Err(config_err("rate_fit.window", "needs k_lo < k_hi"));
            }
        }
        if !(0.0..1.0).contains(&fit.burn_in) {
            return Err(config_err("rate_fit.burn_in", "must lie in [0, 1)"));
        }
        if let Some(floor) = fit.floor {
            if !(floor >= 0.0 && floor.is_finite()) {
                return Err(config_err("rate_fit.floor", "must be finite and >= 0"));
            }
        }

        if let Some(grid) = &self.sweep {
            if grid.c.is_empty() && grid.beta0.is_empty() && grid.theta.is_empty() {
                return Err(config_err("sweep", "grid is empty"));
            }
            if self.algorithm == Algorithm::ProxGradBaseline && !(grid.beta0.is_empty() && grid.theta.is_empty()) {
                return Err(config_err("sweep", "prox_grad_baseline only sweeps c"));
            }
        }
        if let Some(ode) = &self.ode {
            let n = self.instance.n;
            for (name, v) in [("x0", &ode.x0), ("v0", &ode.v0)] {
                if let Some(v) = v {
                    if v.len() != n {
                        return Err(config_err(format!("ode.{name}"), format!("expected {n} entries")));
                    }
                    if v.iter().any(|x| !x.is_finite()) {
                        return Err(config_err(format!("ode.{name}"), "entries must be finite"));
                    }
                }
            }
            for (name, v) in [("alpha", ode.alpha), ("h", ode.h), ("t_end", ode.t_end), ("theta", ode.theta)] {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(config_err(format!("ode.{name}"), "must be finite and > 0"));
                }
            }
        }
        Ok(())
    }

    /// Variant implied by the algorithm, checked against an explicit one.
    pub fn variant(&self) -> Result<Variant> {
        let given = self.schedule.variant;
        let ok = |v: Variant| {
            matches!(
                (self.algorithm, v),
                (Algorithm::Pigd | Algorithm::ProxGradBaseline, Variant::Full)
                    | (Algorithm::Cyclic, Variant::Cyclic)
                    | (Algorithm::Stochastic, Variant::Stochastic | Variant::StochasticLinear { .. })
            )
        };
        match given {
            Some(v) if ok(v) => Ok(v),
            Some(v) => Err(config_err(
                "schedule.variant",
                format!("{v:?} is inconsistent with algorithm {:?}", self.algorithm),
            )),
            None => Ok(match self.algorithm {
                Algorithm::Pigd | Algorithm::ProxGradBaseline => Variant::Full,
                Algorithm::Cyclic => Variant::Cyclic,
                Algorithm::Stochastic => Variant::Stochastic,
            }),
        }
    }

    pub fn beta_rule(&self) -> Result<BetaRule> {
        let zero = BetaRule::Constant { beta0: 0.0 };
        match (self.algorithm, self.schedule.beta) {
            (Algorithm::ProxGradBaseline, None) => Ok(zero),
            (Algorithm::ProxGradBaseline, Some(b)) if b == zero => Ok(zero),
            (Algorithm::ProxGradBaseline, Some(_)) => {
                Err(config_err("schedule.beta", "prox_grad_baseline runs without inertia"))
            }
            (_, Some(b)) => Ok(b),
            (_, None) => Err(config_err("schedule.beta", "missing field")),
        }
    }

    pub fn param_schedule(&self) -> Result<ParamSchedule> {
        ParamSchedule::new(self.beta_rule()?, self.schedule.c, self.variant()?, self.instance.blocks)
            .map_err(|e| config_err("schedule", e.to_string()))
    }

    /// Run seeds after `offset`; one unseeded run for deterministic algorithms.
    pub fn run_seeds(&self, offset: u64) -> Vec<Option<u64>> {
        if self.algorithm == Algorithm::Stochastic {
            self.seeds.iter().map(|s| Some(s.wrapping_add(offset))).collect()
        } else {
            vec![None]
        }
    }

    /// One config per grid point, in `c`-major order, labelled for the index.
    pub fn expand_sweep(&self) -> Result<Vec<(SweepPoint, ExperimentConfig)>> {
        let grid = self.sweep.as_ref().ok_or_else(|| config_err("sweep", "missing section"))?;
        let cs = if grid.c.is_empty() { vec![self.schedule.c] } else { grid.c.clone() };
        let mut rules: Vec<BetaRule> = grid
            .beta0
            .iter()
            .map(|&beta0| BetaRule::Constant { beta0 })
            .chain(grid.theta.iter().map(|&theta| BetaRule::Diminishing { theta }))
            .collect();
        if rules.is_empty() {
            rules.push(self.beta_rule()?);
        }
        let mut out = Vec::with_capacity(cs.len() * rules.len());
        for &c in &cs {
            for &beta in &rules {
                let mut cfg = self.clone();
                cfg.sweep = None;
                cfg.schedule.c = c;
                cfg.schedule.beta = Some(beta);
                let index = out.len();
                cfg.validate().map_err(|e| match e {
                    LabError::Config { path, message } => config_err(
                        format!("sweep[{index}].{path}"),
                        message,
                    ),
                    other => other,
                })?;
                out.push((SweepPoint { index, c, beta }, cfg));
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub index: usize,
    pub c: f64,
    pub beta: BetaRule,
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "schema": 1,
        "instance": {"kind": "quadratic", "n": 10},
        "algorithm": "pigd",
        "schedule": {"beta": {"rule": "constant", "beta0": 0.5}, "c": 0.9},
        "run": {"max_iters": 100}
    }"#;

    #[test]
    fn minimal_config_parses() {
        let cfg = parse(MINIMAL).unwrap();
        assert_eq!(cfg.variant().unwrap(), Variant::Full);
        assert_eq!(cfg.run.record_every, 1);
        assert_eq!(cfg.run_seeds(7), vec![None]);
    }

    fn err_path(text: &str) -> String {
        match parse(text) {
            Err(LabError::Config { path, .. }) => path,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected_with_path() {
        let text = MINIMAL.replace("\"max_iters\": 100", "\"max_iters\": 100, \"typo\": 1");
        assert_eq!(err_path(&text), "run.typo");
        let text = MINIMAL.replace("\"n\": 10", "\"n\": 10, \"extra\": true");
        assert_eq!(err_path(&text), "instance.extra");
    }

    #[test]
    fn semantic_errors_name_the_field() {
        assert_eq!(err_path(&MINIMAL.replace("\"schema\": 1", "\"schema\": 2")), "schema");
        assert_eq!(err_path(&MINIMAL.replace("\"c\": 0.9", "\"c\": 1.5")), "schedule");
        let stoch = MINIMAL.replace("\"pigd\"", "\"stochastic\"");
        assert_eq!(err_path(&stoch), "seeds");
        let mismatch = MINIMAL.replace("\"c\": 0.9", "\"c\": 0.9, \"variant\": {\"kind\": \"cyclic\"}");
        assert_eq!(err_path(&mismatch), "schedule.variant");
        let baseline = MINIMAL.replace("\"pigd\"", "\"prox_grad_baseline\"");
        assert_eq!(err_path(&baseline), "schedule.beta");
        assert_eq!(err_path(&MINIMAL.replace("\"n\": 10", "\"n\": 0")), "instance");
        assert_eq!(err_path(&MINIMAL.replace("\"max_iters\": 100", "\"max_iters\": \"x\"")), "run.max_iters");
    }

    #[test]
    fn sweep_expands_grid() {
        let text = MINIMAL.replace(
            "\"run\"",
            "\"sweep\": {\"c\": [0.5, 0.9], \"beta0\": [0.1], \"theta\": [1.5]}, \"run\"",
        );
        let cfg = parse(&text).unwrap();
        let points = cfg.expand_sweep().unwrap();
        assert_eq!(points.len(), 4);
        assert_eq!(points[3].0.c, 0.9);
        assert_eq!(points[3].1.schedule.beta, Some(BetaRule::Diminishing { theta: 1.5 }));
        assert!(points.iter().all(|(_, c)| c.sweep.is_none()));
    }
}
