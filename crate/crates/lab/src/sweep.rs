//! Grid sweeps over `c`, `β₀` and `θ` on a worker pool.

use std::path::Path;

use pigd_core::diagnostics::RateEstimate;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, SweepPoint};
use crate::error::{io_err, LabError, Result};
use crate::experiment::{resolve_cache, run_experiment, write_json, RunOptions};

pub const INDEX_FILE: &str = "sweep_index.json";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRecord {
    #[serde(flatten)]
    pub point: SweepPoint,
    pub dir: String,
    pub ok: bool,
    pub error: Option<String>,
    pub rates: Vec<RateEstimate>,
}

/// Runs every grid point in `run_NNN` under `out` and writes the index.
/// Failed points are recorded and reported after the others finish.
pub fn run_sweep(cfg: &ExperimentConfig, out: &Path, workers: usize, opts: &RunOptions) -> Result<Vec<SweepRecord>> {
    let points = cfg.expand_sweep()?;
    std::fs::create_dir_all(out).map_err(io_err(format!("creating {}", out.display())))?;
    let cache = resolve_cache(out, cfg);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| LabError::Config {
            path: "--workers".into(),
            message: e.to_string(),
        })?;
    let records: Vec<SweepRecord> = pool.install(|| {
        points
            .par_iter()
            .map(|(point, point_cfg)| {
                let dir = format!("run_{:03}", point.index);
                let result = run_experiment(point_cfg, &out.join(&dir), &cache, opts);
                let (ok, error, rates) = match result {
                    Ok(summary) => (
                        true,
                        None,
                        summary.rates.into_iter().filter_map(|r| r.estimate).collect(),
                    ),
                    Err(e) => (false, Some(e.to_string()), Vec::new()),
                };
                SweepRecord {
                    point: point.clone(),
                    dir,
                    ok,
                    error,
                    rates,
                }
            })
            .collect()
    });
    write_json(&out.join(INDEX_FILE), &records)?;
    let failed = records.iter().filter(|r| !r.ok).count();
    if failed > 0 {
        return Err(LabError::SweepFailed {
            failed,
            total: records.len(),
        });
    }
    Ok(records)
}
