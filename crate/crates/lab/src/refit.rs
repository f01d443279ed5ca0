//! `rates` subcommand: fits the Lyapunov column of existing trace CSVs.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::RateFitSection;
use crate::error::Result;
use crate::experiment::{fit_both, RateResult};
use crate::traces::read_trace_csv;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefitResult {
    pub csv: PathBuf,
    pub rows: usize,
    pub rates: Vec<RateResult>,
}

/// `f_star` only sets the default floor `1e-14(1+|F*|)`; the CSV's
/// `lyapunov` column already has `F*` subtracted.
pub fn refit(paths: &[PathBuf], fit: &RateFitSection, f_star: f64) -> Result<Vec<RefitResult>> {
    paths.iter().map(|p| refit_one(p, fit, f_star)).collect()
}

fn refit_one(path: &Path, fit: &RateFitSection, f_star: f64) -> Result<RefitResult> {
    let rows = read_trace_csv(path)?;
    let series: Vec<(usize, f64)> = rows.iter().map(|r| (r.k, r.lyapunov)).collect();
    Ok(RefitResult {
        csv: path.to_path_buf(),
        rows: rows.len(),
        rates: fit_both(&series, fit, f_star),
    })
}
