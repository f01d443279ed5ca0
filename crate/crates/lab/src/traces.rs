//! Trace CSV files: `k,F,lyapunov,step_sq,residual_sq,descent_slack`.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use pigd_core::diagnostics::seed_mean;
use pigd_core::{Trace, TraceEntry};

use crate::error::{io_err, LabError, Result};

pub const TRACE_HEADER: [&str; 6] = ["k", "F", "lyapunov", "step_sq", "residual_sq", "descent_slack"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub k: usize,
    pub objective: f64,
    pub lyapunov: f64,
    pub step_sq: f64,
    pub residual_sq: f64,
    pub descent_slack: f64,
}

impl TraceRow {
    pub fn from_entry(e: &TraceEntry) -> Self {
        Self {
            k: e.k,
            objective: e.objective,
            lyapunov: e.lyapunov,
            step_sq: e.step_sq,
            residual_sq: e.residual_sq,
            descent_slack: e.descent_slack,
        }
    }

    fn values(&self) -> [f64; 5] {
        [self.objective, self.lyapunov, self.step_sq, self.residual_sq, self.descent_slack]
    }
}

pub fn rows(trace: &Trace) -> Vec<TraceRow> {
    trace.entries.iter().map(TraceRow::from_entry).collect()
}

/// Columnwise seed mean of traces recorded at identical iterations.
pub fn mean_rows(traces: &[Trace]) -> Result<Vec<TraceRow>> {
    let col = |f: fn(&TraceEntry) -> f64| seed_mean(traces, f);
    let f = col(|e| e.objective)?;
    let xi = col(|e| e.lyapunov)?;
    let step = col(|e| e.step_sq)?;
    let res = col(|e| e.residual_sq)?;
    let slack = col(|e| e.descent_slack)?;
    Ok((0..f.len())
        .map(|j| TraceRow {
            k: f[j].0,
            objective: f[j].1,
            lyapunov: xi[j].1,
            step_sq: step[j].1,
            residual_sq: res[j].1,
            descent_slack: slack[j].1,
        })
        .collect())
}

/// 17 significant digits, so values round-trip exactly.
pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_trace_csv(path: &Path, rows: &[TraceRow]) -> Result<()> {
    let file = File::create(path).map_err(io_err(format!("creating {}", path.display())))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(TRACE_HEADER)?;
    for row in rows {
        if let Some(bad) = row.values().iter().find(|v| !v.is_finite()) {
            return Err(LabError::Data {
                path: path.to_path_buf(),
                message: format!("non-finite value {bad} at k = {}", row.k),
            });
        }
        let mut record = vec![row.k.to_string()];
        record.extend(row.values().iter().map(|&v| format_value(v)));
        w.write_record(&record)?;
    }
    let mut file = w.into_inner().map_err(|e| LabError::Io {
        context: format!("flushing {}", path.display()),
        source: e.into_error(),
    })?;
    file.flush().map_err(io_err(format!("flushing {}", path.display())))?;
    Ok(())
}

pub fn read_trace_csv(path: &Path) -> Result<Vec<TraceRow>> {
    let data_err = |message: String| LabError::Data {
        path: path.to_path_buf(),
        message,
    };
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header != TRACE_HEADER {
        return Err(data_err(format!("unexpected header {}", header.join(","))));
    }
    let mut out = Vec::new();
    for (line, record) in r.records().enumerate() {
        let record = record?;
        let k = record[0]
            .parse::<usize>()
            .map_err(|e| data_err(format!("row {}: k: {e}", line + 1)))?;
        let mut v = [0.0; 5];
        for (j, slot) in v.iter_mut().enumerate() {
            *slot = record[j + 1]
                .parse::<f64>()
                .map_err(|e| data_err(format!("row {}: {}: {e}", line + 1, TRACE_HEADER[j + 1])))?;
        }
        out.push(TraceRow {
            k,
            objective: v[0],
            lyapunov: v[1],
            step_sq: v[2],
            residual_sq: v[3],
            descent_slack: v[4],
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_round_trip_through_text() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 1e300, f64::MIN_POSITIVE, 123456789.12345679, 0.0] {
            assert_eq!(format_value(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn write_then_read() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let rows = vec![
            TraceRow {
                k: 0,
                objective: 1.0 / 3.0,
                lyapunov: 0.25,
                step_sq: 0.0,
                residual_sq: 1e-20,
                descent_slack: 0.0,
            },
            TraceRow {
                k: 5,
                objective: 0.1,
                lyapunov: 0.05,
                step_sq: 2.0,
                residual_sq: 3.0,
                descent_slack: -1e-17,
            },
        ];
        write_trace_csv(&path, &rows).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("k,F,lyapunov,step_sq,residual_sq,descent_slack\n"));
        assert_eq!(read_trace_csv(&path).unwrap(), rows);
    }

    #[test]
    fn non_finite_values_are_refused() {
        let dir = tempfile::tempdir().unwrap();
        let row = TraceRow {
            k: 1,
            objective: f64::NAN,
            lyapunov: 0.0,
            step_sq: 0.0,
            residual_sq: 0.0,
            descent_slack: 0.0,
        };
        assert!(write_trace_csv(&dir.path().join("bad.csv"), &[row]).is_err());
    }
}
