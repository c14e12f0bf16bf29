//! CSV reporting for sweep and benchmark results.

use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

/// One measured configuration. Serialized column order is the CSV schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub dataset: String,
    pub strategy: String,
    pub s_width: usize,
    pub sampling_rate: f64,
    pub flop_ratio: f64,
    pub spmm_ms: f64,
    pub speedup_vs_exact: f64,
    /// Empty field in the CSV when the run computed no accuracy.
    pub accuracy: Option<f64>,
}

pub fn write_csv(path: impl AsRef<Path>, rows: &[SweepResult]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)
        .with_context(|| format!("cannot write {}", path.display()))?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[allow(dead_code)] // used by tests and downstream tooling
pub fn read_csv(path: impl AsRef<Path>) -> Result<Vec<SweepResult>> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let mut out = Vec::new();
    for row in r.deserialize() {
        out.push(row?);
    }
    Ok(out)
}
