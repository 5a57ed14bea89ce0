//! Result row schemas and CSV/JSON emission.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

/// One trajectory record: either a per-step row or a run summary
/// (`final = true`, `step = T`).
#[derive(Debug, Clone, Serialize)]
pub struct ResultRow {
    pub run_id: String,
    pub experiment: String,
    pub optimizer: String,
    pub phi: String,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub v0: f64,
    pub lr: f64,
    pub rotation_kind: String,
    pub rotation_t: Option<f64>,
    pub seed: u64,
    pub step: usize,
    pub loss: f64,
    pub grad_l1: f64,
    pub grad_l2: f64,
    pub grad_phi_dual: f64,
    pub v_min: Option<f64>,
    pub v_max: Option<f64>,
    #[serde(rename = "final")]
    pub is_final: bool,
}

/// One invariance comparison.
#[derive(Debug, Clone, Serialize)]
pub struct InvarianceRow {
    pub run_id: String,
    pub experiment: String,
    pub optimizer: String,
    pub transform: String,
    pub noise: String,
    pub dim: usize,
    pub steps: usize,
    pub seed: u64,
    pub deviation: f64,
    pub threshold: f64,
    pub expect_invariant: bool,
    /// Whether this row participates in the suite's pass/fail verdict.
    pub required: bool,
    pub passed: bool,
}

/// One measured quantity from the norm-estimation experiment.
#[derive(Debug, Clone, Serialize)]
pub struct NormRow {
    pub metric: String,
    pub rotation_kind: String,
    pub rotation_t: Option<f64>,
    pub value: f64,
}

/// A grid cell that failed; recorded in metadata so one bad cell cannot
/// abort the rest of the grid.
#[derive(Debug, Clone, Serialize)]
pub struct CellError {
    pub cell: String,
    pub message: String,
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut writer = csv::Writer::from_path(path).map_err(csv_err)?;
    for row in rows {
        writer.serialize(row).map_err(csv_err)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_meta(path: &Path, meta: &serde_json::Value) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let text = serde_json::to_string_pretty(meta)
        .map_err(|e| Error::Config(format!("metadata serialization failed: {e}")))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Config(format!("csv write failed: {e}"))
}
