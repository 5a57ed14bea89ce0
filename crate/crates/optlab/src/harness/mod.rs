//! Experiment orchestration: configs in, CSV rows and JSON metadata out.
//!
//! Four experiments are available behind the `optlab` CLI:
//!
//! * [`run_quadratic_table`] — rotated-quadratic geometry/loss table,
//! * [`run_convergence_sweep`] — empirical minima against rate bounds,
//! * [`run_invariance_suite`] — rotation/permutation invariance checks,
//! * [`estimate_norms_cmd`] — Hessian norm measurements.
//!
//! Identical config plus master seed means byte-identical CSV output: all
//! randomness flows through per-cell [`crate::rng::RngStream`]s, grid cells
//! are order-independent, and rows are sorted before writing.

mod config;
mod invariance;
mod norms;
mod results;
mod stats;
mod sweep;
mod table1;

pub use config::{
    default_lr_grid, ExperimentConfig, ExperimentKind, OptimizerCell, OptimizerKind,
    ProblemSpec, RotationDescriptor, RotationKind, SweepAlgo,
};
pub use invariance::{run_invariance_suite, InvarianceSuiteResult};
pub use norms::{estimate_norms_cmd, NormsResult};
pub use results::{write_csv, write_meta, CellError, InvarianceRow, NormRow, ResultRow};
pub use stats::{fit_slope, spearman};
pub use sweep::{run_convergence_sweep, SweepPoint, SweepResult};
pub use table1::{run_quadratic_table, Table1Cell, Table1Result};

use std::path::Path;

use crate::error::Result;

/// Writes an experiment's rows and metadata into `dir`.
///
/// Produces `<name>.csv` and `<name>_meta.json`; the table experiment also
/// writes `<name>_summary.csv` with the tuned per-cell summaries.
pub fn write_table1(dir: &Path, result: &Table1Result) -> Result<()> {
    write_csv(&dir.join("quadratic_table.csv"), &result.rows)?;
    write_csv(&dir.join("quadratic_table_summary.csv"), &result.cells)?;
    write_meta(&dir.join("quadratic_table_meta.json"), &result.meta)
}

pub fn write_sweep(dir: &Path, result: &SweepResult) -> Result<()> {
    write_csv(&dir.join("convergence_sweep.csv"), &result.rows)?;
    write_csv(&dir.join("convergence_sweep_summary.csv"), &result.points)?;
    write_meta(&dir.join("convergence_sweep_meta.json"), &result.meta)
}

pub fn write_invariance(dir: &Path, result: &InvarianceSuiteResult) -> Result<()> {
    write_csv(&dir.join("invariance_suite.csv"), &result.rows)?;
    write_meta(&dir.join("invariance_suite_meta.json"), &result.meta)
}

pub fn write_norms(dir: &Path, result: &NormsResult) -> Result<()> {
    write_csv(&dir.join("norm_estimate.csv"), &result.rows)?;
    write_meta(&dir.join("norm_estimate_meta.json"), &result.meta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table1_writes_deterministic_files() {
        let mut cfg = ExperimentConfig::default();
        cfg.problem = ProblemSpec::Diagonal {
            values: vec![1.0, 0.25],
        };
        cfg.rotations = vec![RotationDescriptor::skew_exp(0.0)];
        cfg.optimizers = vec![OptimizerCell::new(OptimizerKind::Adam, 0.0, 0.0)];
        cfg.lr_grid = vec![0.05, 0.1];
        cfg.steps = 5;

        let result = run_quadratic_table(&cfg).unwrap();
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        write_table1(dir_a.path(), &result).unwrap();
        let result_b = run_quadratic_table(&cfg).unwrap();
        write_table1(dir_b.path(), &result_b).unwrap();
        let csv_a = std::fs::read(dir_a.path().join("quadratic_table.csv")).unwrap();
        let csv_b = std::fs::read(dir_b.path().join("quadratic_table.csv")).unwrap();
        assert_eq!(csv_a, csv_b);
        assert!(dir_a.path().join("quadratic_table_meta.json").exists());
        assert!(dir_a.path().join("quadratic_table_summary.csv").exists());
    }
}
