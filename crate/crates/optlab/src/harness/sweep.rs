//! Convergence sweep: empirical min gradient ℓ1 norms against the
//! theoretical rate bounds over a geometric grid of step budgets.
//!
//! Two modes, selected by `sweep_algo`:
//!
//! * `signgd` — deterministic sign descent with `η = √(2Δ₀/(TH))`,
//!   `H = Σ_i H_i`, checked against `min_{1≤t≤T} ‖∇L(x_t)‖₁ ≤ √(2HΔ₀/T)`.
//! * `rmsprop` — `β₁ = 0`, `1−β₂ = ln T / T`, `η = √(Δ₀/(T·ΣH_i))` on a
//!   noisy quadratic, checked against the blockwise rate bound over the
//!   second half of the trajectory.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use super::config::{ExperimentConfig, ExperimentKind, SweepAlgo};
use super::results::{CellError, ResultRow};
use super::stats::fit_slope;
use crate::error::Result;
use crate::losses::{noisy_oracle, quadratic_oracle, LossOracle, NoiseSpec, QuadraticSpec};
use crate::optim::{phi_norm, run, Algo, Partition};
use crate::probes::{bound_report, BoundInputs};
use crate::rng::RngStream;

const STREAM_PROBLEM: u64 = 1;
const STREAM_X0: u64 = 3;
const STREAM_RUN_BASE: u64 = 20_000;

/// One (T, seed) measurement.
#[derive(Debug, Clone, Serialize)]
pub struct SweepPoint {
    pub t: usize,
    pub seed: u64,
    pub algo: String,
    pub eta: f64,
    pub beta2: f64,
    pub delta0: f64,
    pub h_sum: f64,
    pub min_grad_l1_all: f64,
    pub min_grad_l1_second_half: f64,
    /// `√(2HΔ₀/T)`.
    pub signgd_optimized_bound: f64,
    /// Blockwise rate bound at these inputs.
    pub rate_bound: f64,
}

#[derive(Debug)]
pub struct SweepResult {
    pub rows: Vec<ResultRow>,
    pub points: Vec<SweepPoint>,
    /// Log-log slope of the per-T mean of the primary min-gradient metric.
    pub slope: f64,
    pub errors: Vec<CellError>,
    pub meta: serde_json::Value,
}

impl SweepResult {
    /// Mean over seeds of the empirical metric and of the bound, per T.
    /// The metric is `min` over all steps for sign descent and over the
    /// second half for RMSProp, matching the two statements.
    pub fn mean_by_t(&self) -> Vec<(usize, f64, f64)> {
        let mut ts: Vec<usize> = self.points.iter().map(|p| p.t).collect();
        ts.sort_unstable();
        ts.dedup();
        ts.into_iter()
            .map(|t| {
                let picked: Vec<&SweepPoint> =
                    self.points.iter().filter(|p| p.t == t).collect();
                let n = picked.len() as f64;
                let emp = picked.iter().map(|p| primary_metric(p)).sum::<f64>() / n;
                let bound = picked.iter().map(|p| primary_bound(p)).sum::<f64>() / n;
                (t, emp, bound)
            })
            .collect()
    }

    /// Count of (T, seed) points whose empirical metric exceeds its bound.
    pub fn violations(&self) -> usize {
        self.points
            .iter()
            .filter(|p| primary_metric(p) > primary_bound(p))
            .count()
    }
}

fn primary_metric(p: &SweepPoint) -> f64 {
    if p.algo == "signgd" {
        p.min_grad_l1_all
    } else {
        p.min_grad_l1_second_half
    }
}

fn primary_bound(p: &SweepPoint) -> f64 {
    if p.algo == "signgd" {
        p.signgd_optimized_bound
    } else {
        p.rate_bound
    }
}

pub fn run_convergence_sweep(config: &ExperimentConfig) -> Result<SweepResult> {
    config.validate(ExperimentKind::ConvergenceSweep)?;

    struct Task {
        seed: u64,
        t: usize,
        idx: usize,
    }
    let mut tasks = Vec::new();
    for &seed in &config.seeds {
        for &t in &config.t_grid {
            tasks.push(Task {
                seed,
                t,
                idx: tasks.len(),
            });
        }
    }

    let outcomes: Vec<std::result::Result<(Vec<ResultRow>, SweepPoint), CellError>> = tasks
        .par_iter()
        .map(|task| {
            run_point(config, task.seed, task.t, task.idx).map_err(|e| CellError {
                cell: format!("sweep-s{}-T{}", task.seed, task.t),
                message: e.to_string(),
            })
        })
        .collect();

    let mut rows = Vec::new();
    let mut points = Vec::new();
    let mut errors = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok((mut r, p)) => {
                rows.append(&mut r);
                points.push(p);
            }
            Err(e) => errors.push(e),
        }
    }
    rows.sort_by(|a, b| (&a.run_id, a.step).cmp(&(&b.run_id, b.step)));
    points.sort_by(|a, b| (a.t, a.seed).cmp(&(b.t, b.seed)));

    // Slope of ln(mean metric) against ln T.
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let result_for_means = SweepResult {
        rows: Vec::new(),
        points: points.clone(),
        slope: 0.0,
        errors: Vec::new(),
        meta: json!({}),
    };
    for (t, emp, _) in result_for_means.mean_by_t() {
        if emp > 0.0 {
            xs.push((t as f64).ln());
            ys.push(emp.ln());
        }
    }
    let slope = if xs.len() >= 2 {
        fit_slope(&xs, &ys)
    } else {
        f64::NAN
    };

    let meta = json!({
        "experiment": "convergence_sweep",
        "version": env!("CARGO_PKG_VERSION"),
        "config": serde_json::to_value(config).unwrap(),
        "slope_loglog": slope,
        "violations": points.iter().filter(|p| primary_metric(p) > primary_bound(p)).count(),
        "errors": errors,
        "notes": [
            "delta0 is computed as L(x0) assuming a PSD quadratic with min L = 0.",
            "eta per T: signgd uses sqrt(2*delta0/(T*H)), rmsprop uses sqrt(delta0/(T*H)) with 1-beta2 = ln(T)/T.",
        ],
    });

    Ok(SweepResult {
        rows,
        points,
        slope,
        errors,
        meta,
    })
}

fn run_point(
    config: &ExperimentConfig,
    seed: u64,
    t: usize,
    idx: usize,
) -> Result<(Vec<ResultRow>, SweepPoint)> {
    let stream = RngStream::root(seed);
    let hessian = config.problem.build(stream.substream(STREAM_PROBLEM))?;
    let d = hessian.rows();
    let x0 = config.sample_x0(d, stream.substream(STREAM_X0));

    // Per-coordinate smoothness constants: absolute row sums of the Hessian.
    let h = hessian.abs_row_sums();
    let h_sum: f64 = h.iter().sum();
    let quadratic = Arc::new(quadratic_oracle(QuadraticSpec::new(hessian.clone())?));
    let delta0 = quadratic.value(&x0); // min L = 0 for a PSD quadratic
    let grad0 = quadratic.grad(&x0);
    let grad0_phi = phi_norm(&grad0, &Partition::adam(d));

    let tf = t as f64;
    let (algo_label, algo, eta, beta2, v0, oracle): (
        &str,
        Algo,
        f64,
        f64,
        f64,
        Arc<dyn LossOracle>,
    ) = match config.sweep_algo {
        SweepAlgo::Signgd => {
            let eta = (2.0 * delta0 / (tf * h_sum)).sqrt();
            (
                "signgd",
                Algo::signgd(d, eta),
                eta,
                0.0,
                0.0,
                quadratic.clone(),
            )
        }
        SweepAlgo::Rmsprop => {
            let one_minus_beta2 = tf.ln() / tf;
            let beta2 = 1.0 - one_minus_beta2;
            let eta = (delta0 / (tf * h_sum)).sqrt();
            let v0 = config.sweep_v0;
            let noisy = Arc::new(noisy_oracle(
                quadratic.clone(),
                NoiseSpec::uniform(d, config.noise_sigma)?,
            )?);
            (
                "rmsprop",
                Algo::rmsprop(d, beta2, 0.0, v0, eta),
                eta,
                beta2,
                v0,
                noisy,
            )
        }
    };

    let record = run(
        oracle.as_ref(),
        &algo,
        &x0,
        t,
        stream.substream(STREAM_RUN_BASE + idx as u64),
        0,
    )?;

    let report = bound_report(&BoundInputs {
        smoothness: h.clone(),
        sigma: vec![config.noise_sigma; d],
        block_sizes: vec![1; d],
        eta,
        beta2,
        steps: t,
        v0,
        epsilon: 0.0,
        delta0,
        grad0_phi,
    })?;

    let point = SweepPoint {
        t,
        seed,
        algo: algo_label.into(),
        eta,
        beta2,
        delta0,
        h_sum,
        min_grad_l1_all: record.min_grad_l1(),
        min_grad_l1_second_half: record.min_grad_l1_second_half(),
        signgd_optimized_bound: report.signgd_optimized_bound,
        rate_bound: report.rate_bound,
    };

    let run_id = format!("sweep-s{seed}-{algo_label}-T{t}");
    let rows = record
        .steps
        .iter()
        .map(|s| ResultRow {
            run_id: run_id.clone(),
            experiment: "convergence_sweep".into(),
            optimizer: algo_label.into(),
            phi: "adam".into(),
            beta1: 0.0,
            beta2,
            eps: 0.0,
            v0,
            lr: eta,
            rotation_kind: "identity".into(),
            rotation_t: Some(0.0),
            seed,
            step: s.step,
            loss: s.loss,
            grad_l1: s.grad_l1,
            grad_l2: s.grad_l2,
            grad_phi_dual: s.grad_phi_dual,
            v_min: s.v_min,
            v_max: s.v_max,
            is_final: s.step == t,
        })
        .collect();
    Ok((rows, point))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::ProblemSpec;

    fn sweep_config(algo: SweepAlgo, sigma: f64) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        cfg.problem = ProblemSpec::RandomPsd { dim: 8 };
        cfg.t_grid = vec![32, 128];
        cfg.seeds = vec![0, 1, 2];
        cfg.sweep_algo = algo;
        cfg.noise_sigma = sigma;
        cfg
    }

    #[test]
    fn signgd_sweep_respects_bound_on_every_point() {
        let cfg = sweep_config(SweepAlgo::Signgd, 0.0);
        let result = run_convergence_sweep(&cfg).unwrap();
        assert!(result.errors.is_empty());
        assert_eq!(result.points.len(), 6);
        assert_eq!(result.violations(), 0);
        for p in &result.points {
            assert!(p.min_grad_l1_all <= p.signgd_optimized_bound);
        }
    }

    #[test]
    fn rmsprop_zero_noise_matches_its_own_rerun_bitwise() {
        let cfg = sweep_config(SweepAlgo::Rmsprop, 0.0);
        let a = run_convergence_sweep(&cfg).unwrap();
        let b = run_convergence_sweep(&cfg).unwrap();
        for (ra, rb) in a.rows.iter().zip(&b.rows) {
            assert_eq!(ra.loss, rb.loss);
            assert_eq!(ra.grad_l1, rb.grad_l1);
        }
    }

    #[test]
    fn rmsprop_zero_sigma_trajectory_equals_deterministic_path() {
        // Wrapping with σ = 0 noise must not change the trajectory at all.
        let cfg = sweep_config(SweepAlgo::Rmsprop, 0.0);
        let result = run_convergence_sweep(&cfg).unwrap();
        let stream = RngStream::root(0);
        let hessian = cfg.problem.build(stream.substream(STREAM_PROBLEM)).unwrap();
        let d = hessian.rows();
        let x0 = cfg.sample_x0(d, stream.substream(STREAM_X0));
        let quadratic = quadratic_oracle(QuadraticSpec::new(hessian.clone()).unwrap());
        let delta0 = quadratic.value(&x0);
        let h_sum: f64 = hessian.abs_row_sums().iter().sum();
        let t = 32;
        let eta = (delta0 / (t as f64 * h_sum)).sqrt();
        let beta2 = 1.0 - (t as f64).ln() / t as f64;
        let algo = Algo::rmsprop(d, beta2, 0.0, cfg.sweep_v0, eta);
        let record = run(
            &quadratic,
            &algo,
            &x0,
            t,
            stream.substream(STREAM_RUN_BASE),
            0,
        )
        .unwrap();
        let rows: Vec<&ResultRow> = result
            .rows
            .iter()
            .filter(|r| r.seed == 0 && r.run_id.ends_with("T32"))
            .collect();
        assert_eq!(rows.len(), 32);
        for (row, step) in rows.iter().zip(&record.steps) {
            assert_eq!(row.loss, step.loss);
            assert_eq!(row.grad_l1, step.grad_l1);
        }
    }
}
