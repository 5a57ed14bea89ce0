//! The invariance suite: which optimizers commute with which
//! reparameterizations.
//!
//! Expected to pass: SGD and AdaSGD under arbitrary rotations, Adam and
//! SignGD under coordinate permutations — each both deterministically and
//! with coupled noise. Expected to fail: Adam and SignGD under rotations,
//! witnessed by the 2-D problem `L = 2x₁² + x₂²` rotated by the Hadamard
//! matrix, which must deviate beyond 1e-2.

use std::sync::Arc;

use rayon::prelude::*;
use serde_json::json;

use super::config::{ExperimentConfig, ExperimentKind};
use super::results::InvarianceRow;
use crate::error::Result;
use crate::linalg::{random_orthogonal, sample_skew, DenseMatrix};
use crate::losses::{noisy_oracle, quadratic_oracle, LossOracle, NoiseSpec, QuadraticSpec};
use crate::optim::{Algo, OptimizerConfig, Partition, ScheduleSpec};
use crate::rng::RngStream;
use crate::rotation::{invariance_check, RotationSpec};

const ROTATION_TOL: f64 = 1e-7;
const PERMUTATION_TOL: f64 = 1e-9;
const COUNTEREXAMPLE_THRESHOLD: f64 = 1e-2;

#[derive(Debug)]
pub struct InvarianceSuiteResult {
    pub rows: Vec<InvarianceRow>,
    pub meta: serde_json::Value,
}

impl InvarianceSuiteResult {
    pub fn all_required_pass(&self) -> bool {
        self.rows.iter().filter(|r| r.required).all(|r| r.passed)
    }

    pub fn max_deviation(&self, optimizer: &str, transform: &str) -> f64 {
        self.rows
            .iter()
            .filter(|r| r.optimizer == optimizer && r.transform == transform)
            .map(|r| r.deviation)
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, PartialEq)]
enum CheckAlgo {
    Sgd,
    Adasgd,
    Adam,
    Signgd,
}

impl CheckAlgo {
    fn label(self) -> &'static str {
        match self {
            CheckAlgo::Sgd => "sgd",
            CheckAlgo::Adasgd => "adasgd",
            CheckAlgo::Adam => "adam",
            CheckAlgo::Signgd => "signgd",
        }
    }

    fn build(self, d: usize, eta: f64) -> Algo {
        match self {
            CheckAlgo::Sgd => Algo::Sgd {
                momentum: 0.9,
                schedule: ScheduleSpec::constant(eta),
            },
            CheckAlgo::Adasgd => Algo::BlockwiseAdam {
                partition: Partition::adasgd(d),
                config: OptimizerConfig {
                    beta1: 0.9,
                    beta2: 0.99,
                    epsilon: 0.0,
                    v0: 0.0,
                    schedule: ScheduleSpec::constant(eta),
                },
            },
            CheckAlgo::Adam => Algo::adam(d, 0.9, 0.99, 0.0, 0.0, eta),
            CheckAlgo::Signgd => Algo::signgd(d, eta),
        }
    }
}

struct CheckTask {
    algo: CheckAlgo,
    transform: &'static str, // rotation | permutation | counterexample
    noisy: bool,
    expect_invariant: bool,
    required: bool,
    threshold: f64,
    check_index: u64,
}

pub fn run_invariance_suite(config: &ExperimentConfig) -> Result<InvarianceSuiteResult> {
    config.validate(ExperimentKind::InvarianceSuite)?;
    let seed = config.seeds[0];
    let n = config.invariance_checks;

    let mut tasks = Vec::new();
    for algo in [CheckAlgo::Sgd, CheckAlgo::Adasgd] {
        for noisy in [false, true] {
            for i in 0..n {
                tasks.push(CheckTask {
                    algo,
                    transform: "rotation",
                    noisy,
                    expect_invariant: true,
                    required: true,
                    threshold: ROTATION_TOL,
                    check_index: i as u64,
                });
            }
        }
    }
    for algo in [CheckAlgo::Adam, CheckAlgo::Signgd] {
        for noisy in [false, true] {
            for i in 0..n {
                tasks.push(CheckTask {
                    algo,
                    transform: "permutation",
                    noisy,
                    expect_invariant: true,
                    required: true,
                    threshold: PERMUTATION_TOL,
                    check_index: i as u64,
                });
            }
        }
        // Witness rows: random rotations are expected to break these
        // optimizers, but only the constructed counterexample is required to.
        for i in 0..n.min(5) {
            tasks.push(CheckTask {
                algo,
                transform: "rotation",
                noisy: false,
                expect_invariant: false,
                required: false,
                threshold: COUNTEREXAMPLE_THRESHOLD,
                check_index: i as u64,
            });
        }
        tasks.push(CheckTask {
            algo,
            transform: "counterexample",
            noisy: false,
            expect_invariant: false,
            required: true,
            threshold: COUNTEREXAMPLE_THRESHOLD,
            check_index: 0,
        });
    }

    let rows: Vec<InvarianceRow> = tasks
        .par_iter()
        .enumerate()
        .map(|(task_idx, task)| run_check(config, seed, task_idx as u64, task))
        .collect::<Result<Vec<_>>>()?;

    let required_failures: Vec<&InvarianceRow> =
        rows.iter().filter(|r| r.required && !r.passed).collect();
    let meta = json!({
        "experiment": "invariance_suite",
        "version": env!("CARGO_PKG_VERSION"),
        "config": serde_json::to_value(config).unwrap(),
        "checks": rows.len(),
        "required_failures": required_failures.len(),
        "tolerances": {
            "rotation": ROTATION_TOL,
            "permutation": PERMUTATION_TOL,
            "counterexample_threshold": COUNTEREXAMPLE_THRESHOLD,
        },
    });
    Ok(InvarianceSuiteResult { rows, meta })
}

fn run_check(
    config: &ExperimentConfig,
    seed: u64,
    task_idx: u64,
    task: &CheckTask,
) -> Result<InvarianceRow> {
    let stream = RngStream::root(seed).substream(7_000 + task_idx);

    let (oracle, rot, x0, d, eta): (Arc<dyn LossOracle>, RotationSpec, Vec<f64>, usize, f64) =
        if task.transform == "counterexample" {
            // L = 2x₁² + x₂² (Hessian diag(4,2)), Hadamard rotation.
            let a = DenseMatrix::diagonal(&[4.0, 2.0]);
            let oracle: Arc<dyn LossOracle> =
                Arc::new(quadratic_oracle(QuadraticSpec::new(a)?));
            let c = std::f64::consts::FRAC_1_SQRT_2;
            let r = DenseMatrix::from_vec(2, 2, vec![c, c, c, -c])?;
            (oracle, RotationSpec::explicit(r)?, vec![1.0, 1.0], 2, 0.1)
        } else {
            use rand::Rng;
            let mut rng = stream.substream(0).rng();
            let d = rng.gen_range(2..=config.invariance_dim_max);
            let problem = super::config::ProblemSpec::RandomPsd { dim: d };
            let hessian = problem.build(stream.substream(1))?;
            let base: Arc<dyn LossOracle> =
                Arc::new(quadratic_oracle(QuadraticSpec::new(hessian)?));
            let oracle: Arc<dyn LossOracle> = if task.noisy {
                Arc::new(noisy_oracle(base, NoiseSpec::uniform(d, 0.1)?)?)
            } else {
                base
            };
            let rot = match task.transform {
                "permutation" => {
                    use rand::seq::SliceRandom;
                    let mut perm: Vec<usize> = (0..d).collect();
                    perm.shuffle(&mut stream.substream(2).rng());
                    RotationSpec::permutation(perm)?
                }
                _ => {
                    if task.check_index % 2 == 0 {
                        RotationSpec::explicit(random_orthogonal(d, stream.substream(2)))?
                    } else {
                        RotationSpec::skew_exp(&sample_skew(d, stream.substream(2)), 0.7)?
                    }
                }
            };
            let x0 = config.sample_x0(d, stream.substream(3));
            (oracle, rot, x0, d, 0.05)
        };

    let algo = task.algo.build(d, eta);
    let report = invariance_check(&algo, oracle, &rot, &x0, config.steps, stream.substream(4))?;
    let passed = if task.expect_invariant {
        report.max_deviation <= task.threshold
    } else {
        report.max_deviation > task.threshold
    };
    Ok(InvarianceRow {
        run_id: format!(
            "invariance-s{seed}-{}-{}-{}-{}",
            task.algo.label(),
            task.transform,
            if task.noisy { "coupled" } else { "deterministic" },
            task.check_index
        ),
        experiment: "invariance_suite".into(),
        optimizer: task.algo.label().into(),
        transform: task.transform.into(),
        noise: if task.noisy { "coupled" } else { "deterministic" }.into(),
        dim: d,
        steps: config.steps,
        seed,
        deviation: report.max_deviation,
        threshold: task.threshold,
        expect_invariant: task.expect_invariant,
        required: task.required,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suite_passes_all_required_checks() {
        let mut cfg = ExperimentConfig::default();
        cfg.invariance_checks = 3;
        cfg.invariance_dim_max = 12;
        cfg.steps = 40;
        let result = run_invariance_suite(&cfg).unwrap();
        for row in result.rows.iter().filter(|r| r.required) {
            assert!(
                row.passed,
                "{} × {} ({}) deviated {} against threshold {}",
                row.optimizer, row.transform, row.noise, row.deviation, row.threshold
            );
        }
        assert!(result.all_required_pass());
        // counterexample rows exist for both adam and signgd
        let witnesses: Vec<&InvarianceRow> = result
            .rows
            .iter()
            .filter(|r| r.transform == "counterexample")
            .collect();
        assert_eq!(witnesses.len(), 2);
        for w in witnesses {
            assert!(w.deviation > 1e-2);
        }
    }
}
