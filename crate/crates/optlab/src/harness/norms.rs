//! Norm measurement: every geometry quantity the bounds consume, for the
//! configured problem under each configured rotation.

use serde_json::json;

use super::config::{ExperimentConfig, ExperimentKind};
use super::results::NormRow;
use crate::error::Result;
use crate::linalg::DenseMatrix;
use crate::optim::Partition;
use crate::probes::{blockwise_smoothness, concentration_bound, estimate_norm11, spectral_norm};
use crate::rng::RngStream;
use crate::rotation::RotationSpec;

const STREAM_PROBLEM: u64 = 1;
const STREAM_SKEW: u64 = 2;

#[derive(Debug)]
pub struct NormsResult {
    pub rows: Vec<NormRow>,
    pub meta: serde_json::Value,
}

impl NormsResult {
    pub fn value(&self, metric: &str, rotation_t: Option<f64>) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.metric == metric && r.rotation_t == rotation_t)
            .map(|r| r.value)
    }
}

pub fn estimate_norms_cmd(config: &ExperimentConfig) -> Result<NormsResult> {
    config.validate(ExperimentKind::NormEstimate)?;
    let seed = config.seeds[0];
    let stream = RngStream::root(seed);
    let base = config.problem.build(stream.substream(STREAM_PROBLEM))?;
    let d = base.rows();
    let needs_skew = config
        .rotations
        .iter()
        .any(|r| matches!(r.kind, super::config::RotationKind::SkewExp));
    let skew = if needs_skew {
        super::table1::normalized_skew(d, stream.substream(STREAM_SKEW))?
    } else {
        DenseMatrix::zeros(d, d)
    };

    let mut rows = Vec::new();
    for (ri, desc) in config.rotations.iter().enumerate() {
        let spec = desc.realize(d, &skew, stream.substream(1_000 + ri as u64))?;
        let rotated = rotate(&base, &spec)?;
        let kind = desc.kind_name().to_string();
        let t = desc.t_value();
        let mut push = |metric: &str, value: f64| {
            rows.push(NormRow {
                metric: metric.into(),
                rotation_kind: kind.clone(),
                rotation_t: t,
                value,
            });
        };

        let exact = rotated.sum_abs();
        push("norm11_exact", exact);
        let est = estimate_norm11(
            |v| rotated.matvec(v),
            d,
            config.n_probes,
            stream.substream(2_000 + ri as u64),
        )?;
        push("norm11_estimate", est.value);
        push("norm11_estimate_over_d", est.value / d as f64);
        let spec_norm = spectral_norm(
            |v| rotated.matvec(v),
            d,
            60,
            1e-8,
            stream.substream(3_000 + ri as u64),
        )?;
        push("spectral_norm", spec_norm.value);

        let h_adam = blockwise_smoothness(&rotated, &Partition::adam(d))?;
        push("h_adam_sum", h_adam.iter().sum());
        if d <= 32 {
            for (i, hi) in h_adam.iter().enumerate() {
                push(&format!("h_adam[{i}]"), *hi);
            }
        }
        let h_adasgd = blockwise_smoothness(&rotated, &Partition::adasgd(d))?;
        push("h_adasgd", h_adasgd[0]);
        if let Some(blocks) = &config.custom_blocks {
            let partition = Partition::blocks(blocks)?;
            if partition.dim() == d {
                let h = blockwise_smoothness(&rotated, &partition)?;
                push("h_custom_sum", h.iter().sum());
                for (b, hb) in h.iter().enumerate() {
                    push(&format!("h_custom[{b}]"), *hb);
                }
            }
        }
        push(
            "concentration_bound",
            concentration_bound(config.n_probes, d, config.concentration_eps)?,
        );
    }

    let meta = json!({
        "experiment": "norm_estimate",
        "version": env!("CARGO_PKG_VERSION"),
        "config": serde_json::to_value(config).unwrap(),
        "dim": d,
        "n_probes": config.n_probes,
        "concentration_eps": config.concentration_eps,
    });
    Ok(NormsResult { rows, meta })
}

fn rotate(base: &DenseMatrix, rot: &RotationSpec) -> Result<DenseMatrix> {
    match rot {
        RotationSpec::Identity { .. } => Ok(base.clone()),
        RotationSpec::Explicit { matrix } | RotationSpec::SkewExp { matrix, .. } => {
            let sr = base.matmul(matrix);
            Ok(matrix.transpose().matmul(&sr).symmetrized())
        }
        other => {
            let m = other.to_matrix()?;
            let sr = base.matmul(&m);
            Ok(m.transpose().matmul(&sr).symmetrized())
        }
    }
}
