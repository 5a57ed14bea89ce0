//! Orthogonal reparameterizations and the empirical invariance checker.
//!
//! A transformation here is always an orthogonal map `T`; running an
//! algorithm on the pulled-back loss `L ∘ T` from `T⁻¹x₀` and comparing the
//! trajectory against `T⁻¹` of the original one measures whether the
//! algorithm commutes with the reparameterization.

use std::sync::Arc;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::linalg::{
    expm_skew, mode_reshape_rotate, norm_linf, random_orthogonal, DenseMatrix,
};
use crate::losses::{rotated_oracle, LossOracle};
use crate::optim::{run, Algo};
use crate::rng::RngStream;

/// One permute-reshape-rotate layer: permute coordinates, view the vector as
/// an `s1×s2×s3` tensor, rotate each mode by a fixed orthogonal factor.
#[derive(Debug, Clone)]
pub struct RandPermLayer {
    pub perm: Vec<usize>,
    pub shape: (usize, usize, usize),
    pub q1: DenseMatrix,
    pub q2: DenseMatrix,
    pub q3: DenseMatrix,
}

/// An orthogonal map on `R^d`.
#[derive(Debug, Clone)]
pub enum RotationSpec {
    Identity { dim: usize },
    Explicit { matrix: DenseMatrix },
    Permutation { perm: Vec<usize> },
    SkewExp { matrix: DenseMatrix, t: f64 },
    RandPerm { layers: Vec<RandPermLayer> },
    Composed { parts: Vec<RotationSpec> },
}

impl RotationSpec {
    pub fn identity(dim: usize) -> Self {
        RotationSpec::Identity { dim }
    }

    /// Wraps an explicit orthogonal matrix, validated to 1e-10.
    pub fn explicit(matrix: DenseMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::invalid("rotation matrix must be square"));
        }
        let err = matrix.orthogonality_error();
        if err > 1e-10 {
            return Err(Error::invalid(format!(
                "matrix is not orthogonal (‖QᵀQ−I‖_F = {err:.3e})"
            )));
        }
        Ok(RotationSpec::Explicit { matrix })
    }

    /// Coordinate permutation `y_i = x_{π(i)}`; `perm` must be a bijection.
    pub fn permutation(perm: Vec<usize>) -> Result<Self> {
        let d = perm.len();
        let mut seen = vec![false; d];
        for &p in &perm {
            if p >= d || seen[p] {
                return Err(Error::invalid("permutation array must be a bijection"));
            }
            seen[p] = true;
        }
        Ok(RotationSpec::Permutation { perm })
    }

    /// The member `exp(t·A)` of the continuous rotation family generated by
    /// a skew-symmetric `A`. The matrix is materialized once.
    pub fn skew_exp(a: &DenseMatrix, t: f64) -> Result<Self> {
        let matrix = expm_skew(a, t)?;
        Ok(RotationSpec::SkewExp { matrix, t })
    }

    pub fn composed(parts: Vec<RotationSpec>) -> Result<Self> {
        let mut dims = parts.iter().map(|p| p.dim());
        let first = dims
            .next()
            .ok_or_else(|| Error::invalid("composed rotation needs at least one part"))?;
        if dims.any(|d| d != first) {
            return Err(Error::dim("composed rotations must share one dimension"));
        }
        Ok(RotationSpec::Composed { parts })
    }

    pub fn dim(&self) -> usize {
        match self {
            RotationSpec::Identity { dim } => *dim,
            RotationSpec::Explicit { matrix } | RotationSpec::SkewExp { matrix, .. } => {
                matrix.rows()
            }
            RotationSpec::Permutation { perm } => perm.len(),
            RotationSpec::RandPerm { layers } => layers[0].perm.len(),
            RotationSpec::Composed { parts } => parts[0].dim(),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            RotationSpec::Identity { .. } => "identity",
            RotationSpec::Explicit { .. } => "explicit",
            RotationSpec::Permutation { .. } => "permutation",
            RotationSpec::SkewExp { .. } => "skew_exp",
            RotationSpec::RandPerm { .. } => "randperm",
            RotationSpec::Composed { .. } => "composed",
        }
    }

    /// Computes `T·x`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        Ok(match self {
            RotationSpec::Identity { .. } => x.to_vec(),
            RotationSpec::Explicit { matrix } | RotationSpec::SkewExp { matrix, .. } => {
                matrix.matvec(x)
            }
            RotationSpec::Permutation { perm } => perm.iter().map(|&p| x[p]).collect(),
            RotationSpec::RandPerm { layers } => {
                let mut y = x.to_vec();
                for layer in layers {
                    let permuted: Vec<f64> = layer.perm.iter().map(|&p| y[p]).collect();
                    y = mode_reshape_rotate(
                        &permuted,
                        layer.shape,
                        &layer.q1,
                        &layer.q2,
                        &layer.q3,
                    )?;
                }
                y
            }
            // parts = [R1, R2] acts as R1∘R2: apply the tail first.
            RotationSpec::Composed { parts } => {
                let mut y = x.to_vec();
                for part in parts.iter().rev() {
                    y = part.apply(&y)?;
                }
                y
            }
        })
    }

    /// Computes `Tᵀ·x`, the inverse by orthogonality.
    pub fn apply_inverse(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        Ok(match self {
            RotationSpec::Identity { .. } => x.to_vec(),
            RotationSpec::Explicit { matrix } | RotationSpec::SkewExp { matrix, .. } => {
                matrix.matvec_transpose(x)
            }
            RotationSpec::Permutation { perm } => {
                let mut y = vec![0.0; x.len()];
                for (i, &p) in perm.iter().enumerate() {
                    y[p] = x[i];
                }
                y
            }
            RotationSpec::RandPerm { layers } => {
                let mut y = x.to_vec();
                for layer in layers.iter().rev() {
                    let unrotated = mode_reshape_rotate(
                        &y,
                        layer.shape,
                        &layer.q1.transpose(),
                        &layer.q2.transpose(),
                        &layer.q3.transpose(),
                    )?;
                    let mut unpermuted = vec![0.0; y.len()];
                    for (i, &p) in layer.perm.iter().enumerate() {
                        unpermuted[p] = unrotated[i];
                    }
                    y = unpermuted;
                }
                y
            }
            RotationSpec::Composed { parts } => {
                let mut y = x.to_vec();
                for part in parts.iter() {
                    y = part.apply_inverse(&y)?;
                }
                y
            }
        })
    }

    /// Materializes the map as a dense matrix, column by column.
    pub fn to_matrix(&self) -> Result<DenseMatrix> {
        let d = self.dim();
        let mut m = DenseMatrix::zeros(d, d);
        let mut e = vec![0.0; d];
        for j in 0..d {
            e[j] = 1.0;
            let col = self.apply(&e)?;
            for i in 0..d {
                m.set(i, j, col[i]);
            }
            e[j] = 0.0;
        }
        Ok(m)
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::dim(format!(
                "rotation acts on R^{}, got vector of length {}",
                self.dim(),
                x.len()
            )));
        }
        Ok(())
    }
}

/// Builds `RandPerm^k`: `k` layers, each with a fresh random permutation,
/// sharing the three orthogonal mode factors sampled once by QR of Gaussian
/// matrices.
pub fn randperm_compose(
    k: usize,
    d: usize,
    shape: (usize, usize, usize),
    stream: RngStream,
) -> Result<RotationSpec> {
    let (s1, s2, s3) = shape;
    if k == 0 {
        return Err(Error::invalid("randperm_compose: k must be positive"));
    }
    if s1 * s2 * s3 != d {
        return Err(Error::invalid(format!(
            "shape {s1}x{s2}x{s3} does not factor dimension {d}"
        )));
    }
    let q1 = random_orthogonal(s1, stream.substream(1));
    let q2 = random_orthogonal(s2, stream.substream(2));
    let q3 = random_orthogonal(s3, stream.substream(3));
    let mut layers = Vec::with_capacity(k);
    for layer_idx in 0..k {
        let mut perm: Vec<usize> = (0..d).collect();
        let mut rng = stream.substream(100 + layer_idx as u64).rng();
        perm.shuffle(&mut rng);
        layers.push(RandPermLayer {
            perm,
            shape,
            q1: q1.clone(),
            q2: q2.clone(),
            q3: q3.clone(),
        });
    }
    Ok(RotationSpec::RandPerm { layers })
}

/// Result of one invariance comparison.
#[derive(Debug, Clone)]
pub struct InvarianceReport {
    /// `max_t ‖x̃_t − T⁻¹x_t‖_∞ / (1 + ‖x_t‖_∞)`.
    pub max_deviation: f64,
    /// Deviation at every step `t = 0..=T`.
    pub per_step: Vec<f64>,
}

/// Runs `algo` on `(x0, L)` and on `(T⁻¹x0, L∘T)` with the same stream, and
/// reports how far the second trajectory drifts from `T⁻¹` of the first.
///
/// Stochastic oracles see the same noise realization in both runs because
/// the rotated oracle composes around a shared generator.
pub fn invariance_check(
    algo: &Algo,
    oracle: Arc<dyn LossOracle>,
    rot: &RotationSpec,
    x0: &[f64],
    steps: usize,
    stream: RngStream,
) -> Result<InvarianceReport> {
    if rot.dim() != oracle.dim() {
        return Err(Error::dim(
            "rotation and oracle dimensions must match".to_string(),
        ));
    }
    let base = run(oracle.as_ref(), algo, x0, steps, stream, 1)?;
    let x0_tilde = rot.apply_inverse(x0)?;
    let rotated = rotated_oracle(oracle, rot.clone())?;
    let tilde = run(&rotated, algo, &x0_tilde, steps, stream, 1)?;

    let mut per_step = Vec::with_capacity(steps + 1);
    let mut max_deviation = 0.0_f64;
    for ((_, x_t), (_, x_tilde_t)) in base.checkpoints.iter().zip(&tilde.checkpoints) {
        let pulled = rot.apply_inverse(x_t)?;
        let diff: Vec<f64> = pulled
            .iter()
            .zip(x_tilde_t)
            .map(|(a, b)| b - a)
            .collect();
        let dev = norm_linf(&diff) / (1.0 + norm_linf(x_t));
        per_step.push(dev);
        max_deviation = max_deviation.max(dev);
    }
    Ok(InvarianceReport {
        max_deviation,
        per_step,
    })
}
