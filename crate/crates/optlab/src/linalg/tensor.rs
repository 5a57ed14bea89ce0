//! Mode-wise rotation of a vector reshaped as a 3-D tensor.

use super::DenseMatrix;
use crate::error::{Error, Result};

const ORTHO_TOL: f64 = 1e-10;

/// Interprets `x` as an `s1×s2×s3` tensor in row-major order, applies the
/// mode-k product with `Qk` on each of the three modes, and flattens back.
///
/// The combined map is the Kronecker-structured orthogonal matrix acting on
/// `R^d`, `d = s1·s2·s3`; it never needs to be materialized.
pub fn mode_reshape_rotate(
    x: &[f64],
    shape: (usize, usize, usize),
    q1: &DenseMatrix,
    q2: &DenseMatrix,
    q3: &DenseMatrix,
) -> Result<Vec<f64>> {
    let (s1, s2, s3) = shape;
    if s1 * s2 * s3 != x.len() {
        return Err(Error::dim(format!(
            "shape {s1}x{s2}x{s3} does not match vector length {}",
            x.len()
        )));
    }
    for (q, s, mode) in [(q1, s1, 1), (q2, s2, 2), (q3, s3, 3)] {
        if q.rows() != s || q.cols() != s {
            return Err(Error::dim(format!(
                "mode-{mode} factor must be {s}x{s}, got {}x{}",
                q.rows(),
                q.cols()
            )));
        }
        let err = q.orthogonality_error();
        if err > ORTHO_TOL {
            return Err(Error::invalid(format!(
                "mode-{mode} factor is not orthogonal (‖QᵀQ−I‖_F = {err:.3e})"
            )));
        }
    }

    // Mode 1: view as s1×(s2·s3), multiply by Q1 on the left.
    let as_mat = DenseMatrix::from_vec(s1, s2 * s3, x.to_vec())?;
    let y = q1.matmul(&as_mat);

    // Mode 2: each of the s1 slabs is s2×s3, multiplied by Q2 on the left.
    let mut z = vec![0.0; x.len()];
    for i in 0..s1 {
        let slab = DenseMatrix::from_vec(s2, s3, y.data()[i * s2 * s3..(i + 1) * s2 * s3].to_vec())?;
        let rotated = q2.matmul(&slab);
        z[i * s2 * s3..(i + 1) * s2 * s3].copy_from_slice(rotated.data());
    }

    // Mode 3: view as (s1·s2)×s3, multiply by Q3ᵀ on the right.
    let as_mat = DenseMatrix::from_vec(s1 * s2, s3, z)?;
    let out = as_mat.matmul(&q3.transpose());
    Ok(out.data().to_vec())
}
