//! Blockwise smoothness constants of a quadratic and the quadratic-form
//! comparison they certify.

use crate::error::{Error, Result};
use crate::linalg::{norm_l2, DenseMatrix};
use crate::optim::Partition;

/// Per-block smoothness constants of the quadratic with Hessian `A`.
///
/// * Singleton blocks: the exact coordinate-wise constants
///   `H_i = Σ_j |A_ij|` (absolute row sums).
/// * One block: exactly `d·‖A‖₂`.
/// * General partitions: the upper bound
///   `H_b = √d_b · Σ_{b'} √d_{b'} · ‖A_{(b),(b')}‖₂`, which reduces to the
///   two exact cases above.
pub fn blockwise_smoothness(a: &DenseMatrix, partition: &Partition) -> Result<Vec<f64>> {
    if !a.is_square() || a.rows() != partition.dim() {
        return Err(Error::dim(format!(
            "matrix is {}x{}, partition covers {} coordinates",
            a.rows(),
            a.cols(),
            partition.dim()
        )));
    }
    if a.symmetry_error() > 1e-12 {
        return Err(Error::invalid("blockwise_smoothness expects a symmetric matrix"));
    }

    if partition.block_sizes().iter().all(|&s| s == 1) {
        return Ok(a.abs_row_sums());
    }

    let nb = partition.num_blocks();
    let mut indices: Vec<Vec<usize>> = vec![Vec::new(); nb];
    for (i, &b) in partition.block_of().iter().enumerate() {
        indices[b].push(i);
    }

    let mut h = Vec::with_capacity(nb);
    for b in 0..nb {
        let db = indices[b].len() as f64;
        let mut sum = 0.0;
        for bp in 0..nb {
            let dbp = indices[bp].len() as f64;
            let sub = submatrix(a, &indices[b], &indices[bp]);
            sum += dbp.sqrt() * operator_norm2(&sub);
        }
        h.push(db.sqrt() * sum);
    }
    Ok(h)
}

fn submatrix(a: &DenseMatrix, rows: &[usize], cols: &[usize]) -> DenseMatrix {
    DenseMatrix::from_fn(rows.len(), cols.len(), |i, j| a.get(rows[i], cols[j]))
}

/// Largest singular value of a dense rectangular matrix by power iteration
/// on `BᵀB`, run from two deterministic starts.
fn operator_norm2(b: &DenseMatrix) -> f64 {
    let n = b.cols();
    let scale = b.max_abs();
    if scale == 0.0 {
        return 0.0;
    }
    let mut best = 0.0_f64;
    for start in 0..2 {
        let mut v: Vec<f64> = (0..n)
            .map(|j| {
                if start == 0 {
                    1.0
                } else {
                    ((j * 2654435761 + 12345) % 1000) as f64 / 500.0 - 1.0
                }
            })
            .collect();
        let norm = norm_l2(&v);
        if norm == 0.0 {
            continue;
        }
        for vi in v.iter_mut() {
            *vi /= norm;
        }
        let mut sigma_sq = 0.0_f64;
        for _ in 0..500 {
            let bv = b.matvec(&v);
            let w = b.matvec_transpose(&bv);
            let new_sigma_sq = crate::linalg::dot(&w, &v);
            let wn = norm_l2(&w);
            if wn == 0.0 {
                break;
            }
            v = w.iter().map(|x| x / wn).collect();
            if (new_sigma_sq - sigma_sq).abs() <= 1e-14 * new_sigma_sq.abs().max(1e-300) {
                sigma_sq = new_sigma_sq;
                break;
            }
            sigma_sq = new_sigma_sq;
        }
        best = best.max(sigma_sq.max(0.0).sqrt());
    }
    best
}

/// Evaluation of the quadratic-form comparison
/// `ΔᵀAΔ ≤ Σ_b (H_b/d_b)·‖Δ_(b)‖₂²`.
#[derive(Debug, Clone, Copy)]
pub struct QuadraticFormCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Checks the comparison for one displacement `delta`, given constants `h`
/// from [`blockwise_smoothness`] (any valid upper bounds work).
pub fn quadratic_form_check(
    a: &DenseMatrix,
    partition: &Partition,
    h: &[f64],
    delta: &[f64],
) -> Result<QuadraticFormCheck> {
    if delta.len() != partition.dim() || h.len() != partition.num_blocks() {
        return Err(Error::dim("quadratic_form_check dimension mismatch".to_string()));
    }
    if a.rows() != delta.len() {
        return Err(Error::dim("matrix does not match delta".to_string()));
    }
    let lhs = crate::linalg::dot(delta, &a.matvec(delta));
    let mut block_sumsq = vec![0.0; partition.num_blocks()];
    for (di, &b) in delta.iter().zip(partition.block_of()) {
        block_sumsq[b] += di * di;
    }
    let rhs: f64 = block_sumsq
        .iter()
        .enumerate()
        .map(|(b, s)| h[b] / partition.block_sizes()[b] as f64 * s)
        .sum();
    Ok(QuadraticFormCheck {
        lhs,
        rhs,
        holds: lhs <= rhs + 1e-9 * (1.0 + rhs.abs()),
    })
}
