//! Householder QR and Haar-distributed orthogonal matrices.

use rand::Rng;

use super::sample::gaussian_matrix_with;
use super::DenseMatrix;
use crate::rng::RngStream;

/// QR factorization of a square matrix by Householder reflections.
///
/// Returns `(Q, R)` with `Q` orthogonal and `R` upper triangular such that
/// `A = Q·R`.
pub fn householder_qr(a: &DenseMatrix) -> (DenseMatrix, DenseMatrix) {
    assert!(a.is_square(), "householder_qr expects a square matrix");
    let n = a.rows();
    let mut r = a.clone();
    let mut q = DenseMatrix::identity(n);

    for k in 0..n {
        // Householder vector for column k, rows k..n.
        let mut v = vec![0.0; n - k];
        for i in k..n {
            v[i - k] = r.get(i, k);
        }
        let alpha = -v[0].signum() * v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if alpha == 0.0 {
            continue;
        }
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }

        // R ← (I − 2vvᵀ/‖v‖²) R on rows k..n.
        for j in k..n {
            let mut s = 0.0;
            for i in k..n {
                s += v[i - k] * r.get(i, j);
            }
            let f = 2.0 * s / vnorm2;
            for i in k..n {
                let val = r.get(i, j) - f * v[i - k];
                r.set(i, j, val);
            }
        }
        // Q ← Q (I − 2vvᵀ/‖v‖²) on columns k..n.
        for i in 0..n {
            let mut s = 0.0;
            for j in k..n {
                s += q.get(i, j) * v[j - k];
            }
            let f = 2.0 * s / vnorm2;
            for j in k..n {
                let val = q.get(i, j) - f * v[j - k];
                q.set(i, j, val);
            }
        }
    }
    // Zero the strictly-lower part of R (left as rounding noise above).
    for i in 1..n {
        for j in 0..i {
            r.set(i, j, 0.0);
        }
    }
    (q, r)
}

/// Samples an orthogonal matrix from the Haar measure on `O(d)`:
/// QR of a standard Gaussian matrix with the sign of `diag(R)` folded into
/// the columns of `Q`.
pub fn random_orthogonal(d: usize, stream: RngStream) -> DenseMatrix {
    let mut rng = stream.rng();
    random_orthogonal_with(d, &mut rng)
}

pub(crate) fn random_orthogonal_with<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DenseMatrix {
    assert!(d >= 1);
    let g = gaussian_matrix_with(d, d, rng);
    let (mut q, r) = householder_qr(&g);
    for j in 0..d {
        if r.get(j, j) < 0.0 {
            for i in 0..d {
                let v = -q.get(i, j);
                q.set(i, j, v);
            }
        }
    }
    q
}
