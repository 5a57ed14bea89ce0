//! Matrix exponential of skew-symmetric matrices.
//!
//! Scaling and squaring with a Taylor series carried to machine precision:
//! `exp(B) = exp(B/2^s)^{2^s}` where `s` is chosen so the scaled 1-norm is
//! at most 1/2, at which point the series converges in ~20 terms with a
//! truncation error far below the double-precision unit roundoff. For skew
//! input the result is orthogonal, which the tests use as the oracle.

use super::DenseMatrix;
use crate::error::{Error, Result};

/// Tolerance on `‖A + Aᵀ‖_max` for accepting an input as skew-symmetric.
const SKEW_TOL: f64 = 1e-12;

/// Computes `R = exp(t·A)` for a skew-symmetric `A`.
///
/// `exp(0·A)` is the identity exactly. Non-square or non-skew input is
/// rejected.
pub fn expm_skew(a: &DenseMatrix, t: f64) -> Result<DenseMatrix> {
    if !a.is_square() {
        return Err(Error::invalid(format!(
            "expm_skew: matrix must be square, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if a.skew_error() > SKEW_TOL {
        return Err(Error::invalid(format!(
            "expm_skew: input is not skew-symmetric (max |A+Aᵀ| = {:.3e})",
            a.skew_error()
        )));
    }
    let d = a.rows();
    if t == 0.0 {
        return Ok(DenseMatrix::identity(d));
    }

    let b = a.scaled(t);
    let norm = b.norm1();
    let s = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let c = b.scaled(0.5_f64.powi(s as i32));

    // Taylor series of exp(C); with ‖C‖₁ ≤ 1/2 the k-th term is bounded by
    // (1/2)^k / k!, below 1e-20 past k = 18.
    let mut result = DenseMatrix::identity(d);
    let mut term = c.clone();
    let mut k = 1.0;
    loop {
        result = result.add(&term);
        if term.max_abs() < 1e-20 || k > 30.0 {
            break;
        }
        k += 1.0;
        term = term.matmul(&c).scaled(1.0 / k);
    }

    for _ in 0..s {
        result = result.matmul(&result);
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sample_skew;
    use crate::rng::RngStream;

    #[test]
    fn exp_of_zero_time_is_identity() {
        let a = sample_skew(6, RngStream::root(1));
        let r = expm_skew(&a, 0.0).unwrap();
        assert_eq!(r.data(), DenseMatrix::identity(6).data());
    }

    #[test]
    fn two_dimensional_rotation_closed_form() {
        // A = [[0,-1],[1,0]], t = π/2 rotates by 90°: exp(tA) = [[0,-1],[1,0]].
        let a = DenseMatrix::from_vec(2, 2, vec![0.0, -1.0, 1.0, 0.0]).unwrap();
        let r = expm_skew(&a, std::f64::consts::FRAC_PI_2).unwrap();
        let expected = [0.0, -1.0, 1.0, 0.0];
        for (got, want) in r.data().iter().zip(expected) {
            assert!((got - want).abs() < 1e-12, "got {got}, want {want}");
        }
    }

    #[test]
    fn exp_is_orthogonal_for_random_skew() {
        let a = sample_skew(20, RngStream::root(3));
        let r = expm_skew(&a, 0.3).unwrap();
        assert!(r.orthogonality_error() <= 1e-10);
    }

    #[test]
    fn group_property() {
        let a = sample_skew(10, RngStream::root(4));
        let (t, s) = (0.7, -0.4);
        let lhs = expm_skew(&a, t + s).unwrap();
        let rhs = expm_skew(&a, t).unwrap().matmul(&expm_skew(&a, s).unwrap());
        assert!(lhs.sub(&rhs).frobenius_norm() <= 1e-8);
    }

    #[test]
    fn rejects_non_skew_and_non_square() {
        let sym = DenseMatrix::from_vec(2, 2, vec![1.0, 2.0, 2.0, 1.0]).unwrap();
        assert!(expm_skew(&sym, 1.0).is_err());
        let rect = DenseMatrix::zeros(2, 3);
        assert!(expm_skew(&rect, 1.0).is_err());
    }
}
