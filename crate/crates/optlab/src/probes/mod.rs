//! Loss-geometry probes: randomized (1,1)-norm estimation, spectral norm
//! via Lanczos, blockwise smoothness constants, and convergence-bound
//! evaluation.

mod bounds;
mod smoothness;
mod spectral;

pub use bounds::{bound_report, BoundInputs, BoundReport};
pub use smoothness::{blockwise_smoothness, quadratic_form_check, QuadraticFormCheck};
pub use spectral::{spectral_norm, SpectralEstimate};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::sample_cauchy_vector;
use crate::rng::RngStream;

/// A randomized estimate of `‖A‖₁,₁ = Σ_ij |A_ij|` with its probe count.
#[derive(Debug, Clone, Copy)]
pub struct NormEstimate {
    pub value: f64,
    pub probes: usize,
    pub dim: usize,
}

impl NormEstimate {
    /// Failure probability bound at relative error `eps`:
    /// `2d·exp(−8nε²/(25π²))`.
    pub fn failure_bound(&self, eps: f64) -> Result<f64> {
        concentration_bound(self.probes, self.dim, eps)
    }
}

/// Estimates `‖A‖₁,₁` of a symmetric operator given only by Hessian-vector
/// products.
///
/// Draws `n` standard Cauchy probe vectors `v⁽ⁱ⁾`; by 1-stability each entry
/// of `A·v⁽ⁱ⁾` is Cauchy with scale equal to the matching row's ℓ1 norm, so
/// the per-row median of absolute samples estimates that row sum and their
/// total estimates the norm. The median of an even number of samples is the
/// lower-middle order statistic.
///
/// The `n` products run concurrently; each probe has its own substream.
pub fn estimate_norm11<F>(hvp: F, d: usize, n: usize, stream: RngStream) -> Result<NormEstimate>
where
    F: Fn(&[f64]) -> Vec<f64> + Sync,
{
    if n == 0 {
        return Err(Error::invalid("estimate_norm11 needs at least one probe"));
    }
    if d == 0 {
        return Err(Error::invalid("dimension must be positive"));
    }
    let columns: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let probe = sample_cauchy_vector(d, stream.substream(i as u64));
            let col = hvp(&probe);
            assert_eq!(col.len(), d, "hvp output has wrong dimension");
            col
        })
        .collect();

    let mut total = 0.0;
    let mut row_samples = vec![0.0; n];
    for j in 0..d {
        for (i, col) in columns.iter().enumerate() {
            row_samples[i] = col[j].abs();
        }
        row_samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
        total += row_samples[(n - 1) / 2];
    }
    Ok(NormEstimate {
        value: total,
        probes: n,
        dim: d,
    })
}

/// Failure probability of the (1,1)-norm estimator at relative error `eps`:
/// `2d·exp(−8nε²/(25π²))`, valid for `eps ∈ (0,1)`.
pub fn concentration_bound(n: usize, d: usize, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::invalid("eps must lie in the open interval (0,1)"));
    }
    if n == 0 || d == 0 {
        return Err(Error::invalid("n and d must be positive"));
    }
    let exponent = -8.0 * n as f64 * eps * eps / (25.0 * std::f64::consts::PI.powi(2));
    Ok(2.0 * d as f64 * exponent.exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;
    use approx::assert_relative_eq;

    #[test]
    fn concentration_bound_formula() {
        // limit eps → 0⁺ approaches 2d
        let near = concentration_bound(100, 10, 1e-9).unwrap();
        assert_relative_eq!(near, 20.0, max_relative = 1e-6);
        // n = 100, d = 10, eps = 0.5
        let v = concentration_bound(100, 10, 0.5).unwrap();
        let expected = 20.0 * (-8.0 * 100.0 * 0.25 / (25.0 * std::f64::consts::PI.powi(2))).exp();
        assert_relative_eq!(v, expected);
        assert!((v - 8.893).abs() < 5e-3, "got {v}");
        // doubling n squares the exponential factor
        let b1 = concentration_bound(60, 7, 0.3).unwrap() / 14.0;
        let b2 = concentration_bound(120, 7, 0.3).unwrap() / 14.0;
        assert_relative_eq!(b2, b1 * b1, max_relative = 1e-12);
    }

    #[test]
    fn concentration_bound_rejects_bad_eps() {
        assert!(concentration_bound(10, 10, 0.0).is_err());
        assert!(concentration_bound(10, 10, 1.0).is_err());
        assert!(concentration_bound(0, 10, 0.5).is_err());
    }

    #[test]
    fn norm11_estimate_on_small_diagonal() {
        let a = DenseMatrix::diagonal(&[1.0, 2.0, 3.0]);
        let est = estimate_norm11(|v| a.matvec(v), 3, 1001, RngStream::root(13)).unwrap();
        assert!(
            (est.value - 6.0).abs() / 6.0 < 0.1,
            "estimate {} should be within 10% of 6",
            est.value
        );
        assert_eq!(est.probes, 1001);
    }

    #[test]
    fn norm11_estimator_rejects_zero_probes() {
        let a = DenseMatrix::diagonal(&[1.0]);
        assert!(estimate_norm11(|v| a.matvec(v), 1, 0, RngStream::root(0)).is_err());
    }

    #[test]
    fn norm11_is_invariant_under_row_sign_flips() {
        let a = DenseMatrix::from_vec(2, 2, vec![1.0, -2.0, -2.0, 0.5]).unwrap();
        let flipped = DenseMatrix::from_vec(2, 2, vec![-1.0, 2.0, -2.0, 0.5]).unwrap();
        let s = RngStream::root(3);
        let ea = estimate_norm11(|v| a.matvec(v), 2, 101, s).unwrap();
        let eb = estimate_norm11(|v| flipped.matvec(v), 2, 101, s).unwrap();
        assert_relative_eq!(ea.value, eb.value, max_relative = 1e-12);
    }

    #[test]
    fn lower_median_convention_for_even_probe_count() {
        // With the operator x ↦ x and n = 2 probes, each row's samples are the
        // absolute coordinates of the two probes; the lower-middle statistic
        // is their minimum.
        let d = 4;
        let s = RngStream::root(99);
        let est = estimate_norm11(|v| v.to_vec(), d, 2, s).unwrap();
        let p0 = sample_cauchy_vector(d, s.substream(0));
        let p1 = sample_cauchy_vector(d, s.substream(1));
        let expected: f64 = (0..d).map(|j| p0[j].abs().min(p1[j].abs())).sum();
        assert_relative_eq!(est.value, expected);
    }
}
