//! Spectral norm of a symmetric operator via Lanczos iteration.

use crate::error::{Error, Result};
use crate::linalg::{dot, norm_l2, sample_gaussian_vector};
use crate::rng::RngStream;

/// Result of a spectral-norm estimation.
#[derive(Debug, Clone, Copy)]
pub struct SpectralEstimate {
    /// Largest Ritz value in absolute value.
    pub value: f64,
    /// Whether the relative change fell below the requested tolerance.
    pub converged: bool,
    /// Relative change of the estimate over the last iteration.
    pub residual: f64,
    pub iterations: usize,
}

/// Estimates `max |λ|` of a symmetric operator on `R^d`.
///
/// Lanczos with full reorthogonalization from a random start vector; the
/// extreme eigenvalues of the growing tridiagonal matrix are tracked until
/// their relative change drops below `tol`. If Lanczos exhausts `max_iters`
/// without settling, a power-iteration fallback refines the estimate; a
/// still-unconverged result is returned flagged with the achieved residual.
pub fn spectral_norm<F>(
    hvp: F,
    d: usize,
    max_iters: usize,
    tol: f64,
    stream: RngStream,
) -> Result<SpectralEstimate>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    if d == 0 {
        return Err(Error::invalid("dimension must be positive"));
    }
    if max_iters == 0 {
        return Err(Error::invalid("max_iters must be at least 1"));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid("tol must be positive"));
    }

    let m = max_iters.min(d);
    let mut q = sample_gaussian_vector(d, stream.substream(0));
    let norm = norm_l2(&q);
    for qi in q.iter_mut() {
        *qi /= norm;
    }

    let mut basis: Vec<Vec<f64>> = vec![q.clone()];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut estimate = 0.0_f64;
    let mut residual = f64::INFINITY;
    let mut iterations = 0;

    for j in 0..m {
        iterations = j + 1;
        let qj = basis[j].clone();
        let mut w = hvp(&qj);
        assert_eq!(w.len(), d, "hvp output has wrong dimension");
        let alpha = dot(&w, &qj);
        alphas.push(alpha);
        for (wi, qi) in w.iter_mut().zip(&qj) {
            *wi -= alpha * qi;
        }
        if j > 0 {
            let beta_prev = betas[j - 1];
            for (wi, qi) in w.iter_mut().zip(&basis[j - 1]) {
                *wi -= beta_prev * qi;
            }
        }
        // Full reorthogonalization against the whole basis.
        for qk in &basis {
            let c = dot(&w, qk);
            for (wi, qi) in w.iter_mut().zip(qk) {
                *wi -= c * qi;
            }
        }

        let (lo, hi) = tridiag_extreme_eigenvalues(&alphas, &betas);
        let new_estimate = lo.abs().max(hi.abs());
        residual = (new_estimate - estimate).abs() / new_estimate.abs().max(f64::MIN_POSITIVE);
        estimate = new_estimate;
        if j > 0 && residual <= tol {
            return Ok(SpectralEstimate {
                value: estimate,
                converged: true,
                residual,
                iterations,
            });
        }

        let beta = norm_l2(&w);
        if beta < 1e-13 * estimate.abs().max(1.0) {
            // Invariant subspace reached: the Ritz values are exact.
            return Ok(SpectralEstimate {
                value: estimate,
                converged: true,
                residual: 0.0,
                iterations,
            });
        }
        if j + 1 < m {
            betas.push(beta);
            for wi in w.iter_mut() {
                *wi /= beta;
            }
            basis.push(w);
        }
    }

    // Power-iteration fallback on the same operator.
    let mut v = sample_gaussian_vector(d, stream.substream(1));
    let norm = norm_l2(&v);
    for vi in v.iter_mut() {
        *vi /= norm;
    }
    let mut rayleigh = estimate;
    for k in 0..(4 * max_iters) {
        let av = hvp(&v);
        let new_rayleigh = dot(&av, &v).abs();
        let change =
            (new_rayleigh - rayleigh).abs() / new_rayleigh.abs().max(f64::MIN_POSITIVE);
        let norm = norm_l2(&av);
        if norm == 0.0 {
            break;
        }
        v = av.iter().map(|x| x / norm).collect();
        if k > 0 && change <= tol {
            return Ok(SpectralEstimate {
                value: new_rayleigh.max(estimate),
                converged: true,
                residual: change,
                iterations: iterations + k + 1,
            });
        }
        rayleigh = new_rayleigh;
    }

    Ok(SpectralEstimate {
        value: estimate.max(rayleigh),
        converged: false,
        residual,
        iterations,
    })
}

/// Smallest and largest eigenvalue of the symmetric tridiagonal matrix with
/// diagonal `diag` and off-diagonal `off`, by Sturm-sequence bisection.
pub(crate) fn tridiag_extreme_eigenvalues(diag: &[f64], off: &[f64]) -> (f64, f64) {
    let n = diag.len();
    debug_assert!(off.len() + 1 >= n);
    if n == 1 {
        return (diag[0], diag[0]);
    }

    // Gershgorin bounds.
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let mut r = 0.0;
        if i > 0 {
            r += off[i - 1].abs();
        }
        if i < n - 1 {
            r += off[i].abs();
        }
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }

    // count(x) = number of eigenvalues strictly below x.
    let count = |x: f64| -> usize {
        let mut c = 0;
        let mut q = 1.0_f64;
        for i in 0..n {
            let e2 = if i > 0 { off[i - 1] * off[i - 1] } else { 0.0 };
            q = diag[i] - x - e2 / q;
            if q == 0.0 {
                q = -1e-300;
            }
            if q < 0.0 {
                c += 1;
            }
        }
        c
    };

    let bisect = |target: usize| -> f64 {
        // smallest x in [lo,hi] with count(x) ≥ target
        let mut a = lo - 1e-12 * (1.0 + lo.abs());
        let mut b = hi + 1e-12 * (1.0 + hi.abs());
        for _ in 0..90 {
            let mid = 0.5 * (a + b);
            if count(mid) >= target {
                b = mid;
            } else {
                a = mid;
            }
            if b - a <= f64::EPSILON * (1.0 + a.abs().max(b.abs())) {
                break;
            }
        }
        0.5 * (a + b)
    };

    (bisect(1), bisect(n))
}
