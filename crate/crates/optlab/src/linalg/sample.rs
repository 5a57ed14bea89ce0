//! Seeded random samplers for matrices and probe vectors.

use rand::distributions::Open01;
use rand::Rng;
use rand_distr::StandardNormal;

use super::DenseMatrix;
use crate::rng::RngStream;

/// Samples a `d×d` matrix with i.i.d. standard normal entries and returns
/// the skew-symmetric part `A = M − Mᵀ`.
///
/// The skew symmetry is exact: `A_ij = −A_ji` holds bitwise because IEEE
/// subtraction satisfies `a − b = −(b − a)`.
pub fn sample_skew(d: usize, stream: RngStream) -> DenseMatrix {
    assert!(d >= 1, "sample_skew: dimension must be positive");
    let mut rng = stream.rng();
    let m = gaussian_matrix_with(d, d, &mut rng);
    m.sub(&m.transpose())
}

/// Standard Cauchy quantile function: maps `u ∈ (0,1)` to `tan(π(u − 1/2))`.
#[inline]
pub fn cauchy_from_uniform(u: f64) -> f64 {
    debug_assert!(u > 0.0 && u < 1.0);
    (std::f64::consts::PI * (u - 0.5)).tan()
}

/// Samples `d` i.i.d. standard Cauchy entries by inverse-CDF transform of
/// uniforms on the open interval `(0,1)`.
pub fn sample_cauchy_vector(d: usize, stream: RngStream) -> Vec<f64> {
    assert!(d >= 1, "sample_cauchy_vector: dimension must be positive");
    let mut rng = stream.rng();
    (0..d)
        .map(|_| cauchy_from_uniform(rng.sample::<f64, _>(Open01)))
        .collect()
}

/// Samples `d` i.i.d. standard normal entries.
pub fn sample_gaussian_vector(d: usize, stream: RngStream) -> Vec<f64> {
    let mut rng = stream.rng();
    gaussian_vector_with(d, &mut rng)
}

pub(crate) fn gaussian_vector_with<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

pub(crate) fn gaussian_matrix_with<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    rng: &mut R,
) -> DenseMatrix {
    let data = (0..rows * cols)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect();
    DenseMatrix::from_vec(rows, cols, data).expect("gaussian draws are finite")
}
