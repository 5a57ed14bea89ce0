//! Loss oracles: deterministic quadratics, rotated wrappers, and additive
//! Gaussian gradient noise.
//!
//! The quadratic convention throughout is `L(x) = ½ xᵀA x`, so the Hessian
//! is exactly `A` and every reported Hessian norm refers to `A` itself.

use std::sync::Arc;

use rand::Rng;
use rand::RngCore;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{dot, DenseMatrix};
use crate::rotation::RotationSpec;

/// A differentiable loss with stochastic gradient access.
///
/// `stochastic_grad` must be unbiased: its expectation over the generator
/// equals `grad`. `hvp` is the symmetric linear map `v ↦ ∇²L(x)·v`.
pub trait LossOracle: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn grad(&self, x: &[f64]) -> Vec<f64>;
    fn hvp(&self, x: &[f64], v: &[f64]) -> Vec<f64>;

    /// Draws one stochastic gradient. Deterministic oracles return `grad`.
    fn stochastic_grad(&self, x: &[f64], rng: &mut dyn RngCore) -> Vec<f64> {
        let _ = rng;
        self.grad(x)
    }
}

/// The quadratic `L(x) = ½ xᵀA x` described by its Hessian `A`.
#[derive(Debug, Clone)]
pub struct QuadraticSpec {
    hessian: DenseMatrix,
}

impl QuadraticSpec {
    /// Validates that `hessian` is square and symmetric (to 1e-12 entrywise).
    pub fn new(hessian: DenseMatrix) -> Result<Self> {
        if !hessian.is_square() {
            return Err(Error::dim(format!(
                "quadratic Hessian must be square, got {}x{}",
                hessian.rows(),
                hessian.cols()
            )));
        }
        let err = hessian.symmetry_error();
        if err > 1e-12 {
            return Err(Error::invalid(format!(
                "quadratic Hessian must be symmetric (max |A_ij − A_ji| = {err:.3e})"
            )));
        }
        Ok(QuadraticSpec { hessian })
    }

    pub fn hessian(&self) -> &DenseMatrix {
        &self.hessian
    }

    pub fn dim(&self) -> usize {
        self.hessian.rows()
    }
}

/// Deterministic quadratic oracle; `stochastic_grad` equals `grad`.
#[derive(Debug, Clone)]
pub struct QuadraticOracle {
    a: DenseMatrix,
}

pub fn quadratic_oracle(spec: QuadraticSpec) -> QuadraticOracle {
    QuadraticOracle { a: spec.hessian }
}

impl LossOracle for QuadraticOracle {
    fn dim(&self) -> usize {
        self.a.rows()
    }

    fn value(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dim());
        0.5 * dot(x, &self.a.matvec(x))
    }

    fn grad(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim());
        self.a.matvec(x)
    }

    fn hvp(&self, x: &[f64], v: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim());
        assert_eq!(v.len(), self.dim());
        self.a.matvec(v)
    }
}

/// Composition `L ∘ T` for an orthogonal map `T`.
///
/// `value(x) = inner.value(Tx)`, `grad(x) = Tᵀ·inner.grad(Tx)`, and
/// `hvp(x,v) = Tᵀ·inner.hvp(Tx, Tv)`. The stochastic gradient composes the
/// same way around a shared generator, so a rotated run coupled by seed sees
/// the same noise realization as the unrotated one.
pub struct RotatedOracle {
    inner: Arc<dyn LossOracle>,
    rot: RotationSpec,
}

pub fn rotated_oracle(inner: Arc<dyn LossOracle>, rot: RotationSpec) -> Result<RotatedOracle> {
    if rot.dim() != inner.dim() {
        return Err(Error::dim(format!(
            "rotation dimension {} does not match oracle dimension {}",
            rot.dim(),
            inner.dim()
        )));
    }
    Ok(RotatedOracle { inner, rot })
}

impl RotatedOracle {
    fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.rot.apply(x).expect("dimension validated at construction")
    }

    fn pull_back(&self, y: &[f64]) -> Vec<f64> {
        self.rot
            .apply_inverse(y)
            .expect("dimension validated at construction")
    }
}

impl LossOracle for RotatedOracle {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.inner.value(&self.forward(x))
    }

    fn grad(&self, x: &[f64]) -> Vec<f64> {
        self.pull_back(&self.inner.grad(&self.forward(x)))
    }

    fn hvp(&self, x: &[f64], v: &[f64]) -> Vec<f64> {
        self.pull_back(&self.inner.hvp(&self.forward(x), &self.forward(v)))
    }

    fn stochastic_grad(&self, x: &[f64], rng: &mut dyn RngCore) -> Vec<f64> {
        self.pull_back(&self.inner.stochastic_grad(&self.forward(x), rng))
    }
}

/// Per-coordinate gradient noise levels `σ_i ≥ 0`.
#[derive(Debug, Clone)]
pub struct NoiseSpec {
    sigma: Vec<f64>,
}

impl NoiseSpec {
    pub fn new(sigma: Vec<f64>) -> Result<Self> {
        if sigma.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return Err(Error::invalid(
                "noise levels must be finite and nonnegative",
            ));
        }
        Ok(NoiseSpec { sigma })
    }

    pub fn uniform(dim: usize, sigma: f64) -> Result<Self> {
        NoiseSpec::new(vec![sigma; dim])
    }

    pub fn dim(&self) -> usize {
        self.sigma.len()
    }
}

/// Wraps an oracle so each `stochastic_grad` call returns
/// `grad(x) + ξ` with fresh independent `ξ_i ~ N(0, σ_i²)`.
pub struct NoisyOracle {
    inner: Arc<dyn LossOracle>,
    sigma: Vec<f64>,
}

pub fn noisy_oracle(inner: Arc<dyn LossOracle>, noise: NoiseSpec) -> Result<NoisyOracle> {
    if noise.dim() != inner.dim() {
        return Err(Error::dim(format!(
            "noise dimension {} does not match oracle dimension {}",
            noise.dim(),
            inner.dim()
        )));
    }
    Ok(NoisyOracle {
        inner,
        sigma: noise.sigma,
    })
}

impl LossOracle for NoisyOracle {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.inner.value(x)
    }

    fn grad(&self, x: &[f64]) -> Vec<f64> {
        self.inner.grad(x)
    }

    fn hvp(&self, x: &[f64], v: &[f64]) -> Vec<f64> {
        self.inner.hvp(x, v)
    }

    fn stochastic_grad(&self, x: &[f64], rng: &mut dyn RngCore) -> Vec<f64> {
        let mut g = self.inner.grad(x);
        for (gi, s) in g.iter_mut().zip(&self.sigma) {
            let z: f64 = rng.sample(StandardNormal);
            *gi += s * z;
        }
        g
    }
}
