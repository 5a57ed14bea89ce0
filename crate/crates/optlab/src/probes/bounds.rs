//! Evaluation of the convergence-rate bounds for blockwise adaptive methods.
//!
//! Constants are kept exactly as they appear in the statements (including
//! the `ln 32`), so a bound-versus-trajectory comparison is reproducible
//! rather than an O(·) judgement call.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Everything the bound formulas consume.
///
/// Blocks are indexed consistently: `smoothness[b]`, `sigma[b]`, and
/// `block_sizes[b]` describe block `b`; singleton blocks recover the
/// coordinate-wise statements.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundInputs {
    /// Per-block smoothness constants `H_b`.
    pub smoothness: Vec<f64>,
    /// Per-block noise levels `σ_b`.
    pub sigma: Vec<f64>,
    /// Block sizes `d_b`.
    pub block_sizes: Vec<usize>,
    pub eta: f64,
    pub beta2: f64,
    /// Step budget `T`.
    pub steps: usize,
    pub v0: f64,
    pub epsilon: f64,
    /// Initial suboptimality `L(x₀) − min L`.
    pub delta0: f64,
    /// `‖∇L(x₀)‖_Φ`.
    pub grad0_phi: f64,
}

impl BoundInputs {
    fn validate(&self) -> Result<()> {
        let b = self.smoothness.len();
        if b == 0 || self.sigma.len() != b || self.block_sizes.len() != b {
            return Err(Error::dim(
                "smoothness, sigma, and block_sizes must share one nonempty length".to_string(),
            ));
        }
        if self.steps == 0 {
            return Err(Error::invalid("steps must be positive"));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::invalid("eta must be positive"));
        }
        if !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::invalid("beta2 must lie in [0,1)"));
        }
        let nonneg = |v: f64| v.is_finite() && v >= 0.0;
        if !self.smoothness.iter().chain(&self.sigma).all(|&v| nonneg(v)) {
            return Err(Error::invalid("smoothness and sigma must be ≥ 0"));
        }
        if self.block_sizes.iter().any(|&d| d == 0) {
            return Err(Error::invalid("block sizes must be positive"));
        }
        if !nonneg(self.v0) || !nonneg(self.epsilon) || !nonneg(self.delta0)
            || !nonneg(self.grad0_phi)
        {
            return Err(Error::invalid("v0, epsilon, delta0, grad0_phi must be ≥ 0"));
        }
        Ok(())
    }

    fn dim(&self) -> usize {
        self.block_sizes.iter().sum()
    }
}

/// Evaluated bound quantities.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundReport {
    /// Logarithmic second-moment growth term `F`.
    pub f_term: f64,
    /// Leading term `E` of the blockwise rate.
    pub e_term: f64,
    /// `E + √E·√(β₂^{T/4}/(T(1−β₂))·d·√v₀ + Σ_b d_b σ_b + d·√ε)`.
    pub rate_bound: f64,
    /// Deterministic sign-descent bound `Δ₀/(Tη) + Hη/2` at the given `η`.
    pub signgd_bound: f64,
    /// The `η` minimizing it, `√(2Δ₀/(TH))`.
    pub signgd_optimal_eta: f64,
    /// Its optimized value `√(2HΔ₀/T)`.
    pub signgd_optimized_bound: f64,
    /// `√(Δ₀/(T·Σ_b H_b))`.
    pub recommended_eta: f64,
    /// `ln(T)/T`.
    pub recommended_one_minus_beta2: f64,
}

/// Evaluates the rate bounds on the given inputs.
pub fn bound_report(inputs: &BoundInputs) -> Result<BoundReport> {
    inputs.validate()?;
    let t = inputs.steps as f64;
    let d = inputs.dim() as f64;
    let beta2 = inputs.beta2;
    let h_sum: f64 = inputs.smoothness.iter().sum();
    let h_max: f64 = inputs.smoothness.iter().cloned().fold(0.0, f64::max);
    let sigma_sq_sum: f64 = inputs.sigma.iter().map(|s| s * s).sum();
    let weighted_sigma: f64 = inputs
        .sigma
        .iter()
        .zip(&inputs.block_sizes)
        .map(|(s, &db)| db as f64 * s)
        .sum();

    let floor = inputs.v0 + inputs.epsilon;
    let f_arg = sigma_sq_sum
        + inputs.grad0_phi.powi(2)
        + h_max.powi(2) * inputs.eta.powi(2) * t * (t + 1.0 / (1.0 - beta2));
    let f_term = 2.0 * (1.0 + f_arg / floor).ln() + 32.0_f64.ln();

    let f_coeff = if beta2 == 0.0 {
        0.0
    } else {
        beta2 * f_term / (t * (1.0 - beta2))
    };
    let e_term = 2.0 * inputs.delta0 / (inputs.eta * t)
        + (1.0 + f_coeff)
            * (inputs.eta * h_sum + (1.0 - beta2).sqrt() * weighted_sigma);

    let tail = beta2.powf(t / 4.0) / (t * (1.0 - beta2)) * d * inputs.v0.sqrt()
        + weighted_sigma
        + d * inputs.epsilon.sqrt();
    let rate_bound = e_term + e_term.sqrt() * tail.sqrt();

    let signgd_bound = inputs.delta0 / (t * inputs.eta) + h_sum * inputs.eta / 2.0;
    let signgd_optimal_eta = if h_sum > 0.0 {
        (2.0 * inputs.delta0 / (t * h_sum)).sqrt()
    } else {
        f64::INFINITY
    };
    let signgd_optimized_bound = (2.0 * h_sum * inputs.delta0 / t).sqrt();
    let recommended_eta = if h_sum > 0.0 {
        (inputs.delta0 / (t * h_sum)).sqrt()
    } else {
        f64::INFINITY
    };

    Ok(BoundReport {
        f_term,
        e_term,
        rate_bound,
        signgd_bound,
        signgd_optimal_eta,
        signgd_optimized_bound,
        recommended_eta,
        recommended_one_minus_beta2: t.ln() / t,
    })
}
