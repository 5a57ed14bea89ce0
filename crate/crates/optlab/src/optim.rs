//! The blockwise Adam state machine and its special cases.
//!
//! One update rule covers the whole family. Given a partition `Φ:[d]→[B]`
//! with block sizes `d_b`, a step computes
//!
//! ```text
//! m_i ← β₁ m_i + (1−β₁) g_i
//! v_b ← β₂ v_b + (1−β₂) (Σ_{Φ(i)=b} g_i²) / d_b
//! x_i ← x_i − η_t · m_i / √(v_{Φ(i)} + ε)
//! ```
//!
//! Singleton blocks give Adam, one block gives AdaSGD, `β₁=β₂=0, ε=0` gives
//! sign descent, and `β₁=0` gives RMSProp. A plain SGD-with-momentum
//! baseline lives alongside. Trajectories record the loss and full-batch
//! gradient norms the convergence bounds are stated in.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::LossOracle;
use crate::rng::RngStream;

/// Block partition `Φ:[d]→[B]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    block_of: Vec<usize>,
    block_sizes: Vec<usize>,
}

impl Partition {
    /// Singleton blocks `i ↦ i` (Adam).
    pub fn adam(d: usize) -> Self {
        assert!(d >= 1);
        Partition {
            block_of: (0..d).collect(),
            block_sizes: vec![1; d],
        }
    }

    /// One block `i ↦ 0` (AdaSGD).
    pub fn adasgd(d: usize) -> Self {
        assert!(d >= 1);
        Partition {
            block_of: vec![0; d],
            block_sizes: vec![d],
        }
    }

    /// Contiguous blocks of the given sizes.
    pub fn blocks(sizes: &[usize]) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::invalid("partition needs at least one block"));
        }
        if sizes.iter().any(|&s| s == 0) {
            return Err(Error::invalid("blocks must be nonempty"));
        }
        let mut block_of = Vec::with_capacity(sizes.iter().sum());
        for (b, &s) in sizes.iter().enumerate() {
            block_of.extend(std::iter::repeat(b).take(s));
        }
        Ok(Partition {
            block_of,
            block_sizes: sizes.to_vec(),
        })
    }

    /// Arbitrary coordinate→block map; every block id in `[0,B)` must occur.
    pub fn from_block_of(block_of: Vec<usize>) -> Result<Self> {
        if block_of.is_empty() {
            return Err(Error::invalid("partition must cover at least one coordinate"));
        }
        let b = block_of.iter().max().unwrap() + 1;
        let mut sizes = vec![0usize; b];
        for &blk in &block_of {
            sizes[blk] += 1;
        }
        if sizes.iter().any(|&s| s == 0) {
            return Err(Error::invalid("every block id must appear at least once"));
        }
        Ok(Partition {
            block_of,
            block_sizes: sizes,
        })
    }

    pub fn dim(&self) -> usize {
        self.block_of.len()
    }

    pub fn num_blocks(&self) -> usize {
        self.block_sizes.len()
    }

    pub fn block_of(&self) -> &[usize] {
        &self.block_of
    }

    pub fn block_sizes(&self) -> &[usize] {
        &self.block_sizes
    }
}

/// `Φ`-norm: `max_b ‖x_(b)‖₂ / √d_b`.
pub fn phi_norm(x: &[f64], partition: &Partition) -> f64 {
    assert_eq!(x.len(), partition.dim());
    let sumsq = block_sum_squares(x, partition);
    sumsq
        .iter()
        .zip(partition.block_sizes())
        .map(|(s, &d)| (s / d as f64).sqrt())
        .fold(0.0_f64, f64::max)
}

/// Dual of the `Φ`-norm: `Σ_b √d_b · ‖x_(b)‖₂`.
pub fn phi_dual_norm(x: &[f64], partition: &Partition) -> f64 {
    assert_eq!(x.len(), partition.dim());
    let sumsq = block_sum_squares(x, partition);
    sumsq
        .iter()
        .zip(partition.block_sizes())
        .map(|(s, &d)| (d as f64).sqrt() * s.sqrt())
        .sum()
}

fn block_sum_squares(x: &[f64], partition: &Partition) -> Vec<f64> {
    let mut sumsq = vec![0.0; partition.num_blocks()];
    for (xi, &b) in x.iter().zip(partition.block_of()) {
        sumsq[b] += xi * xi;
    }
    sumsq
}

/// Learning-rate schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleSpec {
    Constant {
        eta: f64,
    },
    Cosine {
        peak: f64,
        #[serde(default)]
        floor: f64,
        #[serde(default)]
        warmup: usize,
    },
}

impl ScheduleSpec {
    pub fn constant(eta: f64) -> Self {
        ScheduleSpec::Constant { eta }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ScheduleSpec::Constant { eta } => {
                if !(eta >= 0.0 && eta.is_finite()) {
                    return Err(Error::invalid("constant schedule needs eta ≥ 0"));
                }
            }
            ScheduleSpec::Cosine { peak, floor, .. } => {
                if !(peak > 0.0 && peak.is_finite()) {
                    return Err(Error::invalid("cosine schedule needs peak > 0"));
                }
                if !(0.0..=peak).contains(&floor) {
                    return Err(Error::invalid("cosine schedule needs 0 ≤ floor ≤ peak"));
                }
            }
        }
        Ok(())
    }

    /// Learning rate for 1-based step `t` out of `total`.
    pub fn eta_at(&self, t: usize, total: usize) -> f64 {
        match *self {
            ScheduleSpec::Constant { eta } => eta,
            ScheduleSpec::Cosine {
                peak,
                floor,
                warmup,
            } => {
                if warmup > 0 && t <= warmup {
                    return peak * t as f64 / warmup as f64;
                }
                let span = total.saturating_sub(warmup).max(1) as f64;
                let progress = (t.saturating_sub(warmup)) as f64 / span;
                floor + 0.5 * (peak - floor) * (1.0 + (std::f64::consts::PI * progress).cos())
            }
        }
    }
}

/// Hyperparameters of the blockwise update.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub v0: f64,
    pub schedule: ScheduleSpec,
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.beta1) {
            return Err(Error::invalid("beta1 must lie in [0,1)"));
        }
        if !(0.0..=1.0).contains(&self.beta2) {
            return Err(Error::invalid("beta2 must lie in [0,1]"));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::invalid("epsilon must be finite and ≥ 0"));
        }
        if !(self.v0 >= 0.0 && self.v0.is_finite()) {
            return Err(Error::invalid("v0 must be finite and ≥ 0"));
        }
        self.schedule.validate()
    }
}

/// First and second moment accumulators plus the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    /// First moment, one entry per coordinate.
    pub m: Vec<f64>,
    /// Second moment, one entry per block.
    pub v: Vec<f64>,
    /// Completed steps.
    pub t: usize,
}

impl OptimizerState {
    /// Fresh state: `m₀ = 0`, `v₀` replicated per block.
    pub fn new(dim: usize, num_blocks: usize, v0: f64) -> Self {
        OptimizerState {
            m: vec![0.0; dim],
            v: vec![v0; num_blocks],
            t: 0,
        }
    }
}

/// One blockwise Adam update; mutates `state` and `x` only on success.
///
/// A block whose denominator `√(v_b + ε)` is zero contributes a zero update
/// when its first moment is zero too (the 0/0 case), and is an error
/// otherwise.
pub fn blockwise_adam_step(
    state: &mut OptimizerState,
    x: &mut [f64],
    g: &[f64],
    eta_t: f64,
    partition: &Partition,
    config: &OptimizerConfig,
) -> Result<()> {
    let d = partition.dim();
    let nb = partition.num_blocks();
    if x.len() != d || g.len() != d || state.m.len() != d || state.v.len() != nb {
        return Err(Error::dim(format!(
            "step expects dim {d} / {nb} blocks, got x:{} g:{} m:{} v:{}",
            x.len(),
            g.len(),
            state.m.len(),
            state.v.len()
        )));
    }
    if !(eta_t >= 0.0 && eta_t.is_finite()) {
        return Err(Error::invalid("eta_t must be finite and ≥ 0"));
    }

    let block_of = partition.block_of();
    let mut new_m = Vec::with_capacity(d);
    for i in 0..d {
        new_m.push(config.beta1 * state.m[i] + (1.0 - config.beta1) * g[i]);
    }

    let mut acc = vec![0.0; nb];
    for i in 0..d {
        acc[block_of[i]] += g[i] * g[i];
    }
    let mut new_v = Vec::with_capacity(nb);
    for b in 0..nb {
        new_v.push(
            config.beta2 * state.v[b]
                + (1.0 - config.beta2) * acc[b] / partition.block_sizes()[b] as f64,
        );
    }

    for i in 0..d {
        let denom = (new_v[block_of[i]] + config.epsilon).sqrt();
        if denom == 0.0 && new_m[i] != 0.0 {
            return Err(Error::DivisionByZero(format!(
                "block {} has zero second moment but nonzero first moment at coordinate {i}",
                block_of[i]
            )));
        }
    }
    for i in 0..d {
        let denom = (new_v[block_of[i]] + config.epsilon).sqrt();
        if denom > 0.0 {
            x[i] -= eta_t * new_m[i] / denom;
        }
    }
    state.m = new_m;
    state.v = new_v;
    state.t += 1;
    Ok(())
}

/// One heavy-ball SGD update: `m ← μ·m + g`, `x ← x − η_t·m`.
pub fn sgd_momentum_step(
    state: &mut OptimizerState,
    x: &mut [f64],
    g: &[f64],
    eta_t: f64,
    momentum: f64,
) -> Result<()> {
    if !(0.0..1.0).contains(&momentum) {
        return Err(Error::invalid("momentum must lie in [0,1)"));
    }
    let d = x.len();
    if g.len() != d || state.m.len() != d {
        return Err(Error::dim("sgd step dimension mismatch".to_string()));
    }
    for i in 0..d {
        state.m[i] = momentum * state.m[i] + g[i];
        x[i] -= eta_t * state.m[i];
    }
    state.t += 1;
    Ok(())
}

/// An optimizer selection for [`run`].
#[derive(Debug, Clone)]
pub enum Algo {
    BlockwiseAdam {
        partition: Partition,
        config: OptimizerConfig,
    },
    Sgd {
        momentum: f64,
        schedule: ScheduleSpec,
    },
}

impl Algo {
    /// Adam with singleton blocks.
    pub fn adam(d: usize, beta1: f64, beta2: f64, epsilon: f64, v0: f64, eta: f64) -> Self {
        Algo::BlockwiseAdam {
            partition: Partition::adam(d),
            config: OptimizerConfig {
                beta1,
                beta2,
                epsilon,
                v0,
                schedule: ScheduleSpec::constant(eta),
            },
        }
    }

    /// AdaSGD: one shared second-moment scalar.
    pub fn adasgd(d: usize, beta1: f64, beta2: f64, epsilon: f64, v0: f64, eta: f64) -> Self {
        Algo::BlockwiseAdam {
            partition: Partition::adasgd(d),
            config: OptimizerConfig {
                beta1,
                beta2,
                epsilon,
                v0,
                schedule: ScheduleSpec::constant(eta),
            },
        }
    }

    /// Sign descent: Adam with `β₁ = β₂ = 0`, `ε = 0`, `v₀ = 0`.
    pub fn signgd(d: usize, eta: f64) -> Self {
        Algo::adam(d, 0.0, 0.0, 0.0, 0.0, eta)
    }

    /// RMSProp: Adam with `β₁ = 0`.
    pub fn rmsprop(d: usize, beta2: f64, epsilon: f64, v0: f64, eta: f64) -> Self {
        Algo::adam(d, 0.0, beta2, epsilon, v0, eta)
    }

    pub fn schedule(&self) -> &ScheduleSpec {
        match self {
            Algo::BlockwiseAdam { config, .. } => &config.schedule,
            Algo::Sgd { schedule, .. } => schedule,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Algo::BlockwiseAdam { config, .. } => config.validate(),
            Algo::Sgd { momentum, schedule } => {
                if !(0.0..1.0).contains(momentum) {
                    return Err(Error::invalid("momentum must lie in [0,1)"));
                }
                schedule.validate()
            }
        }
    }
}

/// Per-step trajectory metrics.
///
/// `loss` and the gradient norms refer to the iterate *reached* by step `t`;
/// the gradient is the full-batch one, so bound checks against noisy runs
/// compare like with like.
#[derive(Debug, Clone)]
pub struct StepRecord {
    pub step: usize,
    pub eta: f64,
    pub loss: f64,
    pub grad_l1: f64,
    pub grad_l2: f64,
    pub grad_phi_dual: f64,
    pub v_min: Option<f64>,
    pub v_max: Option<f64>,
}

/// Full record of one optimization run.
#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub initial_loss: f64,
    pub initial_grad_l1: f64,
    pub steps: Vec<StepRecord>,
    /// Saved iterates `(t, x_t)`; always contains `(0, x₀)` and the final
    /// iterate, plus every `checkpoint_every`-th step when nonzero.
    pub checkpoints: Vec<(usize, Vec<f64>)>,
    pub final_x: Vec<f64>,
}

impl TrajectoryRecord {
    pub fn final_loss(&self) -> f64 {
        self.steps.last().map(|s| s.loss).unwrap_or(self.initial_loss)
    }

    /// `min_{1 ≤ t ≤ T} ‖∇L(x_t)‖₁`.
    pub fn min_grad_l1(&self) -> f64 {
        self.steps
            .iter()
            .map(|s| s.grad_l1)
            .fold(f64::INFINITY, f64::min)
    }

    /// `min_{T/2 < t ≤ T} ‖∇L(x_t)‖₁`.
    pub fn min_grad_l1_second_half(&self) -> f64 {
        let t = self.steps.len();
        self.steps[t / 2..]
            .iter()
            .map(|s| s.grad_l1)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Runs `algo` for `steps` steps from `x0`, drawing one stochastic gradient
/// per step from `stream`, and records trajectory metrics.
///
/// Step failures propagate with the 1-based step index attached.
pub fn run(
    oracle: &dyn LossOracle,
    algo: &Algo,
    x0: &[f64],
    steps: usize,
    stream: RngStream,
    checkpoint_every: usize,
) -> Result<TrajectoryRecord> {
    if steps == 0 {
        return Err(Error::invalid("run needs at least one step"));
    }
    let d = oracle.dim();
    if x0.len() != d {
        return Err(Error::dim(format!(
            "x0 has length {}, oracle dimension is {d}",
            x0.len()
        )));
    }
    algo.validate()?;

    // Gradient norms for SGD are reported against singleton blocks, whose
    // dual norm is the plain ℓ1 norm.
    let metric_partition = match algo {
        Algo::BlockwiseAdam { partition, .. } => partition.clone(),
        Algo::Sgd { .. } => Partition::adam(d),
    };
    let mut state = match algo {
        Algo::BlockwiseAdam { partition, config } => {
            OptimizerState::new(d, partition.num_blocks(), config.v0)
        }
        Algo::Sgd { .. } => OptimizerState::new(d, 1, 0.0),
    };

    let mut rng = stream.rng();
    let mut x = x0.to_vec();
    let mut records = Vec::with_capacity(steps);
    let mut checkpoints = vec![(0, x.clone())];
    let initial_loss = oracle.value(&x);
    let initial_grad_l1 = crate::linalg::norm_l1(&oracle.grad(&x));

    for t in 1..=steps {
        let eta = algo.schedule().eta_at(t, steps);
        let g = oracle.stochastic_grad(&x, &mut rng);
        let (v_min, v_max) = match algo {
            Algo::BlockwiseAdam { partition, config } => {
                blockwise_adam_step(&mut state, &mut x, &g, eta, partition, config)
                    .map_err(|e| e.at_step(t))?;
                let lo = state.v.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = state.v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                (Some(lo), Some(hi))
            }
            Algo::Sgd { momentum, .. } => {
                sgd_momentum_step(&mut state, &mut x, &g, eta, *momentum)
                    .map_err(|e| e.at_step(t))?;
                (None, None)
            }
        };

        let gbar = oracle.grad(&x);
        records.push(StepRecord {
            step: t,
            eta,
            loss: oracle.value(&x),
            grad_l1: crate::linalg::norm_l1(&gbar),
            grad_l2: crate::linalg::norm_l2(&gbar),
            grad_phi_dual: phi_dual_norm(&gbar, &metric_partition),
            v_min,
            v_max,
        });
        if (checkpoint_every > 0 && t % checkpoint_every == 0) || t == steps {
            checkpoints.push((t, x.clone()));
        }
    }

    Ok(TrajectoryRecord {
        initial_loss,
        initial_grad_l1,
        steps: records,
        checkpoints,
        final_x: x,
    })
}

/// Outcome of evaluating the moving-average ratio inequality
/// `Σ_t g_t²/v_t ≤ T + β₂/(1−β₂)·ln(v_T/v₀)` on one admissible sequence.
#[derive(Debug, Clone, Copy)]
pub struct MomentumRatioCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Validates admissibility — `v₀ ≥ 0`, `v₁ > 0`, and
/// `v_t − β₂·v_{t−1} ≥ (1−β₂)·g_t²` for every `t ≥ 1` — then evaluates both
/// sides. When `v₀ = 0` the right-hand side uses the `v₁/e` substitution.
pub fn momentum_ratio_check(g_seq: &[f64], v_seq: &[f64], beta2: f64) -> Result<MomentumRatioCheck> {
    if !(beta2 > 0.0 && beta2 < 1.0) {
        return Err(Error::invalid("beta2 must lie in (0,1)"));
    }
    let t_len = g_seq.len();
    if v_seq.len() != t_len + 1 {
        return Err(Error::dim(format!(
            "need v₀..v_T (length {}), got length {}",
            t_len + 1,
            v_seq.len()
        )));
    }
    if t_len == 0 {
        return Err(Error::invalid("need at least one step"));
    }
    if v_seq[0] < 0.0 {
        return Err(Error::invalid("v₀ must be ≥ 0"));
    }
    if v_seq[1] <= 0.0 {
        return Err(Error::invalid("v₁ must be > 0"));
    }
    for t in 1..=t_len {
        let slack = 1e-12 * (1.0 + v_seq[t].abs());
        if v_seq[t] - beta2 * v_seq[t - 1] < (1.0 - beta2) * g_seq[t - 1].powi(2) - slack {
            return Err(Error::invalid(format!(
                "sequence violates v_t − β₂v_(t−1) ≥ (1−β₂)g_t² at t = {t}"
            )));
        }
    }

    let lhs: f64 = (1..=t_len)
        .map(|t| g_seq[t - 1].powi(2) / v_seq[t])
        .sum();
    let v_last = v_seq[t_len];
    let ratio = if v_seq[0] > 0.0 {
        (v_last / v_seq[0]).ln()
    } else {
        (v_last * std::f64::consts::E / v_seq[1]).ln()
    };
    let rhs = t_len as f64 + beta2 / (1.0 - beta2) * ratio;
    Ok(MomentumRatioCheck {
        lhs,
        rhs,
        holds: lhs <= rhs + 1e-9,
    })
}
