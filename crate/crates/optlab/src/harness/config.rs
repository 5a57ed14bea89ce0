//! Experiment configuration: one JSON document per run.
//!
//! Unknown keys are rejected so typos in grids fail loudly instead of
//! silently falling back to defaults. Every field has a default, so an
//! empty object `{}` is a valid config for any subcommand.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{random_orthogonal, sample_gaussian_vector, DenseMatrix};
use crate::optim::Algo;
use crate::optim::{OptimizerConfig, Partition, ScheduleSpec};
use crate::probes::BoundInputs;
use crate::rng::RngStream;
use crate::rotation::{randperm_compose, RotationSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    QuadraticTable,
    ConvergenceSweep,
    InvarianceSuite,
    NormEstimate,
    BoundCheck,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::QuadraticTable => "quadratic_table",
            ExperimentKind::ConvergenceSweep => "convergence_sweep",
            ExperimentKind::InvarianceSuite => "invariance_suite",
            ExperimentKind::NormEstimate => "norm_estimate",
            ExperimentKind::BoundCheck => "bound_check",
        }
    }
}

/// Where the quadratic's Hessian comes from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    /// `diag(1,…,1 (10), 1, 1/2², …, 1/990²)`, dimension 1000.
    Table1Default,
    Diagonal { values: Vec<f64> },
    /// JSON file `{"dim": n, "entries": [n*n row-major values]}`.
    DenseFile { path: PathBuf },
    /// `G·Gᵀ/dim` for a standard Gaussian `G`, sampled per seed.
    RandomPsd { dim: usize },
}

impl ProblemSpec {
    /// The diagonal of the default ill-conditioned problem: ten leading
    /// ones followed by `1/k²` for `k = 1..=990`.
    pub fn table1_diagonal() -> Vec<f64> {
        let mut values = vec![1.0; 10];
        values.extend((1..=990).map(|k| 1.0 / (k as f64 * k as f64)));
        values
    }

    /// Builds the Hessian; `stream` only matters for `RandomPsd`.
    pub fn build(&self, stream: RngStream) -> Result<DenseMatrix> {
        match self {
            ProblemSpec::Table1Default => {
                Ok(DenseMatrix::diagonal(&Self::table1_diagonal()))
            }
            ProblemSpec::Diagonal { values } => {
                if values.is_empty() {
                    return Err(Error::Config("diagonal problem needs values".into()));
                }
                if !values.iter().all(|v| v.is_finite()) {
                    return Err(Error::Config("diagonal entries must be finite".into()));
                }
                Ok(DenseMatrix::diagonal(values))
            }
            ProblemSpec::DenseFile { path } => load_dense_matrix(path),
            ProblemSpec::RandomPsd { dim } => {
                if *dim == 0 {
                    return Err(Error::Config("random_psd needs dim ≥ 1".into()));
                }
                let mut rng = stream.rng();
                let g = DenseMatrix::from_fn(*dim, *dim, |_, _| {
                    use rand::Rng;
                    rng.sample::<f64, _>(rand_distr::StandardNormal)
                });
                Ok(g.matmul(&g.transpose()).scaled(1.0 / *dim as f64).symmetrized())
            }
        }
    }
}

fn load_dense_matrix(path: &Path) -> Result<DenseMatrix> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct DenseFile {
        dim: usize,
        entries: Vec<f64>,
    }
    let text = std::fs::read_to_string(path)?;
    let parsed: DenseFile = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let m = DenseMatrix::from_vec(parsed.dim, parsed.dim, parsed.entries)?;
    if m.symmetry_error() > 1e-12 {
        return Err(Error::Config(format!(
            "{}: matrix must be symmetric",
            path.display()
        )));
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RotationKind {
    Identity,
    SkewExp,
    Randperm,
    Permutation,
    Haar,
}

/// Config-level description of a rotation; realized against the per-seed
/// skew generator and stream.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RotationDescriptor {
    pub kind: RotationKind,
    #[serde(default)]
    pub t: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub shape: Option<[usize; 3]>,
}

impl RotationDescriptor {
    pub fn identity() -> Self {
        RotationDescriptor {
            kind: RotationKind::Identity,
            t: None,
            seed: None,
            k: None,
            shape: None,
        }
    }

    pub fn skew_exp(t: f64) -> Self {
        RotationDescriptor {
            kind: RotationKind::SkewExp,
            t: Some(t),
            seed: None,
            k: None,
            shape: None,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            RotationKind::Identity => "identity",
            RotationKind::SkewExp => "skew_exp",
            RotationKind::Randperm => "randperm",
            RotationKind::Permutation => "permutation",
            RotationKind::Haar => "haar",
        }
    }

    /// The `t` recorded in result rows (0 for the identity).
    pub fn t_value(&self) -> Option<f64> {
        match self.kind {
            RotationKind::Identity => Some(0.0),
            RotationKind::SkewExp => Some(self.t.unwrap_or(0.0)),
            _ => None,
        }
    }

    /// Realizes the descriptor on `R^d`. `skew` is the shared generator for
    /// the `exp(tA)` family; `stream` seeds the sampled variants unless the
    /// descriptor pins its own `seed`.
    pub fn realize(
        &self,
        d: usize,
        skew: &DenseMatrix,
        stream: RngStream,
    ) -> Result<RotationSpec> {
        let stream = match self.seed {
            Some(s) => RngStream::root(s),
            None => stream,
        };
        match self.kind {
            RotationKind::Identity => Ok(RotationSpec::identity(d)),
            RotationKind::SkewExp => RotationSpec::skew_exp(skew, self.t.unwrap_or(0.0)),
            RotationKind::Randperm => {
                let k = self.k.unwrap_or(1);
                let shape = self
                    .shape
                    .ok_or_else(|| Error::Config("randperm rotation needs a shape".into()))?;
                randperm_compose(k, d, (shape[0], shape[1], shape[2]), stream)
            }
            RotationKind::Permutation => {
                use rand::seq::SliceRandom;
                let mut perm: Vec<usize> = (0..d).collect();
                perm.shuffle(&mut stream.rng());
                RotationSpec::permutation(perm)
            }
            RotationKind::Haar => RotationSpec::explicit(random_orthogonal(d, stream)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Adam,
    Adasgd,
    Signgd,
    Rmsprop,
    Sgd,
    Blockwise,
}

/// One optimizer configuration in the grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerCell {
    pub algo: OptimizerKind,
    #[serde(default)]
    pub beta1: f64,
    #[serde(default)]
    pub beta2: f64,
    #[serde(default)]
    pub eps: f64,
    #[serde(default)]
    pub v0: f64,
    #[serde(default = "default_momentum")]
    pub momentum: f64,
    #[serde(default)]
    pub blocks: Option<Vec<usize>>,
}

fn default_momentum() -> f64 {
    0.9
}

impl OptimizerCell {
    pub fn new(algo: OptimizerKind, beta1: f64, beta2: f64) -> Self {
        OptimizerCell {
            algo,
            beta1,
            beta2,
            eps: 0.0,
            v0: 0.0,
            momentum: default_momentum(),
            blocks: None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self.algo {
            OptimizerKind::Adam => "adam",
            OptimizerKind::Adasgd => "adasgd",
            OptimizerKind::Signgd => "signgd",
            OptimizerKind::Rmsprop => "rmsprop",
            OptimizerKind::Sgd => "sgd",
            OptimizerKind::Blockwise => "blockwise",
        }
    }

    pub fn phi_label(&self) -> &'static str {
        match self.algo {
            OptimizerKind::Adam | OptimizerKind::Signgd | OptimizerKind::Rmsprop => "adam",
            OptimizerKind::Adasgd => "adasgd",
            OptimizerKind::Blockwise => "custom",
            OptimizerKind::Sgd => "none",
        }
    }

    /// Whether the optimizer is rotation-invariant (so the grid only needs
    /// to run it on the unrotated problem).
    pub fn rotation_invariant(&self) -> bool {
        matches!(self.algo, OptimizerKind::Adasgd | OptimizerKind::Sgd)
    }

    /// Hyperparameters as actually run (sign descent pins everything to 0).
    pub fn effective_betas(&self) -> (f64, f64) {
        match self.algo {
            OptimizerKind::Signgd => (0.0, 0.0),
            OptimizerKind::Rmsprop => (0.0, self.beta2),
            _ => (self.beta1, self.beta2),
        }
    }

    pub fn build_algo(&self, d: usize, eta: f64) -> Result<Algo> {
        let schedule = ScheduleSpec::constant(eta);
        let (beta1, beta2) = self.effective_betas();
        let algo = match self.algo {
            OptimizerKind::Sgd => Algo::Sgd {
                momentum: self.momentum,
                schedule,
            },
            _ => {
                let partition = match self.algo {
                    OptimizerKind::Adasgd => Partition::adasgd(d),
                    OptimizerKind::Blockwise => {
                        let sizes = self.blocks.as_ref().ok_or_else(|| {
                            Error::Config("blockwise optimizer needs blocks".into())
                        })?;
                        let partition = Partition::blocks(sizes)?;
                        if partition.dim() != d {
                            return Err(Error::Config(format!(
                                "blocks sum to {}, problem dimension is {d}",
                                partition.dim()
                            )));
                        }
                        partition
                    }
                    _ => Partition::adam(d),
                };
                let (epsilon, v0) = match self.algo {
                    OptimizerKind::Signgd => (0.0, 0.0),
                    _ => (self.eps, self.v0),
                };
                Algo::BlockwiseAdam {
                    partition,
                    config: OptimizerConfig {
                        beta1,
                        beta2,
                        epsilon,
                        v0,
                        schedule,
                    },
                }
            }
        };
        algo.validate()?;
        Ok(algo)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAlgo {
    Signgd,
    Rmsprop,
}

/// The whole experiment description. See the README for the schema.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Optional; when present it must match the subcommand.
    #[serde(default)]
    pub experiment: Option<ExperimentKind>,
    #[serde(default = "default_problem")]
    pub problem: ProblemSpec,
    #[serde(default = "default_rotation_grid")]
    pub rotations: Vec<RotationDescriptor>,
    #[serde(default = "default_optimizer_grid")]
    pub optimizers: Vec<OptimizerCell>,
    #[serde(default = "default_lr_grid")]
    pub lr_grid: Vec<f64>,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_n_probes")]
    pub n_probes: usize,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,

    // convergence_sweep
    #[serde(default = "default_t_grid")]
    pub t_grid: Vec<usize>,
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default = "default_sweep_algo")]
    pub sweep_algo: SweepAlgo,
    #[serde(default = "default_sweep_v0")]
    pub sweep_v0: f64,

    // invariance_suite
    #[serde(default = "default_invariance_checks")]
    pub invariance_checks: usize,
    #[serde(default = "default_invariance_dim_max")]
    pub invariance_dim_max: usize,

    // norm_estimate
    #[serde(default = "default_concentration_eps")]
    pub concentration_eps: f64,
    #[serde(default)]
    pub custom_blocks: Option<Vec<usize>>,

    // bound_check
    #[serde(default)]
    pub bound_inputs: Option<BoundInputs>,
}

fn default_problem() -> ProblemSpec {
    ProblemSpec::Table1Default
}

/// `t ∈ {0, 0.05, 0.2, 0.5, 1.0}`: identity through near-Haar.
fn default_rotation_grid() -> Vec<RotationDescriptor> {
    [0.0, 0.05, 0.2, 0.5, 1.0]
        .iter()
        .map(|&t| RotationDescriptor::skew_exp(t))
        .collect()
}

fn default_optimizer_grid() -> Vec<OptimizerCell> {
    vec![
        OptimizerCell::new(OptimizerKind::Adam, 0.0, 0.0),
        OptimizerCell::new(OptimizerKind::Adam, 0.9, 0.99),
        OptimizerCell::new(OptimizerKind::Adasgd, 0.0, 0.0),
        OptimizerCell::new(OptimizerKind::Adasgd, 0.9, 0.99),
    ]
}

/// 13 learning rates, geometric from 1e-4 to 4.0 (ratio ≈ 2.42).
pub fn default_lr_grid() -> Vec<f64> {
    let n = 13;
    let (lo, hi) = (1e-4_f64, 4.0_f64);
    let ratio = (hi / lo).powf(1.0 / (n - 1) as f64);
    let mut grid: Vec<f64> = (0..n).map(|i| lo * ratio.powi(i)).collect();
    grid[n as usize - 1] = hi;
    grid
}

fn default_steps() -> usize {
    100
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn default_n_probes() -> usize {
    50
}

fn default_t_grid() -> Vec<usize> {
    vec![64, 256, 1024, 4096]
}

fn default_sweep_algo() -> SweepAlgo {
    SweepAlgo::Signgd
}

fn default_sweep_v0() -> f64 {
    1.0
}

fn default_invariance_checks() -> usize {
    10
}

fn default_invariance_dim_max() -> usize {
    50
}

fn default_concentration_eps() -> f64 {
    0.3
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("empty config is valid")
    }
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Cross-field validation for the given experiment kind.
    pub fn validate(&self, kind: ExperimentKind) -> Result<()> {
        if let Some(declared) = self.experiment {
            if declared != kind {
                return Err(Error::Config(format!(
                    "config declares experiment '{}' but '{}' was requested",
                    declared.name(),
                    kind.name()
                )));
            }
        }
        if self.steps == 0 {
            return Err(Error::Config("steps must be ≥ 1".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds must be nonempty".into()));
        }
        if self.n_probes == 0 {
            return Err(Error::Config("n_probes must be ≥ 1".into()));
        }
        match kind {
            ExperimentKind::QuadraticTable => {
                if self.lr_grid.is_empty() {
                    return Err(Error::Config("lr_grid must be nonempty".into()));
                }
                if self.lr_grid.iter().any(|&lr| !(lr > 0.0) || !lr.is_finite()) {
                    return Err(Error::Config("lr_grid values must be positive".into()));
                }
                if self.rotations.is_empty() || self.optimizers.is_empty() {
                    return Err(Error::Config("rotation and optimizer grids must be nonempty".into()));
                }
            }
            ExperimentKind::ConvergenceSweep => {
                if self.t_grid.is_empty() || self.t_grid.iter().any(|&t| t == 0) {
                    return Err(Error::Config("t_grid must be nonempty with positive steps".into()));
                }
                if !(self.noise_sigma >= 0.0) || !self.noise_sigma.is_finite() {
                    return Err(Error::Config("noise_sigma must be ≥ 0".into()));
                }
            }
            ExperimentKind::InvarianceSuite => {
                if self.invariance_checks == 0 {
                    return Err(Error::Config("invariance_checks must be ≥ 1".into()));
                }
                if self.invariance_dim_max < 2 {
                    return Err(Error::Config("invariance_dim_max must be ≥ 2".into()));
                }
            }
            ExperimentKind::NormEstimate => {
                if !(self.concentration_eps > 0.0 && self.concentration_eps < 1.0) {
                    return Err(Error::Config("concentration_eps must lie in (0,1)".into()));
                }
            }
            ExperimentKind::BoundCheck => {
                if self.bound_inputs.is_none() {
                    return Err(Error::Config("bound_check needs bound_inputs".into()));
                }
            }
        }
        Ok(())
    }

    /// Per-seed initial iterate: i.i.d. standard normal coordinates.
    pub fn sample_x0(&self, d: usize, stream: RngStream) -> Vec<f64> {
        sample_gaussian_vector(d, stream)
    }
}
