//! A desk-scale laboratory for blockwise adaptive gradient methods.
//!
//! The crate implements the blockwise Adam family (Adam, AdaSGD, SignGD,
//! RMSProp, plus an SGD baseline), quadratic loss oracles with rotation and
//! noise wrappers, orthogonal reparameterizations, randomized Hessian-norm
//! probes, convergence-bound evaluation, and an experiment harness that
//! drives them from JSON configs into CSV/JSON results.
//!
//! Entry points:
//!
//! * [`optim::run`] — execute one optimizer trajectory and record metrics.
//! * [`rotation::invariance_check`] — compare a trajectory against its
//!   rotated counterpart.
//! * [`probes::estimate_norm11`] / [`probes::spectral_norm`] — Hessian
//!   geometry measurements from matrix-vector products only.
//! * [`probes::bound_report`] — evaluate the theoretical rate bounds.
//! * [`harness`] — full experiments (`table1`, `sweep`, `invariance`,
//!   `norms`) behind the `optlab` CLI.

pub mod error;
pub mod harness;
pub mod linalg;
pub mod losses;
pub mod optim;
pub mod probes;
pub mod rng;
pub mod rotation;

pub use error::{Error, Result};
