//! Equity-aware reinforcement learning harness for municipal complaint
//! triage.
//!
//! The crate provides:
//!
//! - seeded synthetic complaint-stream environments with heterogeneous
//!   reporting propensity and missing-not-at-random outcome recording,
//! - the duplicate-report propensity estimator and incident-count
//!   correction that de-bias equity denominators,
//! - a scalarized multi-objective reward with four equity variants,
//! - four learning algorithms (tabular Q, DQN, REINFORCE with learned
//!   baseline, behavioral cloning) plus heuristic baselines,
//! - the calibration pipeline with its demographic audit gate,
//! - exact-Shapley and permutation feature attribution for policy audits,
//! - Pareto sweeps, price-of-equity measurement, and a closed-loop
//!   feedback simulation with mitigations.
//!
//! Everything is deterministic given a root seed: all randomness flows
//! through named [`rng::SeedTree`] substreams.

pub mod correction;
pub mod domain;
pub mod error;
pub mod reward;
pub mod rng;

pub use error::{Error, Result};
