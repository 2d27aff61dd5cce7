#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` rejects NaN too
//! Monte Carlo probes of false confidence in Bayesian posteriors.
//!
//! For a model with true parameter `ψ₀`, a probe estimates how often, over
//! data drawn under `ψ₀`, the posterior gives at most `α` belief to the ball
//! `[ψ₀ - ε, ψ₀ + ε]`, and therefore at least `1 - α` to a set that does not
//! contain the truth.

pub mod engine;
pub mod error;
pub mod models;
pub mod numerics;
pub mod registry;
pub mod sampling;

pub use engine::{
    BeliefModel, ContourGrid, CriticalRadius, Engine, EpsilonBall, EpsilonSolution, Posterior, ProbeResult,
    RadiusSample, Snapshot,
};
pub use error::{Error, Result};
pub use registry::{ModelFactory, ModelParams, ModelRegistry, ModelSetup};
pub use sampling::{SeedSpec, SufficientStat};
