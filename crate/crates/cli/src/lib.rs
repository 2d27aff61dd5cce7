#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` rejects NaN too
//! Experiment runner behind the `fclab` binary: JSON plans, figure presets,
//! CSV result tables and SVG plots.

pub mod config;
pub mod error;
pub mod plot;
pub mod presets;
pub mod run;
pub mod table;

pub use config::{ExperimentPlan, Grid, PlanKind, SnapshotPlan};
pub use error::CliError;
pub use run::{execute, run, RunOptions, RunSummary};
