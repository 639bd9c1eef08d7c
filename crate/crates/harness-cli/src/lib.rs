//! Batch experiment harness for the partially-observed actor-critic stack:
//! multi-seed training runs with manifests and aggregate curves, grid search
//! with a ranked report, analytical verification commands, critic probing,
//! and plot-ready CSV export. The `pomdp-lab` binary is a thin veneer over
//! this library.

pub mod config;
pub mod csvio;
pub mod envs;
mod error;
pub mod runs;
pub mod verify;

pub use config::ConfigDoc;
pub use envs::{default_cell, lambda0_grid, resolve_env, GOODBAD_GAMMA, KNOWN_ENVS, RATE_GRID};
pub use error::{HarnessError, Result};
pub use runs::{
    grid_search, run_experiment, AggregateCurve, CellResult, ExperimentSpec, GridReport,
    GridSearchSpec, RunReport, SeedOutcome, BUCKET_WIDTH,
};
pub use verify::{run_verify, CheckName, VerifyReport};
