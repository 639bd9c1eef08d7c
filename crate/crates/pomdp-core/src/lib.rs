//! Tabular POMDP primitives: distributions, histories, trajectories, model
//! validation, and episode simulation.
//!
//! A `Pomdp` couples transition, observation, and reward tables with a
//! discount factor and an initial state distribution. Everything is immutable
//! after construction; simulation draws randomness from caller-owned RNG
//! streams (see [`seeding`]) so that runs are reproducible and parallel runs
//! never contend.

mod dist;
mod error;
mod history;
mod pomdp;
pub mod seeding;
mod sim;
mod trajectory;

pub use dist::{DiscreteDistribution, SUM_TOLERANCE};
pub use error::Error;
pub use history::History;
pub use pomdp::{validate, Diagnostic, ObservationModel, Pomdp, TerminalSpec};
pub use sim::{sample_episode, step, Policy, StepOutcome, UniformPolicy};
pub use trajectory::Trajectory;

/// Crate result alias.
pub type Result<T> = std::result::Result<T, Error>;
