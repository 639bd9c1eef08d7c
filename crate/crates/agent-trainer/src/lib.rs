//! Recurrent actor-critic agents with interchangeable critic conditioning.
//!
//! The actor is fixed: a GRU over the action–observation stream feeding a
//! softmax head. What varies is the critic's input — the full history, the
//! hidden environment state, both, a belief-sampled state stand-in, or a
//! truncated history window — and that single choice is the experimental
//! variable everything here is built to isolate.
//!
//! The crate splits into:
//!
//! * [`nets`] — the parameter containers, encoders, and checkpoint format;
//! * [`sampling`] — driving episodes with the network policy;
//! * [`td`] / [`update`] — TD errors against a frozen critic copy, and the
//!   per-batch gradient step;
//! * [`train`] — the outer loop with entropy-weight scheduling, learning
//!   curves, and target refreshes;
//! * [`probe`] — reading a trained critic at chosen (history, state) pairs;
//! * [`estimator`] — sampled policy gradients with critics pinned to exact
//!   values, for calibration against the closed-form gradient.

mod error;
pub mod estimator;
pub mod nets;
pub mod probe;
pub mod sampling;
pub mod td;
pub mod train;
pub mod update;

pub use error::{Result, TrainError};
pub use estimator::{
    exact_net_policy_gradient, sampled_net_policy_gradient, sampled_policy_gradient,
    Calibration, GradientStats, NetGradientStats, OracleValues, RunningStat,
};
pub use nets::{AgentNets, CriticKind, NetDims};
pub use probe::probe_critic;
pub use sampling::{sample_batch, NetPolicy};
pub use td::{td_errors, td_from_values};
pub use train::{
    negentropy_schedule, train, CurvePoint, LearningCurve, TrainConfig, TrainOutcome,
    ENTROPY_DECAY_HORIZON,
};
pub use update::{update, UpdateStats};
