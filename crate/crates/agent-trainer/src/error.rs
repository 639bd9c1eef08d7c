use crate::train::LearningCurve;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training configuration: {reason}")]
    InvalidConfig { reason: String },

    #[error("truncated critics keep the last 2 or 4 pairs, not {k}")]
    UnsupportedTruncation { k: usize },

    #[error("the {kind} critic conditions on the state, but no state was supplied")]
    StateRequired { kind: &'static str },

    #[error("state {state} is out of range for a model with {n_states} states")]
    StateOutOfRange { state: usize, n_states: usize },

    #[error("episode produced no steps; the initial state is already terminal")]
    EmptyEpisode,

    #[error("training diverged at timestep {timestep}: {detail}")]
    Diverged {
        timestep: u64,
        detail: String,
        /// Learning progress recorded up to the failure, so a crashed run
        /// still yields its partial curve.
        curve: Box<LearningCurve>,
    },

    #[error("probe ({history}, s={state}) is not realizable: {reason}")]
    UnrealizableProbe {
        history: String,
        state: usize,
        reason: String,
    },

    #[error("checkpoint does not describe an agent: {reason}")]
    MalformedAgentCheckpoint { reason: String },

    #[error(transparent)]
    Nn(#[from] autodiff_nn::NnError),

    #[error(transparent)]
    Oracle(#[from] exact_oracle::OracleError),

    #[error(transparent)]
    Model(#[from] pomdp_core::Error),
}

pub type Result<T> = std::result::Result<T, TrainError>;

impl TrainError {
    /// Attaches run context to a divergence raised inside a single update,
    /// which knows its losses but not the surrounding curve.
    pub(crate) fn with_run_context(self, timestep: u64, curve: &LearningCurve) -> Self {
        match self {
            TrainError::Diverged { detail, .. } => TrainError::Diverged {
                timestep,
                detail,
                curve: Box::new(curve.clone()),
            },
            other => other,
        }
    }
}
