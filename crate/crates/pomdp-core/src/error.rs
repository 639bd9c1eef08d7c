use thiserror::Error;

/// Errors raised by model construction and simulation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("distribution entry {index} is negative or non-finite: {value}")]
    NegativeWeight { index: usize, value: f64 },

    #[error("distribution weights sum to {sum:e}, expected 1 within {tol:e}")]
    WeightSum { sum: f64, tol: f64 },

    #[error("distribution must have at least one entry")]
    EmptyDistribution,

    #[error("state index {state} out of range ({n_states} states)")]
    StateOutOfRange { state: usize, n_states: usize },

    #[error("action index {action} out of range ({n_actions} actions)")]
    ActionOutOfRange { action: usize, n_actions: usize },

    #[error("observation index {obs} out of range ({n_obs} observations)")]
    ObservationOutOfRange { obs: usize, n_obs: usize },

    #[error("{table} table has {got} rows, expected {expected}")]
    TableShape {
        table: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("{table} row has support size {got}, expected {expected}")]
    RowLength {
        table: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("discount factor {gamma} is outside [0, 1)")]
    BadGamma { gamma: f64 },

    #[error("policy produced an invalid action distribution: {0}")]
    PolicyContract(String),

    #[error("episode cap must be at least 1")]
    ZeroMaxSteps,

    #[error("trajectory shape is inconsistent: {0}")]
    TrajectoryShape(String),
}
