use thiserror::Error;

#[derive(Debug, Error)]
pub enum OracleError {
    /// Bayes update conditioned on an (action, observation) pair whose
    /// predictive probability under the current belief is zero.
    #[error("observation {obs} after action {action} has zero predictive probability")]
    UnrealizableObservation { action: usize, obs: usize },

    #[error("history `{history}` is unrealizable: {reason}")]
    UnrealizableHistory { history: String, reason: String },

    /// A `(history, state)` query where the history's belief puts no mass on
    /// the state.
    #[error("state {state} has zero posterior probability after history `{history}`")]
    UnrealizablePair { history: String, state: usize },

    /// A state value was requested in the regime where it does not exist:
    /// the observation table depends on more than the current state, so
    /// `Pr(a|s)` — and with it `V(s)` — is not well-defined.
    #[error("state values are ill-defined here: {reason}")]
    IllDefinedStateValue { reason: String },

    #[error("expected a {expected} policy, got a {got} policy")]
    WrongPolicyKind {
        expected: &'static str,
        got: &'static str,
    },

    #[error("no history of length {t} reaches state {state} with positive probability")]
    UnreachableTimedState { t: usize, state: usize },

    /// A sweep over histories of length up to `max_len` was asked to compare
    /// values at an episode horizon that leaves the deepest layer with a
    /// depth-0 (identically zero) evaluation.
    #[error("horizon {horizon} leaves no lookahead for histories of length {max_len}")]
    HorizonTooShallow { max_len: usize, horizon: usize },

    #[error("enumeration budget of {budget} nodes exceeded")]
    BudgetExceeded { budget: usize },

    #[error("linear system is numerically singular at pivot {pivot}")]
    SingularSystem { pivot: usize },

    #[error(transparent)]
    Model(#[from] pomdp_core::Error),

    #[error(transparent)]
    Environment(#[from] env_suite::EnvError),
}

pub type Result<T> = std::result::Result<T, OracleError>;
