//! Exact, small-scale evaluation machinery for partially observed models.
//!
//! This crate answers "what is the true value?" questions by enumeration
//! and linear algebra rather than by sampling, for models small enough to
//! afford it:
//!
//! * [`belief`] — Bayesian posterior over states given a history, with
//!   episode termination folded in.
//! * [`value`] — truncated history values `V(h)`, `Q(h,a)` and
//!   history-state values `V(h,s)`, `Q(h,s,a)` under tabular policies.
//! * [`reactive`] — infinite-horizon state values for memoryless policies by
//!   direct linear solve, refusing models where state values are not a
//!   well-defined object.
//! * [`timed`] — per-timestep state values `V_t(s)` under history-dependent
//!   behaviour, plus a brute-force trajectory-tree cross-check.
//! * [`bias`] — side-by-side reports of history / state / history-state
//!   value estimates and their gaps, including the two-state counterexample
//!   where the state-value bootstrap misses by exactly 1/6.
//! * [`gradient`] — exact truncated policy-loss gradients for softmax
//!   tabular policies, in both history-critic and history-state-critic
//!   bookkeeping.
//! * [`enumeration`] — forward sweep of realizable histories with their
//!   joint state weights.
//! * [`generators`] — seeded random models and policies for property tests.
//!
//! Every recursion charges an explicit node budget, so runaway calls fail
//! fast with [`OracleError::BudgetExceeded`] instead of hanging.

pub mod belief;
pub mod bias;
pub mod enumeration;
mod error;
pub mod generators;
pub mod gradient;
pub mod policy;
pub mod reactive;
pub mod timed;
pub mod value;

pub use belief::{
    belief_of_history, belief_of_history_with_terminals, belief_update,
    belief_update_with_terminals, predictive_observation, Belief,
};
pub use bias::{goodbad_contradiction, BiasReport};
pub use enumeration::{forward_histories, HistoryNode};
pub use error::{OracleError, Result};
pub use generators::{
    mdp_in_disguise, random_historyful_policy, random_pomdp, random_pomdp_sized,
    random_reactive_policy, random_softmax_policy, ObsGranularity,
};
pub use gradient::{GradientMode, GradientTable};
pub use policy::{DefaultRow, PolicyTracker, TabularPolicy};
pub use reactive::v_state_reactive;
pub use timed::v_timed_state_via_trajectories;
pub use value::{Horizon, Oracle, DEFAULT_BUDGET};
