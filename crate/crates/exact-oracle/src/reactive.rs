//! Infinite-horizon state values under reactive (memoryless) policies.
//!
//! When the policy reads only the latest observation and the observation
//! depends only on the current state, the pair (state, policy) induces a
//! plain Markov chain on states. The value vector then solves the linear
//! system
//!
//! ```text
//! (I − γ P_π) V = r_π,   P_π(s,s') = Σ_a Pr(a|s) T(s'|s,a),
//!                        r_π(s)    = Σ_a Pr(a|s) R(s,a),
//!                        Pr(a|s)   = Σ_o O(o|s) π(a;o).
//! ```
//!
//! A state value `V(s)` simply does not exist when the observation channel
//! conditions on the action or the predecessor: different histories reaching
//! the same state can then act differently forever, and no single number
//! summarizes the state. That case is rejected rather than averaged away.
//! Observation models stored with richer indexing are still accepted when
//! their rows are literally identical across the extra indices — the
//! representation is general but the channel itself is state-only.
//!
//! Terminal states are pinned to `V = 0` (episodes end on arrival) and
//! terminal `(s,a)` steps keep their reward but lose their continuation.

use crate::error::{OracleError, Result};
use crate::policy::TabularPolicy;
use crate::value::Oracle;
use pomdp_core::{DiscreteDistribution, ObservationModel, Pomdp, TerminalSpec};

/// Per-state observation rows, provided the channel is genuinely state-only.
pub(crate) fn state_only_obs_rows<'p>(
    pomdp: &'p Pomdp,
) -> Result<Vec<&'p DiscreteDistribution>> {
    let n_states = pomdp.n_states();
    let n_actions = pomdp.n_actions();
    match pomdp.observation_model() {
        ObservationModel::ByNext(_) => {
            Ok((0..n_states).map(|s2| pomdp.obs_row(0, 0, s2)).collect())
        }
        ObservationModel::ByActionNext(_) => {
            let rows: Vec<_> = (0..n_states).map(|s2| pomdp.obs_row(0, 0, s2)).collect();
            for s2 in 0..n_states {
                for a in 1..n_actions {
                    if pomdp.obs_row(0, a, s2).probs() != rows[s2].probs() {
                        return Err(OracleError::IllDefinedStateValue {
                            reason: format!(
                                "observation for state {s2} depends on the action taken"
                            ),
                        });
                    }
                }
            }
            Ok(rows)
        }
        ObservationModel::Full(_) => {
            let rows: Vec<_> = (0..n_states).map(|s2| pomdp.obs_row(0, 0, s2)).collect();
            for s2 in 0..n_states {
                for s in 0..n_states {
                    for a in 0..n_actions {
                        if pomdp.obs_row(s, a, s2).probs() != rows[s2].probs() {
                            return Err(OracleError::IllDefinedStateValue {
                                reason: format!(
                                    "observation for state {s2} depends on how it was entered"
                                ),
                            });
                        }
                    }
                }
            }
            Ok(rows)
        }
    }
}

/// Exact `V(s)` for every state under a reactive policy, by linear solve.
pub fn v_state_reactive(
    pomdp: &Pomdp,
    terminals: &TerminalSpec,
    policy: &TabularPolicy,
) -> Result<Vec<f64>> {
    if !policy.is_reactive() {
        return Err(OracleError::WrongPolicyKind {
            expected: "reactive",
            got: policy.kind_name(),
        });
    }
    let obs_rows = state_only_obs_rows(pomdp)?;

    let n_states = pomdp.n_states();
    let n_actions = pomdp.n_actions();
    let gamma = pomdp.gamma();

    // Action marginals per state: Pr(a|s) = Σ_o O(o|s) π(a;o).
    let mut act = vec![vec![0.0f64; n_actions]; n_states];
    for s in 0..n_states {
        for o in obs_rows[s].support() {
            let po = obs_rows[s].prob(o);
            let pi = policy.reactive_row(o);
            for a in 0..n_actions {
                act[s][a] += po * pi.prob(a);
            }
        }
    }

    // Assemble (I − γ P_π) V = r_π with terminal states pinned to zero.
    let mut a_mat = vec![vec![0.0f64; n_states]; n_states];
    let mut rhs = vec![0.0f64; n_states];
    for s in 0..n_states {
        if terminals.is_terminal_state(s) {
            a_mat[s][s] = 1.0;
            continue;
        }
        a_mat[s][s] = 1.0;
        for a in 0..n_actions {
            let pa = act[s][a];
            if pa == 0.0 {
                continue;
            }
            rhs[s] += pa * pomdp.reward(s, a);
            if terminals.is_terminal_step(s, a) {
                continue;
            }
            let row = pomdp.transition_row(s, a);
            for s2 in row.support() {
                a_mat[s][s2] -= gamma * pa * row.prob(s2);
            }
        }
    }
    solve_dense(a_mat, rhs)
}

impl<'a> Oracle<'a> {
    /// See [`v_state_reactive`]; uses this oracle's termination rules.
    pub fn v_state_reactive(&self, policy: &TabularPolicy) -> Result<Vec<f64>> {
        v_state_reactive(self.pomdp(), self.terminals(), policy)
    }
}

/// Gaussian elimination with partial pivoting; systems here are tiny.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let (pivot_row, pivot_abs) = (col..n)
            .map(|r| (r, a[r][col].abs()))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        if pivot_abs < 1e-12 {
            return Err(OracleError::SingularSystem { pivot: col });
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0f64; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for c in row + 1..n {
            acc -= a[row][c] * x[c];
        }
        x[row] = acc / a[row][row];
    }
    Ok(x)
}
