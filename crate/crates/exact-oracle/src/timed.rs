//! Per-timestep state values under history-dependent behaviour.
//!
//! When a policy reads histories, states alone are not enough to predict
//! actions — but conditioning on the clock restores a usable object. Define
//!
//! ```text
//! κ_t(a|s) = Pr(A_t = a | S_t = s, episode running)
//! V_t(s)   = Σ_a κ_t(a|s) Q_t(s,a)
//! Q_t(s,a) = R(s,a) + γ E_{s'|s,a}[V_{t+1}(s')]
//! ```
//!
//! with the action kernel `κ_t` obtained by marginalizing the policy over
//! every history that can co-occur with `s` at time `t`. The backward
//! recursion is evaluated with a finite tail (values beyond the horizon are
//! zero), so results are comparable across implementations only at matched
//! truncation depths.
//!
//! Two independent routes compute the same quantity:
//!
//! * [`Oracle::timed_values`] propagates merged history nodes forward
//!   (collapsing onto last observations for reactive policies, which makes
//!   depth-hundreds sweeps on small models instantaneous), then runs the
//!   backward recursion on the induced time-inhomogeneous chain.
//! * [`v_timed_state_via_trajectories`] enumerates raw trajectory prefixes
//!   one path at a time with no merging and no belief bookkeeping, and feeds
//!   the resulting visit statistics through the same defining equations.
//!   It exists to cross-check the first route and costs exponential time.

use crate::error::{OracleError, Result};
use crate::policy::TabularPolicy;
use crate::value::{Horizon, Oracle};
use pomdp_core::{History, Pomdp, TerminalSpec};
use std::collections::HashMap;

/// Occupancy and joint action statistics for one timestep.
struct TimedLayer {
    /// `occ[s] = Pr(S_t = s, running)`.
    occ: Vec<f64>,
    /// `joint[s * n_actions + a] = Pr(S_t = s, A_t = a, running)`.
    joint: Vec<f64>,
}

#[derive(Hash, PartialEq, Eq)]
enum NodeKey {
    /// Reactive collapse: behaviour depends only on the last observation.
    Obs(Option<usize>),
    Hist(String),
}

impl<'a> Oracle<'a> {
    /// `V_t(s)` for every state, `None` where `Pr(S_t = s, running) = 0`.
    /// The backward recursion keeps `hz` reward terms past time `t`.
    pub fn timed_values(
        &self,
        policy: &TabularPolicy,
        t: usize,
        hz: Horizon,
    ) -> Result<Vec<Option<f64>>> {
        let layers = self.occupancy_layers(policy, t + hz.0)?;
        Ok(backward_values(self.pomdp(), self.terminals(), &layers, t, hz.0))
    }

    /// `V_t(s)`, or an error naming the unreachable pair.
    pub fn v_timed_state(
        &self,
        policy: &TabularPolicy,
        t: usize,
        s: usize,
        hz: Horizon,
    ) -> Result<f64> {
        self.pomdp().check_state(s)?;
        self.timed_values(policy, t, hz)?[s]
            .ok_or(OracleError::UnreachableTimedState { t, state: s })
    }

    /// Forward pass: statistics for layers `0..=upto`, merging histories
    /// that share a memo key (full key in general; last observation when the
    /// policy is reactive).
    fn occupancy_layers(&self, policy: &TabularPolicy, upto: usize) -> Result<Vec<TimedLayer>> {
        let pomdp = self.pomdp();
        let terminals = self.terminals();
        let n_states = pomdp.n_states();
        let n_actions = pomdp.n_actions();
        let collapse = policy.is_reactive();
        let key_of = |h: &History| -> NodeKey {
            if collapse {
                NodeKey::Obs(h.last_obs())
            } else {
                NodeKey::Hist(h.key())
            }
        };

        let mut created = 0usize;
        let charge = |count: &mut usize| -> Result<()> {
            *count += 1;
            if *count > self.budget() {
                return Err(OracleError::BudgetExceeded { budget: self.budget() });
            }
            Ok(())
        };

        // Representative history + merged joint weights per key.
        let mut nodes: HashMap<NodeKey, (History, Vec<f64>)> = HashMap::new();
        for (h, alpha) in self.initial_nodes() {
            if alpha.iter().sum::<f64>() == 0.0 {
                continue;
            }
            charge(&mut created)?;
            merge_node(&mut nodes, key_of(&h), h, alpha, n_states);
        }

        let mut layers = Vec::with_capacity(upto + 1);
        for _ in 0..=upto {
            // Snapshot statistics of the current layer.
            let mut occ = vec![0.0f64; n_states];
            let mut joint = vec![0.0f64; n_states * n_actions];
            for (h, alpha) in nodes.values() {
                let pi = policy.action_distribution(h);
                for (s, &w) in alpha.iter().enumerate() {
                    if w == 0.0 {
                        continue;
                    }
                    occ[s] += w;
                    for a in 0..n_actions {
                        joint[s * n_actions + a] += w * pi.prob(a);
                    }
                }
            }
            layers.push(TimedLayer { occ, joint });
            if layers.len() == upto + 1 {
                break;
            }

            // Advance every node one step.
            let mut next: HashMap<NodeKey, (History, Vec<f64>)> = HashMap::new();
            for (h, alpha) in nodes.values() {
                let pi = policy.action_distribution(h);
                for a in 0..n_actions {
                    let pa = pi.prob(a);
                    if pa == 0.0 {
                        continue;
                    }
                    let mut per_obs = vec![vec![0.0f64; n_states]; pomdp.n_obs()];
                    for (s, &w) in alpha.iter().enumerate() {
                        if w == 0.0
                            || terminals.is_terminal_state(s)
                            || terminals.is_terminal_step(s, a)
                        {
                            continue;
                        }
                        let row = pomdp.transition_row(s, a);
                        for s2 in row.support() {
                            if terminals.is_terminal_state(s2) {
                                continue;
                            }
                            let wt = w * pa * row.prob(s2);
                            let obs = pomdp.obs_row(s, a, s2);
                            for o in obs.support() {
                                per_obs[o][s2] += wt * obs.prob(o);
                            }
                        }
                    }
                    for (o, child) in per_obs.into_iter().enumerate() {
                        if child.iter().sum::<f64>() == 0.0 {
                            continue;
                        }
                        charge(&mut created)?;
                        let hao = h.extended(a, o);
                        merge_node(&mut next, key_of(&hao), hao, child, n_states);
                    }
                }
            }
            nodes = next;
        }
        Ok(layers)
    }
}

fn merge_node(
    nodes: &mut HashMap<NodeKey, (History, Vec<f64>)>,
    key: NodeKey,
    history: History,
    alpha: Vec<f64>,
    n_states: usize,
) {
    let entry = nodes.entry(key).or_insert_with(|| (history, vec![0.0; n_states]));
    for (acc, w) in entry.1.iter_mut().zip(alpha) {
        *acc += w;
    }
}

/// Backward recursion over the induced time-inhomogeneous chain.
fn backward_values(
    pomdp: &Pomdp,
    terminals: &TerminalSpec,
    layers: &[TimedLayer],
    t: usize,
    hz: usize,
) -> Vec<Option<f64>> {
    let n_states = pomdp.n_states();
    let n_actions = pomdp.n_actions();
    let gamma = pomdp.gamma();
    let mut v_next = vec![0.0f64; n_states];
    for k in (t..t + hz).rev() {
        let layer = &layers[k];
        let mut v_k = vec![0.0f64; n_states];
        for s in 0..n_states {
            if layer.occ[s] == 0.0 {
                continue;
            }
            for a in 0..n_actions {
                let kappa = layer.joint[s * n_actions + a] / layer.occ[s];
                if kappa == 0.0 {
                    continue;
                }
                let mut q = pomdp.reward(s, a);
                if !terminals.is_terminal_step(s, a) {
                    let row = pomdp.transition_row(s, a);
                    let mut cont = 0.0;
                    for s2 in row.support() {
                        if !terminals.is_terminal_state(s2) {
                            cont += row.prob(s2) * v_next[s2];
                        }
                    }
                    q += gamma * cont;
                }
                v_k[s] += kappa * q;
            }
        }
        v_next = v_k;
    }
    (0..n_states)
        .map(|s| if layers[t].occ[s] > 0.0 { Some(v_next[s]) } else { None })
        .collect()
}

/// The same `V_t(s)`, computed from scratch by enumerating every trajectory
/// prefix as its own path — no node merging, no belief machinery. Costs
/// exponential time; meant for cross-checking on small models.
pub fn v_timed_state_via_trajectories(
    pomdp: &Pomdp,
    terminals: &TerminalSpec,
    policy: &TabularPolicy,
    t: usize,
    s: usize,
    hz: Horizon,
    budget: usize,
) -> Result<f64> {
    pomdp.check_state(s)?;
    let upto = t + hz.0;
    let n_states = pomdp.n_states();
    let n_actions = pomdp.n_actions();

    let mut occ = vec![vec![0.0f64; n_states]; upto + 1];
    let mut joint = vec![vec![0.0f64; n_states * n_actions]; upto + 1];
    let mut visited = 0usize;

    struct Walk<'w> {
        pomdp: &'w Pomdp,
        terminals: &'w TerminalSpec,
        policy: &'w TabularPolicy,
        upto: usize,
        budget: usize,
    }
    impl<'w> Walk<'w> {
        #[allow(clippy::too_many_arguments)]
        fn go(
            &self,
            h: &History,
            state: usize,
            p: f64,
            k: usize,
            occ: &mut [Vec<f64>],
            joint: &mut [Vec<f64>],
            visited: &mut usize,
        ) -> Result<()> {
            *visited += 1;
            if *visited > self.budget {
                return Err(OracleError::BudgetExceeded { budget: self.budget });
            }
            occ[k][state] += p;
            if k == self.upto {
                return Ok(());
            }
            let pi = self.policy.action_distribution(h);
            let n_actions = self.pomdp.n_actions();
            for a in 0..n_actions {
                let pa = pi.prob(a);
                if pa == 0.0 {
                    continue;
                }
                joint[k][state * n_actions + a] += p * pa;
                if self.terminals.is_terminal_step(state, a) {
                    continue;
                }
                let row = self.pomdp.transition_row(state, a);
                for s2 in row.support() {
                    if self.terminals.is_terminal_state(s2) {
                        continue;
                    }
                    let obs = self.pomdp.obs_row(state, a, s2);
                    for o in obs.support() {
                        let hao = h.extended(a, o);
                        self.go(
                            &hao,
                            s2,
                            p * pa * row.prob(s2) * obs.prob(o),
                            k + 1,
                            occ,
                            joint,
                            visited,
                        )?;
                    }
                }
            }
            Ok(())
        }
    }

    let walk = Walk { pomdp, terminals, policy, upto, budget };
    let init = pomdp.initial();
    for s0 in 0..n_states {
        let p0 = init.prob(s0);
        if p0 == 0.0 || terminals.is_terminal_state(s0) {
            continue;
        }
        match pomdp.initial_obs() {
            Some(rows) => {
                for o0 in rows[s0].support() {
                    let h = History::from_initial_obs(o0);
                    walk.go(&h, s0, p0 * rows[s0].prob(o0), 0, &mut occ, &mut joint, &mut visited)?;
                }
            }
            None => {
                walk.go(&History::empty(), s0, p0, 0, &mut occ, &mut joint, &mut visited)?;
            }
        }
    }

    // Identical defining equations, fed by the raw-path statistics.
    let gamma = pomdp.gamma();
    let mut v_next = vec![0.0f64; n_states];
    for k in (t..upto).rev() {
        let mut v_k = vec![0.0f64; n_states];
        for st in 0..n_states {
            if occ[k][st] == 0.0 {
                continue;
            }
            for a in 0..n_actions {
                let kappa = joint[k][st * n_actions + a] / occ[k][st];
                if kappa == 0.0 {
                    continue;
                }
                let mut q = pomdp.reward(st, a);
                if !terminals.is_terminal_step(st, a) {
                    let row = pomdp.transition_row(st, a);
                    let mut cont = 0.0;
                    for s2 in row.support() {
                        if !terminals.is_terminal_state(s2) {
                            cont += row.prob(s2) * v_next[s2];
                        }
                    }
                    q += gamma * cont;
                }
                v_k[st] += kappa * q;
            }
        }
        v_next = v_k;
    }
    if occ[t][s] == 0.0 {
        return Err(OracleError::UnreachableTimedState { t, state: s });
    }
    Ok(v_next[s])
}
