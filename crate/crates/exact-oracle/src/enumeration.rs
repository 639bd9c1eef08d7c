//! Forward enumeration of realizable histories.
//!
//! Walks the episode process breadth-first, carrying for every history `h`
//! of length `t` the vector `α_h(s) = Pr(H_t = h, S_t = s, episode running)`.
//! Realizability is exactly `Σ_s α_h(s) > 0`; the normalized vector is the
//! posterior belief. Zero-probability branches are pruned as they appear, so
//! the layer lists contain realizable histories only.

use crate::error::{OracleError, Result};
use crate::policy::TabularPolicy;
use pomdp_core::{History, Pomdp, TerminalSpec};

/// A realizable history together with its joint state weights.
pub struct HistoryNode {
    pub history: History,
    /// `alpha[s] = Pr(history, S=s, running)`; sums to the probability that
    /// the history occurs and the episode is still live.
    pub alpha: Vec<f64>,
}

impl HistoryNode {
    /// Total probability of reaching this node with the episode running.
    pub fn mass(&self) -> f64 {
        self.alpha.iter().sum()
    }

    /// Normalized posterior over states.
    pub fn belief(&self) -> Vec<f64> {
        let z = self.mass();
        self.alpha.iter().map(|w| w / z).collect()
    }
}

/// Layers `0..=max_len` of realizable histories under `policy`, each node
/// paired with its joint weights. Layer 0 holds the empty history, or one
/// node per possible initial observation when the model announces one.
pub fn forward_histories(
    pomdp: &Pomdp,
    terminals: &TerminalSpec,
    policy: &TabularPolicy,
    max_len: usize,
    budget: usize,
) -> Result<Vec<Vec<HistoryNode>>> {
    let n_states = pomdp.n_states();
    let masked_init = |s: usize| -> f64 {
        if terminals.is_terminal_state(s) {
            0.0
        } else {
            pomdp.initial().prob(s)
        }
    };

    let mut created = 0usize;
    let charge = |count: &mut usize| -> Result<()> {
        *count += 1;
        if *count > budget {
            return Err(OracleError::BudgetExceeded { budget });
        }
        Ok(())
    };

    let roots: Vec<HistoryNode> = match pomdp.initial_obs() {
        Some(rows) => (0..pomdp.n_obs())
            .filter_map(|o0| {
                let alpha: Vec<f64> =
                    (0..n_states).map(|s| masked_init(s) * rows[s].prob(o0)).collect();
                if alpha.iter().sum::<f64>() > 0.0 {
                    Some(HistoryNode { history: History::from_initial_obs(o0), alpha })
                } else {
                    None
                }
            })
            .collect(),
        None => vec![HistoryNode {
            history: History::empty(),
            alpha: (0..n_states).map(masked_init).collect(),
        }],
    };
    for _ in &roots {
        charge(&mut created)?;
    }

    let mut layers = vec![roots];
    for _ in 0..max_len {
        let prev = layers.last().unwrap();
        let mut next = Vec::new();
        for node in prev {
            let pi = policy.action_distribution(&node.history);
            for a in 0..pomdp.n_actions() {
                let pa = pi.prob(a);
                if pa == 0.0 {
                    continue;
                }
                // Joint successor weights, one bucket per observation.
                let mut per_obs = vec![vec![0.0f64; n_states]; pomdp.n_obs()];
                for (s, &w) in node.alpha.iter().enumerate() {
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
                for (o, alpha) in per_obs.into_iter().enumerate() {
                    if alpha.iter().sum::<f64>() > 0.0 {
                        charge(&mut created)?;
                        next.push(HistoryNode {
                            history: node.history.extended(a, o),
                            alpha,
                        });
                    }
                }
            }
        }
        layers.push(next);
    }
    Ok(layers)
}

#[cfg(test)]
mod tests {
    use super::*;
    use env_suite::build_goodbad;
    use pomdp_core::DiscreteDistribution;

    fn mirror_policy() -> TabularPolicy {
        TabularPolicy::reactive(vec![
            DiscreteDistribution::delta(0, 2),
            DiscreteDistribution::delta(1, 2),
        ])
    }

    #[test]
    fn layer_masses_stay_normalized_without_terminals() {
        let p = build_goodbad(0.9).unwrap();
        let none = TerminalSpec::none();
        let layers = forward_histories(&p, &none, &mirror_policy(), 3, 10_000).unwrap();
        assert_eq!(layers.len(), 4);
        for layer in &layers {
            let total: f64 = layer.iter().map(HistoryNode::mass).sum();
            assert!((total - 1.0).abs() < 1e-12, "layer mass {total}");
        }
    }

    #[test]
    fn impossible_branches_are_pruned() {
        let p = build_goodbad(0.9).unwrap();
        let none = TerminalSpec::none();
        let layers = forward_histories(&p, &none, &mirror_policy(), 2, 10_000).unwrap();
        // From the good state the observation is surely `g`, so after an
        // initial `b` the mirror policy plays `b` forever and only the bad
        // state's noisy coin branches. Roots: two observations.
        assert_eq!(layers[0].len(), 2);
        for node in &layers[1] {
            // `g` then action g can emit both; `b` then action b can emit both:
            // 2 roots × ≤2 observations, all with the pinned action.
            let steps = node.history.steps();
            assert_eq!(steps.len(), 1);
            let first_obs = node.history.initial_obs().unwrap();
            assert_eq!(steps[0].0, first_obs, "mirror policy repeats its observation");
        }
        // Good-root children keep the full posterior bookkeeping: after (g, a=g, o=b)
        // the good state is impossible but the node survives with bad-state mass.
        let gb = layers[1]
            .iter()
            .find(|n| n.history.initial_obs() == Some(0) && n.history.steps()[0].1 == 1)
            .expect("g then b is realizable");
        assert_eq!(gb.alpha[0], 0.0);
        assert!(gb.alpha[1] > 0.0);
    }

    #[test]
    fn node_budget_is_enforced() {
        let p = build_goodbad(0.9).unwrap();
        let none = TerminalSpec::none();
        match forward_histories(&p, &none, &mirror_policy(), 6, 5) {
            Err(OracleError::BudgetExceeded { budget: 5 }) => {}
            other => panic!("expected budget error, got {:?}", other.map(|l| l.len())),
        }
    }
}
