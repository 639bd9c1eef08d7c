//! One-step temporal-difference errors with kind-appropriate critic inputs.
//!
//! For step `t` of an episode, the bootstrap target is
//!
//! ```text
//! y_t = r_t + γ · v̂⁻(input at t+1) · (1 − done_t)
//! δ_t = y_t − v̂(input at t)
//! ```
//!
//! where `v̂⁻` is the frozen target critic and `done_t` marks a true terminal
//! transition. Episodes stopped by the step cap are a training artifact, not
//! environment semantics, so they bootstrap from the target critic like any
//! interior step. No gradient ever flows through `y_t`: the critic loss
//! treats it as a constant.

use crate::error::Result;
use crate::nets::AgentNets;
use autodiff_nn::Tape;
use exact_oracle::{belief_of_history_with_terminals, belief_update_with_terminals};
use pomdp_core::{Pomdp, TerminalSpec, Trajectory};
use rand::Rng;

/// `δ_t = r_t + γ·v_next[t] − v_cur[t]`, with `v_next` already masked to zero
/// at true terminals.
pub fn td_from_values(rewards: &[f64], gamma: f64, v_cur: &[f64], v_next: &[f64]) -> Vec<f64> {
    debug_assert_eq!(rewards.len(), v_cur.len());
    debug_assert_eq!(rewards.len(), v_next.len());
    rewards
        .iter()
        .zip(v_cur)
        .zip(v_next)
        .map(|((&r, &cur), &next)| r + gamma * next - cur)
        .collect()
}

/// The state fed to the critic at each point `t = 0 ..= T` of an episode:
/// the simulator's state for kinds that may see it, a fresh belief sample
/// per point for the belief-sampled kind, and nothing otherwise.
pub(crate) fn critic_state_inputs(
    nets: &AgentNets,
    pomdp: &Pomdp,
    terminals: &TerminalSpec,
    traj: &Trajectory,
    rng: &mut impl Rng,
) -> Result<Option<Vec<usize>>> {
    use crate::nets::CriticKind;
    match nets.kind() {
        CriticKind::State | CriticKind::HistoryState => Ok(Some(traj.states.clone())),
        CriticKind::HistoryStateSampled => {
            let mut b = belief_of_history_with_terminals(pomdp, terminals, &traj.history_prefix(0))?;
            let mut out = Vec::with_capacity(traj.len() + 1);
            out.push(b.sample(rng));
            for t in 0..traj.len() {
                b = belief_update_with_terminals(
                    pomdp,
                    terminals,
                    &b,
                    traj.actions[t],
                    traj.observations[t],
                )?;
                out.push(b.sample(rng));
            }
            Ok(Some(out))
        }
        CriticKind::History | CriticKind::TruncatedHistory(_) => Ok(None),
    }
}

/// Whether step `t` of the episode ended at a true terminal (as opposed to
/// the step cap). Only the final step can.
pub(crate) fn is_terminal_step(traj: &Trajectory, t: usize) -> bool {
    t + 1 == traj.len() && !traj.truncated
}

/// Per-step TD errors for one episode: online critic on the current input,
/// frozen target on the next, zero bootstrap at true terminals.
///
/// The belief-sampled kind draws its states from `rng`; other kinds ignore it.
pub fn td_errors(
    nets: &AgentNets,
    pomdp: &Pomdp,
    terminals: &TerminalSpec,
    traj: &Trajectory,
    rng: &mut impl Rng,
) -> Result<Vec<f64>> {
    let states = critic_state_inputs(nets, pomdp, terminals, traj, rng)?;
    let values = |params: &autodiff_nn::Params| -> Result<Vec<f64>> {
        let mut tape = Tape::new();
        let vars = nets.cri.episode_values(
            &mut tape,
            params,
            nets.kind(),
            nets.start_symbol(),
            traj,
            states.as_deref(),
        )?;
        Ok(vars.into_iter().map(|v| tape.scalar(v)).collect())
    };
    let online = values(&nets.critic)?;
    let frozen = values(&nets.target)?;

    let t_len = traj.len();
    let v_cur = &online[..t_len];
    let v_next: Vec<f64> = (0..t_len)
        .map(|t| if is_terminal_step(traj, t) { 0.0 } else { frozen[t + 1] })
        .collect();
    Ok(td_from_values(&traj.rewards, pomdp.gamma(), v_cur, &v_next))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nets::{CriticKind, NetDims};
    use crate::sampling::sample_batch;
    use env_suite::{build_goodbad, build_heavenhell};
    use pomdp_core::seeding::derive_rng;

    // ── Pure arithmetic ──

    #[test]
    fn the_bootstrap_arithmetic_is_one_step() {
        let d = td_from_values(&[1.0], 0.99, &[3.0], &[2.0]);
        assert!((d[0] - (1.0 + 1.98 - 3.0)).abs() < 1e-15);
        assert!((d[0] + 0.02).abs() < 1e-15);
    }

    #[test]
    fn terminal_steps_bootstrap_nothing() {
        let d = td_from_values(&[1.0], 0.99, &[0.5], &[0.0]);
        assert_eq!(d[0], 0.5);
    }

    // ── Episode plumbing ──

    #[test]
    fn only_cap_truncated_episodes_bootstrap_their_last_step() {
        let (p, terms) = build_heavenhell(3).unwrap();
        let nets =
            AgentNets::with_dims(CriticKind::History, 4, 15, 28, NetDims::tiny(), 21).unwrap();
        let mut rng = derive_rng(22, &[0]);
        // A long cap lets random walks reach an exit; a cap of one step
        // cannot, so that episode is truncated by construction.
        let reaching = loop {
            let t = sample_batch(&p, &terms, &nets, 1, 400, &mut rng).unwrap().remove(0);
            if !t.truncated {
                break t;
            }
        };
        let capped = sample_batch(&p, &terms, &nets, 1, 1, &mut rng).unwrap().remove(0);
        assert!(capped.truncated);

        let last = reaching.len() - 1;
        let d_term = td_errors(&nets, &p, &terms, &reaching, &mut rng).unwrap()[last];
        let v_last = nets.critic_value(&reaching.history_prefix(last), None).unwrap();
        assert!(
            (d_term - (reaching.rewards[last] - v_last)).abs() < 1e-12,
            "terminal step must not bootstrap"
        );

        let d_cap = td_errors(&nets, &p, &terms, &capped, &mut rng).unwrap()[0];
        let v0 = nets.critic_value(&capped.history_prefix(0), None).unwrap();
        let v1 = nets.target_value(&capped.history_prefix(1), None).unwrap();
        assert!(
            (d_cap - (capped.rewards[0] + p.gamma() * v1 - v0)).abs() < 1e-12,
            "capped step must bootstrap from the target critic"
        );
    }

    #[test]
    fn bootstrap_values_come_from_the_frozen_copy_not_the_online_critic() {
        let p = build_goodbad(0.9).unwrap();
        let terms = TerminalSpec::none();
        let mut nets =
            AgentNets::with_dims(CriticKind::History, 2, 2, 2, NetDims::tiny(), 23).unwrap();
        let mut rng = derive_rng(24, &[0]);
        let traj = sample_batch(&p, &terms, &nets, 1, 4, &mut rng).unwrap().remove(0);

        let before = td_errors(&nets, &p, &terms, &traj, &mut rng).unwrap();
        // Shift the online critic head; current-value terms move, bootstrap
        // terms stay pinned to the target.
        let id = nets.critic.id_of("head.out.b").unwrap();
        nets.critic.tensor_mut(id).data_mut()[0] += 1.0;
        let after = td_errors(&nets, &p, &terms, &traj, &mut rng).unwrap();
        for (b, a) in before.iter().zip(&after) {
            assert!((a - (b - 1.0)).abs() < 1e-9, "only v̂(current) may move");
        }
    }

    #[test]
    fn belief_sampled_states_are_drawn_from_the_posterior_support() {
        let p = build_goodbad(0.9).unwrap();
        let terms = TerminalSpec::none();
        let nets = AgentNets::with_dims(
            CriticKind::HistoryStateSampled,
            2,
            2,
            2,
            NetDims::tiny(),
            25,
        )
        .unwrap();
        let mut rng = derive_rng(26, &[0]);
        for _ in 0..20 {
            let traj = sample_batch(&p, &terms, &nets, 1, 5, &mut rng).unwrap().remove(0);
            let states =
                critic_state_inputs(&nets, &p, &terms, &traj, &mut rng).unwrap().unwrap();
            assert_eq!(states.len(), traj.len() + 1);
            for (t, &s) in states.iter().enumerate() {
                let b = belief_of_history_with_terminals(&p, &terms, &traj.history_prefix(t))
                    .unwrap();
                assert!(b.prob(s) > 0.0, "t={t}: sampled state outside the posterior");
            }
        }
    }

    #[test]
    fn a_zero_critic_reduces_deltas_to_rewards() {
        let p = build_goodbad(0.9).unwrap();
        let terms = TerminalSpec::none();
        let mut nets =
            AgentNets::with_dims(CriticKind::HistoryState, 2, 2, 2, NetDims::tiny(), 27).unwrap();
        for id in nets.critic.ids().collect::<Vec<_>>() {
            nets.critic.tensor_mut(id).data_mut().iter_mut().for_each(|v| *v = 0.0);
        }
        nets.refresh_target();
        let mut rng = derive_rng(28, &[0]);
        let traj = sample_batch(&p, &terms, &nets, 1, 6, &mut rng).unwrap().remove(0);
        let deltas = td_errors(&nets, &p, &terms, &traj, &mut rng).unwrap();
        assert_eq!(deltas, traj.rewards);
    }
}
