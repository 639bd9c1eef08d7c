//! One gradient step from a batch of completed episodes.
//!
//! Three loss pieces are assembled, each summed over an episode's steps and
//! averaged across the batch:
//!
//! * policy: `−Σ_t γ^t δ_t log π(a_t; h_t)` — the TD error replaces the
//!   return, and the `γ^t` factor can be switched off by config;
//! * critic: `Σ_t (v̂(input_t) − y_t)²` with the bootstrap target `y_t` held
//!   constant (no gradient reaches the frozen copy);
//! * negentropy: `Σ_t Σ_a π log π`, weighted by the scheduled λ, pulling the
//!   policy away from premature determinism.
//!
//! The policy and critic are disjoint parameter sets, so each loss takes its
//! own Adam step. A non-finite loss or gradient aborts with a divergence
//! error carrying the loss values for diagnosis.

use crate::error::{Result, TrainError};
use crate::nets::AgentNets;
use crate::td::{critic_state_inputs, is_terminal_step, td_from_values};
use crate::train::LearningCurve;
use autodiff_nn::{Adam, Grads, Tape};
use pomdp_core::{Pomdp, TerminalSpec, Trajectory};
use rand::Rng;

/// Loss values of one update, recorded before the parameter step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateStats {
    /// Mean over episodes of the δ-weighted score term.
    pub policy_loss: f64,
    /// Mean over episodes of the squared TD residual sum.
    pub critic_loss: f64,
    /// Mean over episodes of the per-step negentropy sum (λ not applied).
    pub negentropy: f64,
    /// The entropy weight used for this update.
    pub lambda: f64,
}

fn check_finite(what: &str, value: f64, grads: &Grads) -> Result<()> {
    if !value.is_finite() || !grads.is_finite() {
        return Err(TrainError::Diverged {
            timestep: 0,
            detail: format!(
                "{what} loss is {value}, max |grad| {}",
                grads.max_abs()
            ),
            curve: Box::new(LearningCurve::new()),
        });
    }
    Ok(())
}

/// Applies one actor step and one critic step from `batch`.
///
/// `rng` feeds belief sampling for the belief-sampled critic kind only; every
/// other kind consumes nothing from it.
#[allow(clippy::too_many_arguments)]
pub fn update(
    nets: &mut AgentNets,
    actor: &mut Adam,
    critic_opt: &mut Adam,
    pomdp: &Pomdp,
    terminals: &TerminalSpec,
    batch: &[Trajectory],
    lambda: f64,
    gamma_t_weighting: bool,
    rng: &mut impl Rng,
) -> Result<UpdateStats> {
    if batch.is_empty() {
        return Err(TrainError::InvalidConfig {
            reason: "an update needs at least one episode".into(),
        });
    }
    for traj in batch {
        if traj.is_empty() {
            return Err(TrainError::EmptyEpisode);
        }
    }
    let gamma = pomdp.gamma();
    let e_weight = 1.0 / batch.len() as f64;
    let kind = nets.kind();
    let start = nets.start_symbol();

    let state_inputs: Vec<Option<Vec<usize>>> = batch
        .iter()
        .map(|traj| critic_state_inputs(nets, pomdp, terminals, traj, rng))
        .collect::<Result<_>>()?;

    // ── Critic pass ──
    //
    // One unroll per episode on the online critic (kept for the backward
    // sweep) and one on the frozen copy (read for targets and dropped).
    let mut tape = Tape::new();
    let mut episode_losses = Vec::with_capacity(batch.len());
    let mut deltas: Vec<Vec<f64>> = Vec::with_capacity(batch.len());
    for (traj, states) in batch.iter().zip(&state_inputs) {
        let t_len = traj.len();
        let vars = nets.cri.episode_values(
            &mut tape,
            &nets.critic,
            kind,
            start,
            traj,
            states.as_deref(),
        )?;
        let v_cur: Vec<f64> = vars[..t_len].iter().map(|&v| tape.scalar(v)).collect();

        let frozen: Vec<f64> = {
            let mut scratch = Tape::new();
            nets.cri
                .episode_values(&mut scratch, &nets.target, kind, start, traj, states.as_deref())?
                .into_iter()
                .map(|v| scratch.scalar(v))
                .collect()
        };
        let v_next: Vec<f64> = (0..t_len)
            .map(|t| if is_terminal_step(traj, t) { 0.0 } else { frozen[t + 1] })
            .collect();
        let y: Vec<f64> = traj
            .rewards
            .iter()
            .zip(&v_next)
            .map(|(&r, &next)| r + gamma * next)
            .collect();
        deltas.push(td_from_values(&traj.rewards, gamma, &v_cur, &v_next));
        episode_losses.push((e_weight, tape.sum_squared_residuals(&vars[..t_len], &y)));
    }
    let critic_total = tape.weighted_sum(&episode_losses);
    let critic_loss = tape.scalar(critic_total);

    let mut grads = Grads::zeros_like(&nets.critic);
    tape.backward(&nets.critic, critic_total, &mut grads)?;
    check_finite("critic", critic_loss, &grads)?;
    critic_opt.step(&mut nets.critic, &grads);

    // ── Policy pass ──
    let mut tape = Tape::new();
    let mut score_terms = Vec::new();
    let mut entropy_terms = Vec::new();
    for (traj, episode_deltas) in batch.iter().zip(&deltas) {
        let t_len = traj.len();
        let mut hidden = nets.pol.enc.initial(&mut tape);
        if kind.truncation().is_none() {
            if let Some(o0) = traj.initial_obs {
                hidden = nets.pol.enc.advance(&mut tape, &nets.policy, hidden, start, o0);
            }
        }
        let mut discount = 1.0;
        for t in 0..t_len {
            if kind.truncation().is_some() {
                hidden = nets.pol.enc.encode(
                    &mut tape,
                    &nets.policy,
                    &traj.history_prefix(t),
                    kind.truncation(),
                    start,
                );
            }
            let lp = nets.pol.log_probs(&mut tape, &nets.policy, hidden);
            let picked = tape.pick(lp, traj.actions[t]);
            let weight = if gamma_t_weighting { discount } else { 1.0 };
            score_terms.push((-weight * episode_deltas[t] * e_weight, picked));
            entropy_terms.push((e_weight, tape.neg_entropy_of_log_probs(lp)));
            discount *= gamma;
            if kind.truncation().is_none() && t + 1 < t_len {
                hidden = nets.pol.enc.advance(
                    &mut tape,
                    &nets.policy,
                    hidden,
                    traj.actions[t],
                    traj.observations[t],
                );
            }
        }
    }
    let score_node = tape.weighted_sum(&score_terms);
    let entropy_node = tape.weighted_sum(&entropy_terms);
    let policy_total = tape.weighted_sum(&[(1.0, score_node), (lambda, entropy_node)]);
    let policy_loss = tape.scalar(score_node);
    let negentropy = tape.scalar(entropy_node);

    let mut grads = Grads::zeros_like(&nets.policy);
    tape.backward(&nets.policy, policy_total, &mut grads)?;
    check_finite("policy", tape.scalar(policy_total), &grads)?;
    actor.step(&mut nets.policy, &grads);

    Ok(UpdateStats { policy_loss, critic_loss, negentropy, lambda })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nets::{CriticKind, NetDims};
    use crate::sampling::sample_batch;
    use env_suite::build_goodbad;
    use pomdp_core::seeding::derive_rng;
    use pomdp_core::{DiscreteDistribution, ObservationModel, Pomdp};

    fn zero_reward_model() -> Pomdp {
        let flip = DiscreteDistribution::uniform(2);
        Pomdp::new(
            2,
            2,
            2,
            vec![flip.clone(); 4],
            ObservationModel::ByNext(vec![flip.clone(), flip.clone()]),
            vec![0.0; 4],
            0.9,
            flip,
            None,
        )
        .unwrap()
    }

    fn snapshot(params: &autodiff_nn::Params) -> Vec<Vec<f64>> {
        params.iter().map(|(_, t)| t.data().to_vec()).collect()
    }

    // ── Zero-gradient fixed point ──

    #[test]
    fn zero_deltas_and_zero_entropy_weight_change_nothing() {
        let p = zero_reward_model();
        let terms = TerminalSpec::none();
        let mut nets =
            AgentNets::with_dims(CriticKind::History, 2, 2, 2, NetDims::tiny(), 31).unwrap();
        // A critic that outputs exactly zero makes every δ zero on a
        // zero-reward model.
        for id in nets.critic.ids().collect::<Vec<_>>() {
            nets.critic.tensor_mut(id).data_mut().iter_mut().for_each(|v| *v = 0.0);
        }
        nets.refresh_target();
        let mut actor = Adam::new(&nets.policy, 1e-3);
        let mut critic_opt = Adam::new(&nets.critic, 1e-3);
        let mut rng = derive_rng(32, &[0]);
        let batch = sample_batch(&p, &terms, &nets, 2, 5, &mut rng).unwrap();

        let pol_before = snapshot(&nets.policy);
        let cri_before = snapshot(&nets.critic);
        let stats = update(
            &mut nets, &mut actor, &mut critic_opt, &p, &terms, &batch, 0.0, true, &mut rng,
        )
        .unwrap();
        assert_eq!(stats.policy_loss, 0.0);
        assert_eq!(stats.critic_loss, 0.0);
        assert_eq!(snapshot(&nets.policy), pol_before);
        assert_eq!(snapshot(&nets.critic), cri_before);
    }

    // ── Entropy accounting ──

    #[test]
    fn uniform_logits_report_log_action_count_negentropy_per_step() {
        let p = build_goodbad(0.9).unwrap();
        let terms = TerminalSpec::none();
        let mut nets =
            AgentNets::with_dims(CriticKind::History, 2, 2, 2, NetDims::tiny(), 33).unwrap();
        for id in nets.policy.ids().collect::<Vec<_>>() {
            nets.policy.tensor_mut(id).data_mut().iter_mut().for_each(|v| *v = 0.0);
        }
        let mut actor = Adam::new(&nets.policy, 1e-3);
        let mut critic_opt = Adam::new(&nets.critic, 1e-3);
        let mut rng = derive_rng(34, &[0]);
        let cap = 5;
        let batch = sample_batch(&p, &terms, &nets, 2, cap, &mut rng).unwrap();
        let stats = update(
            &mut nets, &mut actor, &mut critic_opt, &p, &terms, &batch, 0.3, true, &mut rng,
        )
        .unwrap();
        let expected = cap as f64 * -(2.0f64.ln());
        assert!(
            (stats.negentropy - expected).abs() < 1e-12,
            "got {}, want {expected}",
            stats.negentropy
        );
        assert_eq!(stats.lambda, 0.3);
    }

    // ── The γ^t switch ──

    #[test]
    fn disabling_step_discounting_changes_the_policy_step() {
        let p = build_goodbad(0.9).unwrap();
        let terms = TerminalSpec::none();
        let build = || {
            let nets =
                AgentNets::with_dims(CriticKind::History, 2, 2, 2, NetDims::tiny(), 35).unwrap();
            let actor = Adam::new(&nets.policy, 1e-3);
            let critic_opt = Adam::new(&nets.critic, 1e-3);
            (nets, actor, critic_opt)
        };
        let batch = {
            let (nets, _, _) = build();
            sample_batch(&p, &terms, &nets, 2, 6, &mut derive_rng(36, &[0])).unwrap()
        };
        let run = |weighting: bool| {
            let (mut nets, mut actor, mut critic_opt) = build();
            update(
                &mut nets,
                &mut actor,
                &mut critic_opt,
                &p,
                &terms,
                &batch,
                0.0,
                weighting,
                &mut derive_rng(36, &[1]),
            )
            .unwrap();
            snapshot(&nets.policy)
        };
        assert_ne!(run(true), run(false));
    }

    // ── Divergence ──

    #[test]
    fn a_poisoned_critic_raises_a_divergence_error() {
        let p = build_goodbad(0.9).unwrap();
        let terms = TerminalSpec::none();
        let mut nets =
            AgentNets::with_dims(CriticKind::History, 2, 2, 2, NetDims::tiny(), 37).unwrap();
        let mut rng = derive_rng(38, &[0]);
        let batch = sample_batch(&p, &terms, &nets, 2, 4, &mut rng).unwrap();
        let id = nets.critic.id_of("head.out.w").unwrap();
        nets.critic.tensor_mut(id).data_mut()[0] = f64::NAN;
        let mut actor = Adam::new(&nets.policy, 1e-3);
        let mut critic_opt = Adam::new(&nets.critic, 1e-3);
        let err = update(
            &mut nets, &mut actor, &mut critic_opt, &p, &terms, &batch, 0.1, true, &mut rng,
        )
        .unwrap_err();
        assert!(matches!(err, TrainError::Diverged { .. }), "got {err}");
    }

    // ── Movement ──

    #[test]
    fn a_real_batch_moves_both_parameter_sets() {
        let p = build_goodbad(0.9).unwrap();
        let terms = TerminalSpec::none();
        let mut nets =
            AgentNets::with_dims(CriticKind::HistoryState, 2, 2, 2, NetDims::tiny(), 39).unwrap();
        let mut actor = Adam::new(&nets.policy, 1e-3);
        let mut critic_opt = Adam::new(&nets.critic, 1e-3);
        let mut rng = derive_rng(40, &[0]);
        let batch = sample_batch(&p, &terms, &nets, 2, 6, &mut rng).unwrap();
        let pol_before = snapshot(&nets.policy);
        let cri_before = snapshot(&nets.critic);
        let target_before = snapshot(&nets.target);
        update(
            &mut nets, &mut actor, &mut critic_opt, &p, &terms, &batch, 0.1, true, &mut rng,
        )
        .unwrap();
        assert_ne!(snapshot(&nets.policy), pol_before);
        assert_ne!(snapshot(&nets.critic), cri_before);
        assert_eq!(snapshot(&nets.target), target_before, "updates never touch the target");
    }
}
