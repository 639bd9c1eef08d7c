//! Bayesian belief arithmetic: the posterior over states given a history.
//!
//! The belief after extending a history by `(a, o)` is the filtering update
//!
//! ```text
//! b'(s') ∝ Σ_s b(s) · T(s'|s,a) · O(o|s,a,s')
//! ```
//!
//! and a pre-action initial observation conditions the initial distribution
//! through the model's initial-emission rows. The plain functions here know
//! nothing about episode termination; the terminal-aware variants additionally
//! condition on "the episode is still running", which zeroes sources whose
//! `(state, action)` step would have ended the episode and targets that are
//! terminal states. The two coincide on models without terminals.

use crate::error::{OracleError, Result};
use pomdp_core::{DiscreteDistribution, History, Pomdp, TerminalSpec};

/// Posterior over states; an alias, since a belief is just a distribution
/// whose support is the states consistent with the conditioning history.
pub type Belief = DiscreteDistribution;

/// One unnormalized filtering step; returns the updated weights and their sum
/// (the predictive probability of `(a, o)`, jointly with episode continuation
/// when `terminals` is supplied).
pub(crate) fn raw_update(
    pomdp: &Pomdp,
    terminals: Option<&TerminalSpec>,
    b: &[f64],
    a: usize,
    o: usize,
) -> (Vec<f64>, f64) {
    let mut u = vec![0.0; pomdp.n_states()];
    for (s, &bs) in b.iter().enumerate() {
        if bs == 0.0 {
            continue;
        }
        if let Some(t) = terminals {
            if t.is_terminal_state(s) || t.is_terminal_step(s, a) {
                continue;
            }
        }
        let row = pomdp.transition_row(s, a);
        for s2 in row.support() {
            if let Some(t) = terminals {
                if t.is_terminal_state(s2) {
                    continue;
                }
            }
            u[s2] += bs * row.prob(s2) * pomdp.obs_row(s, a, s2).prob(o);
        }
    }
    let z: f64 = u.iter().sum();
    (u, z)
}

fn normalized(mut u: Vec<f64>, z: f64) -> DiscreteDistribution {
    for w in &mut u {
        *w /= z;
    }
    DiscreteDistribution::from_weights_unchecked(u)
}

/// Single Bayes step through the transition and observation tables.
pub fn belief_update(pomdp: &Pomdp, b: &Belief, a: usize, o: usize) -> Result<Belief> {
    pomdp.check_action(a)?;
    pomdp.check_obs(o)?;
    let (u, z) = raw_update(pomdp, None, b.probs(), a, o);
    if z == 0.0 {
        return Err(OracleError::UnrealizableObservation { action: a, obs: o });
    }
    Ok(normalized(u, z))
}

/// Bayes step conditioned on the episode continuing past this step.
pub fn belief_update_with_terminals(
    pomdp: &Pomdp,
    terminals: &TerminalSpec,
    b: &Belief,
    a: usize,
    o: usize,
) -> Result<Belief> {
    pomdp.check_action(a)?;
    pomdp.check_obs(o)?;
    let (u, z) = raw_update(pomdp, Some(terminals), b.probs(), a, o);
    if z == 0.0 {
        return Err(OracleError::UnrealizableObservation { action: a, obs: o });
    }
    Ok(normalized(u, z))
}

/// The belief at the start of an episode, conditioned on the pre-action
/// initial observation when the history carries one.
pub(crate) fn initial_belief(
    pomdp: &Pomdp,
    terminals: Option<&TerminalSpec>,
    h: &History,
) -> Result<Vec<f64>> {
    let mut b: Vec<f64> = pomdp.initial().probs().to_vec();
    if let Some(t) = terminals {
        // An episode that starts in a terminal state is over before any
        // action; condition the running process on that not happening.
        for (s, w) in b.iter_mut().enumerate() {
            if t.is_terminal_state(s) {
                *w = 0.0;
            }
        }
    }
    if let Some(o0) = h.initial_obs() {
        pomdp.check_obs(o0)?;
        let rows = pomdp.initial_obs().ok_or_else(|| OracleError::UnrealizableHistory {
            history: h.key(),
            reason: "history opens with an observation but the model emits none before the first action".into(),
        })?;
        for (s, w) in b.iter_mut().enumerate() {
            *w *= rows[s].prob(o0);
        }
    }
    let z: f64 = b.iter().sum();
    if z == 0.0 {
        return Err(OracleError::UnrealizableHistory {
            history: h.key(),
            reason: "initial observation has zero probability under the initial distribution".into(),
        });
    }
    for w in &mut b {
        *w /= z;
    }
    Ok(b)
}

fn fold_history(pomdp: &Pomdp, terminals: Option<&TerminalSpec>, h: &History) -> Result<Belief> {
    let mut b = initial_belief(pomdp, terminals, h)?;
    for (i, &(a, o)) in h.steps().iter().enumerate() {
        pomdp.check_action(a)?;
        pomdp.check_obs(o)?;
        let (u, z) = raw_update(pomdp, terminals, &b, a, o);
        if z == 0.0 {
            return Err(OracleError::UnrealizableHistory {
                history: h.key(),
                reason: format!("step {i}: observation {o} after action {a} has zero probability"),
            });
        }
        b = u;
        for w in &mut b {
            *w /= z;
        }
    }
    Ok(DiscreteDistribution::from_weights_unchecked(b))
}

/// Folds [`belief_update`] along a history, starting from the initial
/// distribution (conditioned on the initial observation if present).
pub fn belief_of_history(pomdp: &Pomdp, h: &History) -> Result<Belief> {
    fold_history(pomdp, None, h)
}

/// As [`belief_of_history`], additionally conditioning every step on the
/// episode still running (relevant only on models with terminals).
pub fn belief_of_history_with_terminals(
    pomdp: &Pomdp,
    terminals: &TerminalSpec,
    h: &History,
) -> Result<Belief> {
    fold_history(pomdp, Some(terminals), h)
}

/// Predictive observation distribution `Pr(o | b, a)`.
pub fn predictive_observation(pomdp: &Pomdp, b: &Belief, a: usize) -> DiscreteDistribution {
    let mut probs = vec![0.0; pomdp.n_obs()];
    for s in b.support() {
        let bs = b.prob(s);
        let row = pomdp.transition_row(s, a);
        for s2 in row.support() {
            let w = bs * row.prob(s2);
            let obs = pomdp.obs_row(s, a, s2);
            for (o, p) in probs.iter_mut().enumerate() {
                *p += w * obs.prob(o);
            }
        }
    }
    DiscreteDistribution::from_weights_unchecked(probs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use env_suite::{build_goodbad, build_heavenhell, HeavenHellLayout, EAST, NORTH, SOUTH, WEST};
    use pomdp_core::History;

    // ── Two-state filtering, frozen by hand ──
    //
    // Starting uniform, a good observation triples the odds of the good
    // state each time (the good state always emits `g`, the bad state is a
    // fair coin), and a single bad observation is conclusive.

    #[test]
    fn good_observation_shifts_belief_to_two_thirds() {
        let p = build_goodbad(0.9).unwrap();
        let b = belief_update(&p, &DiscreteDistribution::uniform(2), 0, 0).unwrap();
        assert!((b.prob(0) - 2.0 / 3.0).abs() < 1e-15);
        assert!((b.prob(1) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn second_good_observation_reaches_four_fifths() {
        let p = build_goodbad(0.9).unwrap();
        let b = DiscreteDistribution::new(vec![2.0 / 3.0, 1.0 / 3.0]).unwrap();
        let b = belief_update(&p, &b, 0, 0).unwrap();
        assert!((b.prob(0) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn bad_observation_is_conclusive() {
        let p = build_goodbad(0.9).unwrap();
        let b = DiscreteDistribution::new(vec![2.0 / 3.0, 1.0 / 3.0]).unwrap();
        let b = belief_update(&p, &b, 0, 1).unwrap();
        assert_eq!(b.probs(), &[0.0, 1.0]);
    }

    #[test]
    fn empty_history_recovers_the_initial_distribution() {
        let p = build_goodbad(0.9).unwrap();
        let b = belief_of_history(&p, &History::empty()).unwrap();
        assert_eq!(b.probs(), p.initial().probs());
    }

    #[test]
    fn initial_observation_alone_conditions_the_prior() {
        let p = build_goodbad(0.9).unwrap();
        let b = belief_of_history(&p, &History::from_initial_obs(0)).unwrap();
        assert!((b.prob(0) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn impossible_observation_is_reported() {
        let p = build_goodbad(0.9).unwrap();
        // From the certainly-good belief, observing `b` is impossible.
        let sure = DiscreteDistribution::delta(0, 2);
        match belief_update(&p, &sure, 0, 1) {
            Err(OracleError::UnrealizableObservation { action: 0, obs: 1 }) => {}
            other => panic!("expected unrealizable observation, got {other:?}"),
        }
    }

    #[test]
    fn predictive_observation_matches_the_hand_computation() {
        let p = build_goodbad(0.9).unwrap();
        let b = DiscreteDistribution::new(vec![2.0 / 3.0, 1.0 / 3.0]).unwrap();
        let pred = predictive_observation(&p, &b, 0);
        assert!((pred.prob(0) - 5.0 / 6.0).abs() < 1e-15);
        assert!((pred.prob(1) - 1.0 / 6.0).abs() < 1e-15);
    }

    // ── Corridor world: the priest resolves the side ──

    #[test]
    fn visiting_the_priest_collapses_the_side_marginal() {
        let (p, _) = build_heavenhell(3).unwrap();
        let lay = HeavenHellLayout::new(3);

        // From the start, walk S, E, E, E to the priest; observations are the
        // deterministic position announcements, then the priest's answer.
        let mut h = History::from_initial_obs(lay.start());
        let path = [SOUTH, EAST, EAST, EAST];
        let mut pos = lay.start();
        for &a in &path[..3] {
            pos = lay.step_pos(pos, a);
            h.push(a, pos);
        }
        // Final step reaches the priest, who names the heaven side (left).
        h.push(EAST, 4 * 3 + 1);

        let b = belief_of_history(&p, &h).unwrap();
        let left_mass: f64 = (0..lay.n_positions()).map(|q| b.prob(lay.state(0, q))).sum();
        assert!((left_mass - 1.0).abs() < 1e-12);
        assert!((b.prob(lay.state(0, lay.priest())) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn before_the_priest_the_side_stays_uniform() {
        let (p, _) = build_heavenhell(3).unwrap();
        let lay = HeavenHellLayout::new(3);
        let mut h = History::from_initial_obs(lay.start());
        let pos = lay.step_pos(lay.start(), NORTH);
        h.push(NORTH, pos);
        let b = belief_of_history(&p, &h).unwrap();
        let left: f64 = (0..lay.n_positions()).map(|q| b.prob(lay.state(0, q))).sum();
        assert!((left - 0.5).abs() < 1e-12);
        // Position is pinned exactly.
        assert!((b.prob(lay.state(0, pos)) - 0.5).abs() < 1e-12);
        assert!((b.prob(lay.state(1, pos)) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn wrong_position_announcement_is_unrealizable() {
        let (p, _) = build_heavenhell(3).unwrap();
        let lay = HeavenHellLayout::new(3);
        let mut h = History::from_initial_obs(lay.start());
        // Claim we moved west (blocked at the corridor) yet observed the fork.
        h.push(WEST, lay.fork());
        match belief_of_history(&p, &h) {
            Err(OracleError::UnrealizableHistory { .. }) => {}
            other => panic!("expected unrealizable history, got {other:?}"),
        }
    }
}
