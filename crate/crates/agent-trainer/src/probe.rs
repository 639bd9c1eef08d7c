//! Read a trained critic at hand-picked (history, state) situations.
//!
//! A probe asks: what does this critic output when the agent has seen
//! exactly this history and the environment is truly in this state? Each
//! probe is validated before the read — the history must be realizable
//! (positive probability under the model) and the state must carry positive
//! posterior mass given the history, so every probe describes a situation
//! that can actually occur. Critics that ignore one of the two coordinates
//! will return identical values across probes differing only in that
//! coordinate; that blindness is the thing these reads are for.

use crate::error::{Result, TrainError};
use crate::nets::AgentNets;
use exact_oracle::belief_of_history_with_terminals;
use pomdp_core::{History, Pomdp, TerminalSpec};

/// Evaluates the online critic at each situation, in order.
///
/// For critics without a state input the state coordinate still gates
/// realizability, so the same probe list is meaningful across critic kinds.
pub fn probe_critic(
    nets: &AgentNets,
    pomdp: &Pomdp,
    terminals: &TerminalSpec,
    probes: &[(History, usize)],
) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(probes.len());
    for (h, s) in probes {
        if *s >= pomdp.n_states() {
            return Err(TrainError::StateOutOfRange { state: *s, n_states: pomdp.n_states() });
        }
        let belief = belief_of_history_with_terminals(pomdp, terminals, h).map_err(|e| {
            TrainError::UnrealizableProbe {
                history: h.key(),
                state: *s,
                reason: e.to_string(),
            }
        })?;
        if belief.prob(*s) <= 0.0 {
            return Err(TrainError::UnrealizableProbe {
                history: h.key(),
                state: *s,
                reason: "the state has zero posterior mass after this history".into(),
            });
        }
        let state_arg = nets.kind().uses_state().then_some(*s);
        out.push(nets.critic_value(h, state_arg)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nets::{CriticKind, NetDims};
    use env_suite::build_goodbad;

    fn goodbad_nets(kind: CriticKind) -> (Pomdp, TerminalSpec, AgentNets) {
        let p = build_goodbad(0.9).unwrap();
        let nets = AgentNets::with_dims(kind, 2, 2, 2, NetDims::tiny(), 91).unwrap();
        (p, TerminalSpec::none(), nets)
    }

    // ── Validation ──

    #[test]
    fn impossible_histories_are_rejected_by_name() {
        let (p, terms, nets) = goodbad_nets(CriticKind::HistoryState);
        // Seeing the bad label after the first action pins the posterior on
        // the bad state, so pairing that history with the good state names a
        // situation that cannot occur.
        let h = History::from_initial_obs(0).extended(0, 1);
        let err = probe_critic(&nets, &p, &terms, &[(h, 0)]).unwrap_err();
        assert!(matches!(err, TrainError::UnrealizableProbe { state: 0, .. }), "got {err}");
    }

    #[test]
    fn out_of_range_states_are_a_typed_error() {
        let (p, terms, nets) = goodbad_nets(CriticKind::History);
        let err = probe_critic(&nets, &p, &terms, &[(History::empty(), 9)]).unwrap_err();
        assert!(matches!(err, TrainError::StateOutOfRange { state: 9, n_states: 2 }));
    }

    // ── Blindness surfaces in the reads ──

    #[test]
    fn a_state_critic_reads_identically_across_histories_over_one_state() {
        let (p, terms, nets) = goodbad_nets(CriticKind::State);
        let h_short = History::from_initial_obs(0);
        let h_long = History::from_initial_obs(0).extended(0, 0).extended(0, 0);
        let vals =
            probe_critic(&nets, &p, &terms, &[(h_short, 0), (h_long, 0)]).unwrap();
        assert_eq!(vals[0], vals[1]);
    }

    #[test]
    fn a_history_critic_reads_identically_across_states_under_one_history() {
        let (p, terms, nets) = goodbad_nets(CriticKind::History);
        let h = History::from_initial_obs(0);
        let vals = probe_critic(&nets, &p, &terms, &[(h.clone(), 0), (h, 1)]).unwrap();
        assert_eq!(vals[0], vals[1]);
    }

    #[test]
    fn a_joint_critic_distinguishes_both_coordinates() {
        let (p, terms, nets) = goodbad_nets(CriticKind::HistoryState);
        let h = History::from_initial_obs(0);
        let h2 = History::from_initial_obs(0).extended(0, 0);
        let vals = probe_critic(
            &nets,
            &p,
            &terms,
            &[(h.clone(), 0), (h.clone(), 1), (h2.clone(), 0)],
        )
        .unwrap();
        assert_ne!(vals[0], vals[1], "state coordinate ignored");
        assert_ne!(vals[0], vals[2], "history coordinate ignored");
    }
}
