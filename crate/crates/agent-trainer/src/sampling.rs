//! Driving episodes with the network policy.
//!
//! The adapter carries whatever the policy branch needs between simulator
//! callbacks: full-history kinds advance a GRU hidden vector one pair at a
//! time (numerically identical to re-unrolling the whole history), while
//! truncated kinds keep the growing history and re-unroll their window on
//! every query, because a sliding window has no incremental form.

use crate::nets::AgentNets;
use pomdp_core::{
    sample_episode, DiscreteDistribution, History, Pomdp, Policy, TerminalSpec, Trajectory,
};
use autodiff_nn::Tape;
use rand::Rng;

enum Carrier {
    /// GRU hidden state, advanced in place.
    Hidden(Vec<f64>),
    /// Full history; re-encoded (with truncation) per query.
    Window(History),
}

/// [`Policy`] adapter around the policy branch of an [`AgentNets`].
pub struct NetPolicy<'a> {
    nets: &'a AgentNets,
    carrier: Carrier,
}

impl<'a> NetPolicy<'a> {
    pub fn new(nets: &'a AgentNets) -> Self {
        let carrier = match nets.kind().truncation() {
            Some(_) => Carrier::Window(History::empty()),
            None => Carrier::Hidden(vec![0.0; nets.dims().hidden]),
        };
        NetPolicy { nets, carrier }
    }

    fn advance_hidden(&mut self, action_symbol: usize, obs: usize) {
        if let Carrier::Hidden(h) = &mut self.carrier {
            let mut tape = Tape::new();
            let prev = tape.constant(std::mem::take(h));
            let next = self.nets.pol.enc.advance(
                &mut tape,
                &self.nets.policy,
                prev,
                action_symbol,
                obs,
            );
            *h = tape.value(next).to_vec();
        }
    }
}

impl Policy for NetPolicy<'_> {
    fn reset(&mut self, initial_obs: Option<usize>) {
        match &mut self.carrier {
            Carrier::Hidden(h) => {
                h.iter_mut().for_each(|v| *v = 0.0);
                if let Some(o0) = initial_obs {
                    self.advance_hidden(self.nets.start_symbol(), o0);
                }
            }
            Carrier::Window(hist) => {
                *hist = match initial_obs {
                    Some(o0) => History::from_initial_obs(o0),
                    None => History::empty(),
                };
            }
        }
    }

    fn observe(&mut self, action: usize, obs: usize) {
        match &mut self.carrier {
            Carrier::Hidden(_) => self.advance_hidden(action, obs),
            Carrier::Window(hist) => hist.push(action, obs),
        }
    }

    fn action_distribution(&self) -> DiscreteDistribution {
        let mut tape = Tape::new();
        let hidden = match &self.carrier {
            Carrier::Hidden(h) => tape.constant(h.clone()),
            Carrier::Window(hist) => self.nets.pol.enc.encode(
                &mut tape,
                &self.nets.policy,
                hist,
                self.nets.kind().truncation(),
                self.nets.start_symbol(),
            ),
        };
        let lp = self.nets.pol.log_probs(&mut tape, &self.nets.policy, hidden);
        let probs: Vec<f64> = tape.value(lp).iter().map(|&l| l.exp()).collect();
        DiscreteDistribution::from_weights_unchecked(probs)
    }
}

/// Samples `n_episodes` episodes under the current policy, each capped at
/// `max_steps`.
pub fn sample_batch(
    pomdp: &Pomdp,
    terminals: &TerminalSpec,
    nets: &AgentNets,
    n_episodes: usize,
    max_steps: usize,
    rng: &mut impl Rng,
) -> pomdp_core::Result<Vec<Trajectory>> {
    let mut out = Vec::with_capacity(n_episodes);
    for _ in 0..n_episodes {
        let mut policy = NetPolicy::new(nets);
        out.push(sample_episode(pomdp, terminals, &mut policy, max_steps, rng)?);
    }
    Ok(out)
}
