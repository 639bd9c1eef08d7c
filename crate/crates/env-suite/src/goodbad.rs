//! The good/bad emission puzzle.
//!
//! Two frozen states. The good state always announces itself; the bad state
//! flips a fair coin between the two symbols. Every action taken under the
//! `g` symbol's name pays 1 regardless of state, so a last-observation agent
//! looks sensible — yet the task is built to make state-indexed value
//! bookkeeping contradict itself, which is exactly what the oracle layer
//! probes.

use crate::Result;
use pomdp_core::{DiscreteDistribution, ObservationModel, Pomdp};

pub const GB_STATE_G: usize = 0;
pub const GB_STATE_B: usize = 1;
pub const GB_ACT_G: usize = 0;
pub const GB_ACT_B: usize = 1;
pub const GB_OBS_G: usize = 0;
pub const GB_OBS_B: usize = 1;

/// Builds the two-state model at the given discount.
///
/// States never change (`T` is the identity for both actions). Observations
/// depend on the state alone: `O(g|G) = 1`, `O(g|B) = O(b|B) = 1/2`; the same
/// emission also serves as the pre-action observation announced at episode
/// start. `R(s, a) = 1` iff `a = g`. The initial state is uniform and there
/// are no terminals.
pub fn build_goodbad(gamma: f64) -> Result<Pomdp> {
    let transition = vec![
        DiscreteDistribution::delta(GB_STATE_G, 2), // G, action g
        DiscreteDistribution::delta(GB_STATE_G, 2), // G, action b
        DiscreteDistribution::delta(GB_STATE_B, 2), // B, action g
        DiscreteDistribution::delta(GB_STATE_B, 2), // B, action b
    ];
    let emission = vec![
        DiscreteDistribution::delta(GB_OBS_G, 2),
        DiscreteDistribution::from_weights_unchecked(vec![0.5, 0.5]),
    ];
    let observation = ObservationModel::ByNext(emission.clone());
    let reward = vec![1.0, 0.0, 1.0, 0.0];

    let pomdp = Pomdp::new(
        2,
        2,
        2,
        transition,
        observation,
        reward,
        gamma,
        DiscreteDistribution::uniform(2),
        Some(emission),
    )?;
    Ok(pomdp.with_labels(
        Some(vec!["G".into(), "B".into()]),
        Some(vec!["g".into(), "b".into()]),
        Some(vec!["g".into(), "b".into()]),
    ))
}
