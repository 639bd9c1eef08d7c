//! Seeded random models and policies for sweeps and property tests.
//!
//! Everything here is a pure function of its seed (via the workspace's
//! deterministic stream derivation), so test failures replay exactly. Sizes
//! default to the largest models whose full history trees are still cheap
//! to enumerate a few steps deep.

use crate::policy::{DefaultRow, TabularPolicy};
use pomdp_core::seeding::derive_rng;
use pomdp_core::{DiscreteDistribution, ObservationModel, Pomdp};
use rand::Rng;

/// Which observation-channel shape a random model uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObsGranularity {
    /// `O(o|s')` — observations reveal (noisily) the state just entered.
    StateOnly,
    /// `O(o|a,s')`.
    ActionNext,
    /// `O(o|s,a,s')`.
    Full,
}

fn simplex_row(rng: &mut impl Rng, n: usize) -> DiscreteDistribution {
    // Exponential spacings normalize to a Dirichlet(1,…,1) draw.
    let mut w: Vec<f64> = (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let z: f64 = w.iter().sum();
    for v in &mut w {
        *v /= z;
    }
    DiscreteDistribution::new(w).expect("normalized weights form a distribution")
}

/// A random model: up to 4 states, 3 actions, 3 observations, a random
/// observation-channel granularity, and (half the time) pre-action initial
/// observations.
pub fn random_pomdp(seed: u64) -> Pomdp {
    let mut rng = derive_rng(seed, &[0x9A0D]);
    let n_states = rng.gen_range(2..=4);
    let n_actions = rng.gen_range(2..=3);
    let n_obs = rng.gen_range(2..=3);
    let gamma = rng.gen_range(0.3..0.95);
    let granularity = match rng.gen_range(0..3) {
        0 => ObsGranularity::StateOnly,
        1 => ObsGranularity::ActionNext,
        _ => ObsGranularity::Full,
    };
    let with_initial_obs = rng.gen_bool(0.5);
    random_pomdp_sized(seed, n_states, n_actions, n_obs, gamma, granularity, with_initial_obs)
}

/// A random model with every shape parameter pinned by the caller.
pub fn random_pomdp_sized(
    seed: u64,
    n_states: usize,
    n_actions: usize,
    n_obs: usize,
    gamma: f64,
    granularity: ObsGranularity,
    with_initial_obs: bool,
) -> Pomdp {
    let mut rng = derive_rng(seed, &[0x9A0D, 1]);
    let transition: Vec<DiscreteDistribution> = (0..n_states * n_actions)
        .map(|_| simplex_row(&mut rng, n_states))
        .collect();
    let observation = match granularity {
        ObsGranularity::StateOnly => ObservationModel::ByNext(
            (0..n_states).map(|_| simplex_row(&mut rng, n_obs)).collect(),
        ),
        ObsGranularity::ActionNext => ObservationModel::ByActionNext(
            (0..n_actions * n_states)
                .map(|_| simplex_row(&mut rng, n_obs))
                .collect(),
        ),
        ObsGranularity::Full => ObservationModel::Full(
            (0..n_states * n_actions * n_states)
                .map(|_| simplex_row(&mut rng, n_obs))
                .collect(),
        ),
    };
    let reward: Vec<f64> =
        (0..n_states * n_actions).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let initial = simplex_row(&mut rng, n_states);
    let initial_obs = if with_initial_obs {
        Some((0..n_states).map(|_| simplex_row(&mut rng, n_obs)).collect())
    } else {
        None
    };
    Pomdp::new(
        n_states,
        n_actions,
        n_obs,
        transition,
        observation,
        reward,
        gamma,
        initial,
        initial_obs,
    )
    .expect("generated shapes are consistent")
}

/// A fully observed model wearing partial-observation clothes: the
/// observation (including the pre-action one) is a noiseless copy of the
/// state. Reactive policies on it behave exactly like state policies.
pub fn mdp_in_disguise(seed: u64, gamma: f64) -> Pomdp {
    let mut rng = derive_rng(seed, &[0xF077]);
    let n_states = 3;
    let n_actions = 2;
    let transition: Vec<DiscreteDistribution> = (0..n_states * n_actions)
        .map(|_| simplex_row(&mut rng, n_states))
        .collect();
    let identity: Vec<DiscreteDistribution> = (0..n_states)
        .map(|s| DiscreteDistribution::delta(s, n_states))
        .collect();
    let reward: Vec<f64> =
        (0..n_states * n_actions).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let initial = simplex_row(&mut rng, n_states);
    Pomdp::new(
        n_states,
        n_actions,
        n_states,
        transition,
        ObservationModel::ByNext(identity.clone()),
        reward,
        gamma,
        initial,
        Some(identity),
    )
    .expect("generated shapes are consistent")
}

/// Random reactive policy: one random simplex row per observation, plus a
/// row for the no-observation-yet case.
pub fn random_reactive_policy(seed: u64, n_obs: usize, n_actions: usize) -> TabularPolicy {
    let mut rng = derive_rng(seed, &[0x6E1C]);
    let rows = (0..n_obs).map(|_| simplex_row(&mut rng, n_actions)).collect();
    let no_obs = simplex_row(&mut rng, n_actions);
    TabularPolicy::reactive_with_no_obs(rows, no_obs)
}

/// Random history-keyed policy: every history gets its own random row,
/// materialized lazily from the seed.
pub fn random_historyful_policy(seed: u64, n_actions: usize) -> TabularPolicy {
    TabularPolicy::historyful(n_actions, DefaultRow::Seeded { seed })
}

/// Random softmax policy with logits in ±1.5, materialized lazily.
pub fn random_softmax_policy(seed: u64, n_actions: usize) -> TabularPolicy {
    TabularPolicy::softmax(seed, 1.5, n_actions)
}
