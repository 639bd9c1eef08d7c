//! Tabular policies over histories.
//!
//! Three parameterizations cover the regimes the value analysis cares about:
//!
//! * **reactive** — one action row per observation; the policy sees only the
//!   most recent observation, so π(a;h) = π(a;o_h).
//! * **historyful** — an explicit row per history key, with a default rule
//!   (uniform or seeded-random) for unlisted histories. Every history has its
//!   own row, so the policy is as expressive as the history space.
//! * **softmax** — logits θ[h][a] with π(a;h) ∝ exp θ[h][a]; rows for unseen
//!   histories are generated lazily from a seed so the table is total without
//!   being materialized. This is the parameterization the exact policy
//!   gradient differentiates.

use pomdp_core::{DiscreteDistribution, History};
use std::collections::BTreeMap;

/// 64-bit FNV-1a followed by a splitmix-style finalizer; used to derive
/// deterministic per-(history, action) values for lazily generated rows.
fn mix(seed: u64, key: &str, salt: u64) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325 ^ seed;
    for byte in key.as_bytes() {
        h ^= u64::from(*byte);
        h = h.wrapping_mul(0x100000001b3);
    }
    h ^= salt;
    h ^= h >> 30;
    h = h.wrapping_mul(0xbf58476d1ce4e5b9);
    h ^= h >> 27;
    h = h.wrapping_mul(0x94d049bb133111eb);
    h ^ (h >> 31)
}

/// Uniform in (0, 1]; the offset keeps logarithms finite.
fn unit(seed: u64, key: &str, salt: u64) -> f64 {
    ((mix(seed, key, salt) >> 11) as f64 + 1.0) / (1u64 << 53) as f64
}

fn hashed_simplex_row(seed: u64, key: &str, n: usize) -> DiscreteDistribution {
    let mut weights: Vec<f64> = (0..n).map(|a| -unit(seed, key, a as u64).ln()).collect();
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    DiscreteDistribution::from_weights_unchecked(weights)
}

fn softmax(logits: &[f64]) -> DiscreteDistribution {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut weights: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    DiscreteDistribution::from_weights_unchecked(weights)
}

/// Rule applied to histories without an explicit row.
#[derive(Debug, Clone)]
pub enum DefaultRow {
    Uniform,
    /// A deterministic pseudo-random row per history key.
    Seeded { seed: u64 },
}

#[derive(Debug, Clone)]
pub enum TabularPolicy {
    Reactive {
        /// Action row per observation index.
        rows: Vec<DiscreteDistribution>,
        /// Row used while no observation has been made yet.
        no_obs: DiscreteDistribution,
    },
    Historyful {
        overrides: BTreeMap<String, DiscreteDistribution>,
        default: DefaultRow,
        n_actions: usize,
    },
    Softmax {
        /// Explicitly set logit rows, keyed by history encoding.
        overrides: BTreeMap<String, Vec<f64>>,
        seed: u64,
        /// Lazily generated logits are uniform in `[-scale, scale]`.
        scale: f64,
        n_actions: usize,
    },
}

impl TabularPolicy {
    /// A reactive policy from per-observation rows; before any observation it
    /// acts uniformly.
    pub fn reactive(rows: Vec<DiscreteDistribution>) -> Self {
        let n = rows.first().map(|r| r.len()).unwrap_or(1);
        TabularPolicy::Reactive {
            rows,
            no_obs: DiscreteDistribution::uniform(n),
        }
    }

    pub fn reactive_with_no_obs(rows: Vec<DiscreteDistribution>, no_obs: DiscreteDistribution) -> Self {
        TabularPolicy::Reactive { rows, no_obs }
    }

    pub fn historyful(n_actions: usize, default: DefaultRow) -> Self {
        TabularPolicy::Historyful {
            overrides: BTreeMap::new(),
            default,
            n_actions,
        }
    }

    pub fn softmax(seed: u64, scale: f64, n_actions: usize) -> Self {
        TabularPolicy::Softmax {
            overrides: BTreeMap::new(),
            seed,
            scale,
            n_actions,
        }
    }

    /// Pins an explicit action row for one history (historyful policies).
    pub fn set_row(&mut self, history_key: impl Into<String>, row: DiscreteDistribution) {
        match self {
            TabularPolicy::Historyful { overrides, .. } => {
                overrides.insert(history_key.into(), row);
            }
            _ => panic!("set_row applies to historyful policies"),
        }
    }

    pub fn n_actions(&self) -> usize {
        match self {
            TabularPolicy::Reactive { no_obs, .. } => no_obs.len(),
            TabularPolicy::Historyful { n_actions, .. } => *n_actions,
            TabularPolicy::Softmax { n_actions, .. } => *n_actions,
        }
    }

    /// Whether π(a;h) depends on the history only through its last
    /// observation. Value recursions use this to collapse memo keys onto
    /// (belief, last observation) pairs.
    pub fn is_reactive(&self) -> bool {
        matches!(self, TabularPolicy::Reactive { .. })
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            TabularPolicy::Reactive { .. } => "reactive",
            TabularPolicy::Historyful { .. } => "historyful",
            TabularPolicy::Softmax { .. } => "softmax",
        }
    }

    /// The row a reactive policy plays after observation `o`.
    /// Panics for history-keyed policies.
    pub fn reactive_row(&self, o: usize) -> &DiscreteDistribution {
        match self {
            TabularPolicy::Reactive { rows, .. } => &rows[o],
            other => panic!("reactive_row on a {} policy", other.kind_name()),
        }
    }

    /// π(·; h) as a distribution over actions.
    pub fn action_distribution(&self, h: &History) -> DiscreteDistribution {
        match self {
            TabularPolicy::Reactive { rows, no_obs } => match h.last_obs() {
                Some(o) => rows[o].clone(),
                None => no_obs.clone(),
            },
            TabularPolicy::Historyful { .. } | TabularPolicy::Softmax { .. } => {
                self.row_for_key(&h.key())
            }
        }
    }

    /// Row lookup by canonical history key (meaningless for reactive
    /// policies, which are keyed by observation instead).
    pub fn row_for_key(&self, key: &str) -> DiscreteDistribution {
        match self {
            TabularPolicy::Reactive { .. } => {
                panic!("reactive policies are keyed by observation, not history")
            }
            TabularPolicy::Historyful {
                overrides,
                default,
                n_actions,
            } => match overrides.get(key) {
                Some(row) => row.clone(),
                None => match default {
                    DefaultRow::Uniform => DiscreteDistribution::uniform(*n_actions),
                    DefaultRow::Seeded { seed } => hashed_simplex_row(*seed, key, *n_actions),
                },
            },
            TabularPolicy::Softmax { .. } => softmax(&self.logits_for_key(key)),
        }
    }

    /// The logit row θ[h] for a softmax policy.
    pub fn logits_for_key(&self, key: &str) -> Vec<f64> {
        match self {
            TabularPolicy::Softmax {
                overrides,
                seed,
                scale,
                n_actions,
            } => match overrides.get(key) {
                Some(row) => row.clone(),
                None => (0..*n_actions)
                    .map(|a| scale * (2.0 * unit(*seed, key, a as u64) - 1.0))
                    .collect(),
            },
            _ => panic!("logits exist only for softmax policies"),
        }
    }

    /// A copy with θ[key][action] shifted by `delta` (softmax policies);
    /// the workhorse of finite-difference gradient checks.
    pub fn with_logit_nudged(&self, key: &str, action: usize, delta: f64) -> Self {
        match self {
            TabularPolicy::Softmax { .. } => {
                let mut row = self.logits_for_key(key);
                row[action] += delta;
                let mut copy = self.clone();
                if let TabularPolicy::Softmax { overrides, .. } = &mut copy {
                    overrides.insert(key.to_string(), row);
                }
                copy
            }
            _ => panic!("logit nudges exist only for softmax policies"),
        }
    }
}

/// Adapter that lets a [`TabularPolicy`] drive episode sampling: it tracks
/// the growing history and answers with π(·; h).
pub struct PolicyTracker<'a> {
    policy: &'a TabularPolicy,
    history: History,
}

impl<'a> PolicyTracker<'a> {
    pub fn new(policy: &'a TabularPolicy) -> Self {
        PolicyTracker {
            policy,
            history: History::empty(),
        }
    }

    pub fn history(&self) -> &History {
        &self.history
    }
}

impl pomdp_core::Policy for PolicyTracker<'_> {
    fn reset(&mut self, initial_obs: Option<usize>) {
        self.history = match initial_obs {
            Some(o) => History::from_initial_obs(o),
            None => History::empty(),
        };
    }

    fn observe(&mut self, action: usize, obs: usize) {
        self.history.push(action, obs);
    }

    fn action_distribution(&self) -> DiscreteDistribution {
        self.policy.action_distribution(&self.history)
    }
}
