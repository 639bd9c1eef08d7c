use crate::{Error, History, Result};

/// One sampled episode.
///
/// Step-aligned vectors: `states` holds `s_0 .. s_T`, while `actions`,
/// `observations`, and `rewards` hold the `T` entries `x_0 .. x_{T-1}`, so
/// `|states| = |actions| + 1 = |observations| + 1 = |rewards| + 1`.
/// `observations[t]` is emitted on the transition `(s_t, a_t, s_{t+1})`. A
/// pre-action observation, when the model announces one, sits in
/// `initial_obs` and is not part of the step-aligned vectors.
///
/// `truncated` marks episodes stopped by the step cap rather than by a
/// terminal.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<usize>,
    pub actions: Vec<usize>,
    pub observations: Vec<usize>,
    pub rewards: Vec<f64>,
    pub initial_obs: Option<usize>,
    pub truncated: bool,
}

impl Trajectory {
    /// Number of steps `T`.
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    /// Checks the step-alignment invariant.
    pub fn check_shape(&self) -> Result<()> {
        let t = self.actions.len();
        if self.states.len() != t + 1 {
            return Err(Error::TrajectoryShape(format!(
                "{} states for {t} actions",
                self.states.len()
            )));
        }
        if self.observations.len() != t {
            return Err(Error::TrajectoryShape(format!(
                "{} observations for {t} actions",
                self.observations.len()
            )));
        }
        if self.rewards.len() != t {
            return Err(Error::TrajectoryShape(format!(
                "{} rewards for {t} actions",
                self.rewards.len()
            )));
        }
        Ok(())
    }

    /// `Σ_t γ^t r_t`.
    pub fn discounted_return(&self, gamma: f64) -> f64 {
        let mut acc = 0.0;
        let mut scale = 1.0;
        for &r in &self.rewards {
            acc += scale * r;
            scale *= gamma;
        }
        acc
    }

    /// Sum of rewards without discounting.
    pub fn undiscounted_return(&self) -> f64 {
        self.rewards.iter().sum()
    }

    /// The history after the first `t` steps (`t = 0` is the pre-first-action
    /// history, holding at most the pre-action observation).
    pub fn history_prefix(&self, t: usize) -> History {
        let mut h = match self.initial_obs {
            Some(o) => History::from_initial_obs(o),
            None => History::empty(),
        };
        for i in 0..t {
            h.push(self.actions[i], self.observations[i]);
        }
        h
    }

    /// The full history of the episode.
    pub fn full_history(&self) -> History {
        self.history_prefix(self.len())
    }
}
