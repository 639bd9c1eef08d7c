use std::fmt;

/// An action-observation history.
///
/// A history is an ordered sequence of `(action, observation)` pairs,
/// optionally preceded by an observation emitted before the first action
/// (models that announce something about the initial state use this; see
/// [`crate::Pomdp::initial_obs`]). The empty history, before any action has
/// been taken, is valid.
///
/// `len` counts pairs only: a history holding just a pre-action observation
/// has length 0.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct History {
    initial_obs: Option<usize>,
    steps: Vec<(usize, usize)>,
}

impl History {
    /// The empty history.
    pub fn empty() -> Self {
        Self::default()
    }

    /// A history holding only a pre-action observation.
    pub fn from_initial_obs(obs: usize) -> Self {
        Self {
            initial_obs: Some(obs),
            steps: Vec::new(),
        }
    }

    /// Number of `(action, observation)` pairs.
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty() && self.initial_obs.is_none()
    }

    pub fn initial_obs(&self) -> Option<usize> {
        self.initial_obs
    }

    pub fn steps(&self) -> &[(usize, usize)] {
        &self.steps
    }

    /// Appends one `(action, observation)` pair in place.
    pub fn push(&mut self, action: usize, obs: usize) {
        self.steps.push((action, obs));
    }

    /// The history `h a o`: this history extended by one pair.
    pub fn extended(&self, action: usize, obs: usize) -> Self {
        let mut h = self.clone();
        h.push(action, obs);
        h
    }

    /// Most recent observation: the last pair's, or the pre-action one.
    pub fn last_obs(&self) -> Option<usize> {
        self.steps.last().map(|&(_, o)| o).or(self.initial_obs)
    }

    /// Truncates to the last `k` pairs, dropping the pre-action observation
    /// whenever any pair is dropped.
    pub fn suffix(&self, k: usize) -> Self {
        if self.steps.len() <= k {
            return self.clone();
        }
        Self {
            initial_obs: None,
            steps: self.steps[self.steps.len() - k..].to_vec(),
        }
    }

    /// Canonical text encoding, usable as a memoization or table key.
    ///
    /// Examples: `-` (empty), `o1` (pre-action observation 1),
    /// `o1.a0o1.a1o0` (that observation followed by two pairs).
    pub fn key(&self) -> String {
        let mut parts: Vec<String> = Vec::with_capacity(self.steps.len() + 1);
        if let Some(o) = self.initial_obs {
            parts.push(format!("o{o}"));
        }
        for &(a, o) in &self.steps {
            parts.push(format!("a{a}o{o}"));
        }
        if parts.is_empty() {
            "-".to_string()
        } else {
            parts.join(".")
        }
    }
}

impl fmt::Display for History {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key())
    }
}
