use crate::{DiscreteDistribution, Error, Result};
use std::collections::BTreeSet;
use std::fmt;

/// Observation table with three storage granularities.
///
/// The observation process is `O(o | s, a, s')` in full generality, but every
/// model in this workspace conditions on at most `(a, s')`, and a dense
/// `s * a * s'` table is prohibitively large for the bigger grids. The
/// accessor [`Pomdp::obs_row`] presents the full signature regardless of how
/// rows are stored.
#[derive(Debug, Clone, PartialEq)]
pub enum ObservationModel {
    /// Rows indexed by next state only: `s' -> ΔO`.
    ByNext(Vec<DiscreteDistribution>),
    /// Rows indexed by action and next state: `a * n_states + s' -> ΔO`.
    ByActionNext(Vec<DiscreteDistribution>),
    /// Dense rows: `(s * n_actions + a) * n_states + s' -> ΔO`.
    Full(Vec<DiscreteDistribution>),
}

impl ObservationModel {
    fn expected_rows(&self, n_states: usize, n_actions: usize) -> usize {
        match self {
            ObservationModel::ByNext(_) => n_states,
            ObservationModel::ByActionNext(_) => n_actions * n_states,
            ObservationModel::Full(_) => n_states * n_actions * n_states,
        }
    }

    fn rows(&self) -> &[DiscreteDistribution] {
        match self {
            ObservationModel::ByNext(r) => r,
            ObservationModel::ByActionNext(r) => r,
            ObservationModel::Full(r) => r,
        }
    }

    /// Whether rows depend on the next state alone (and not on `s` or `a`).
    pub fn is_state_only(&self) -> bool {
        matches!(self, ObservationModel::ByNext(_))
    }

    fn describe_row(&self, index: usize, n_states: usize, n_actions: usize) -> String {
        match self {
            ObservationModel::ByNext(_) => format!("s'={index}"),
            ObservationModel::ByActionNext(_) => {
                format!("a={}, s'={}", index / n_states, index % n_states)
            }
            ObservationModel::Full(_) => {
                let s2 = index % n_states;
                let sa = index / n_states;
                format!("s={}, a={}, s'={}", sa / n_actions, sa % n_actions, s2)
            }
        }
    }
}

/// Episode termination rules layered on top of the tabular dynamics.
///
/// Tabular value computations assume an infinite horizon, so terminal
/// *states* must be absorbing with zero reward: entering one ends the episode
/// without disturbing the fixed-point math. Some tasks instead end on an
/// action taken in a particular state (a purchase, say) while the state table
/// itself stays put; those are listed as terminal `(state, action)` pairs,
/// and the episode ends after that step's reward is collected.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TerminalSpec {
    states: BTreeSet<usize>,
    state_actions: BTreeSet<(usize, usize)>,
}

impl TerminalSpec {
    /// A spec with no terminals: every episode runs to the step cap.
    pub fn none() -> Self {
        Self::default()
    }

    pub fn from_states(states: impl IntoIterator<Item = usize>) -> Self {
        Self {
            states: states.into_iter().collect(),
            state_actions: BTreeSet::new(),
        }
    }

    pub fn from_state_actions(pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        Self {
            states: BTreeSet::new(),
            state_actions: pairs.into_iter().collect(),
        }
    }

    pub fn is_terminal_state(&self, state: usize) -> bool {
        self.states.contains(&state)
    }

    /// Whether taking `action` in `state` ends the episode after the step.
    pub fn is_terminal_step(&self, state: usize, action: usize) -> bool {
        self.state_actions.contains(&(state, action))
    }

    pub fn states(&self) -> impl Iterator<Item = usize> + '_ {
        self.states.iter().copied()
    }

    pub fn state_actions(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.state_actions.iter().copied()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty() && self.state_actions.is_empty()
    }
}

/// A finite POMDP: `|S|` states, `|A|` actions, `|O|` observations, a
/// transition table `T(s'|s,a)`, an observation table `O(o|s,a,s')`, a reward
/// table `R(s,a)`, a discount in `[0,1)`, and an initial state distribution.
///
/// Optionally, a model announces a pre-action observation drawn from
/// `initial_obs[s0]` when an episode starts; histories then begin with that
/// observation rather than with the first action.
///
/// Construction checks shapes and the discount only. Numeric table defects
/// (broken rows, non-absorbing terminals) are the province of [`validate`],
/// which reports them as diagnostics instead of refusing to build the value.
#[derive(Debug, Clone, PartialEq)]
pub struct Pomdp {
    n_states: usize,
    n_actions: usize,
    n_obs: usize,
    transition: Vec<DiscreteDistribution>,
    observation: ObservationModel,
    reward: Vec<f64>,
    gamma: f64,
    initial: DiscreteDistribution,
    initial_obs: Option<Vec<DiscreteDistribution>>,
    state_labels: Option<Vec<String>>,
    action_labels: Option<Vec<String>>,
    obs_labels: Option<Vec<String>>,
}

impl Pomdp {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        n_states: usize,
        n_actions: usize,
        n_obs: usize,
        transition: Vec<DiscreteDistribution>,
        observation: ObservationModel,
        reward: Vec<f64>,
        gamma: f64,
        initial: DiscreteDistribution,
        initial_obs: Option<Vec<DiscreteDistribution>>,
    ) -> Result<Self> {
        if transition.len() != n_states * n_actions {
            return Err(Error::TableShape {
                table: "transition",
                expected: n_states * n_actions,
                got: transition.len(),
            });
        }
        let expected_obs = observation.expected_rows(n_states, n_actions);
        if observation.rows().len() != expected_obs {
            return Err(Error::TableShape {
                table: "observation",
                expected: expected_obs,
                got: observation.rows().len(),
            });
        }
        if reward.len() != n_states * n_actions {
            return Err(Error::TableShape {
                table: "reward",
                expected: n_states * n_actions,
                got: reward.len(),
            });
        }
        if !(gamma.is_finite() && (0.0..1.0).contains(&gamma)) {
            return Err(Error::BadGamma { gamma });
        }
        if initial.len() != n_states {
            return Err(Error::RowLength {
                table: "initial",
                expected: n_states,
                got: initial.len(),
            });
        }
        if let Some(rows) = &initial_obs {
            if rows.len() != n_states {
                return Err(Error::TableShape {
                    table: "initial observation",
                    expected: n_states,
                    got: rows.len(),
                });
            }
        }
        Ok(Self {
            n_states,
            n_actions,
            n_obs,
            transition,
            observation,
            reward,
            gamma,
            initial,
            initial_obs,
            state_labels: None,
            action_labels: None,
            obs_labels: None,
        })
    }

    pub fn with_labels(
        mut self,
        states: Option<Vec<String>>,
        actions: Option<Vec<String>>,
        obs: Option<Vec<String>>,
    ) -> Self {
        self.state_labels = states;
        self.action_labels = actions;
        self.obs_labels = obs;
        self
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn n_obs(&self) -> usize {
        self.n_obs
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn initial(&self) -> &DiscreteDistribution {
        &self.initial
    }

    /// Per-state distributions of the pre-action observation, if the model
    /// announces one at episode start.
    pub fn initial_obs(&self) -> Option<&[DiscreteDistribution]> {
        self.initial_obs.as_deref()
    }

    /// `T(· | s, a)`.
    pub fn transition_row(&self, s: usize, a: usize) -> &DiscreteDistribution {
        &self.transition[s * self.n_actions + a]
    }

    /// `O(· | s, a, s')`.
    pub fn obs_row(&self, s: usize, a: usize, s2: usize) -> &DiscreteDistribution {
        match &self.observation {
            ObservationModel::ByNext(rows) => &rows[s2],
            ObservationModel::ByActionNext(rows) => &rows[a * self.n_states + s2],
            ObservationModel::Full(rows) => {
                &rows[(s * self.n_actions + a) * self.n_states + s2]
            }
        }
    }

    pub fn observation_model(&self) -> &ObservationModel {
        &self.observation
    }

    /// `R(s, a)`.
    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.reward[s * self.n_actions + a]
    }

    pub fn state_label(&self, s: usize) -> String {
        match &self.state_labels {
            Some(l) => l[s].clone(),
            None => s.to_string(),
        }
    }

    pub fn action_label(&self, a: usize) -> String {
        match &self.action_labels {
            Some(l) => l[a].clone(),
            None => a.to_string(),
        }
    }

    pub fn obs_label(&self, o: usize) -> String {
        match &self.obs_labels {
            Some(l) => l[o].clone(),
            None => o.to_string(),
        }
    }

    pub fn state_labels(&self) -> Option<&[String]> {
        self.state_labels.as_deref()
    }

    pub fn action_labels(&self) -> Option<&[String]> {
        self.action_labels.as_deref()
    }

    pub fn obs_labels(&self) -> Option<&[String]> {
        self.obs_labels.as_deref()
    }

    pub fn check_state(&self, s: usize) -> Result<()> {
        if s >= self.n_states {
            return Err(Error::StateOutOfRange {
                state: s,
                n_states: self.n_states,
            });
        }
        Ok(())
    }

    pub fn check_action(&self, a: usize) -> Result<()> {
        if a >= self.n_actions {
            return Err(Error::ActionOutOfRange {
                action: a,
                n_actions: self.n_actions,
            });
        }
        Ok(())
    }

    pub fn check_obs(&self, o: usize) -> Result<()> {
        if o >= self.n_obs {
            return Err(Error::ObservationOutOfRange {
                obs: o,
                n_obs: self.n_obs,
            });
        }
        Ok(())
    }
}

/// One defect found by [`validate`], naming the offending table row.
#[derive(Debug, Clone, PartialEq)]
pub enum Diagnostic {
    BadGamma { gamma: f64 },
    BadInitial { detail: String },
    BadTransitionRow { s: usize, a: usize, detail: String },
    BadObservationRow { row: String, detail: String },
    BadInitialObsRow { s: usize, detail: String },
    NonFiniteReward { s: usize, a: usize, value: f64 },
    TerminalOutOfRange { s: usize },
    TerminalNotAbsorbing { s: usize, a: usize, self_loop: f64 },
    TerminalActionOutOfRange { s: usize, a: usize },
    TerminalStepMovesState { s: usize, a: usize, self_loop: f64 },
    LabelCountMismatch { axis: &'static str, expected: usize, got: usize },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::BadGamma { gamma } => write!(f, "discount factor {gamma} outside [0, 1)"),
            Diagnostic::BadInitial { detail } => {
                write!(f, "initial state distribution: {detail}")
            }
            Diagnostic::BadTransitionRow { s, a, detail } => {
                write!(f, "transition row (s={s}, a={a}): {detail}")
            }
            Diagnostic::BadObservationRow { row, detail } => {
                write!(f, "observation row ({row}): {detail}")
            }
            Diagnostic::BadInitialObsRow { s, detail } => {
                write!(f, "initial observation row (s={s}): {detail}")
            }
            Diagnostic::NonFiniteReward { s, a, value } => {
                write!(f, "reward entry (s={s}, a={a}) is not finite: {value}")
            }
            Diagnostic::TerminalOutOfRange { s } => {
                write!(f, "terminal state {s} is out of range")
            }
            Diagnostic::TerminalNotAbsorbing { s, a, self_loop } => write!(
                f,
                "terminal state {s} must self-loop under every action; T({s}|{s},{a}) = {self_loop}"
            ),
            Diagnostic::TerminalActionOutOfRange { s, a } => {
                write!(f, "terminal pair (s={s}, a={a}) is out of range")
            }
            Diagnostic::TerminalStepMovesState { s, a, self_loop } => write!(
                f,
                "terminal pair (s={s}, a={a}) must leave the state in place; T({s}|{s},{a}) = {self_loop}"
            ),
            Diagnostic::LabelCountMismatch { axis, expected, got } => {
                write!(f, "{axis} labels: expected {expected}, got {got}")
            }
        }
    }
}

fn row_defect(row: &DiscreteDistribution, expected_len: usize) -> Option<String> {
    if row.len() != expected_len {
        return Some(format!(
            "support size {} does not match {expected_len}",
            row.len()
        ));
    }
    match row.check() {
        Ok(()) => None,
        Err(e) => Some(e.to_string()),
    }
}

/// Checks every numeric invariant of the model and the terminal spec,
/// returning one diagnostic per defect. An empty vector means the model is
/// sound.
pub fn validate(pomdp: &Pomdp, terminals: &TerminalSpec) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let (ns, na) = (pomdp.n_states, pomdp.n_actions);

    if !(pomdp.gamma.is_finite() && (0.0..1.0).contains(&pomdp.gamma)) {
        out.push(Diagnostic::BadGamma { gamma: pomdp.gamma });
    }
    if let Some(detail) = row_defect(&pomdp.initial, ns) {
        out.push(Diagnostic::BadInitial { detail });
    }
    for s in 0..ns {
        for a in 0..na {
            if let Some(detail) = row_defect(pomdp.transition_row(s, a), ns) {
                out.push(Diagnostic::BadTransitionRow { s, a, detail });
            }
            let r = pomdp.reward(s, a);
            if !r.is_finite() {
                out.push(Diagnostic::NonFiniteReward { s, a, value: r });
            }
        }
    }
    for (i, row) in pomdp.observation.rows().iter().enumerate() {
        if let Some(detail) = row_defect(row, pomdp.n_obs) {
            out.push(Diagnostic::BadObservationRow {
                row: pomdp.observation.describe_row(i, ns, na),
                detail,
            });
        }
    }
    if let Some(rows) = &pomdp.initial_obs {
        for (s, row) in rows.iter().enumerate() {
            if let Some(detail) = row_defect(row, pomdp.n_obs) {
                out.push(Diagnostic::BadInitialObsRow { s, detail });
            }
        }
    }

    for s in terminals.states() {
        if s >= ns {
            out.push(Diagnostic::TerminalOutOfRange { s });
            continue;
        }
        for a in 0..na {
            let self_loop = pomdp.transition_row(s, a).prob(s);
            if (self_loop - 1.0).abs() > crate::SUM_TOLERANCE {
                out.push(Diagnostic::TerminalNotAbsorbing { s, a, self_loop });
            }
        }
    }
    for (s, a) in terminals.state_actions() {
        if s >= ns || a >= na {
            out.push(Diagnostic::TerminalActionOutOfRange { s, a });
            continue;
        }
        let self_loop = pomdp.transition_row(s, a).prob(s);
        if (self_loop - 1.0).abs() > crate::SUM_TOLERANCE {
            out.push(Diagnostic::TerminalStepMovesState { s, a, self_loop });
        }
    }

    for (axis, labels, expected) in [
        ("state", &pomdp.state_labels, ns),
        ("action", &pomdp.action_labels, na),
        ("observation", &pomdp.obs_labels, pomdp.n_obs),
    ] {
        if let Some(l) = labels {
            if l.len() != expected {
                out.push(Diagnostic::LabelCountMismatch {
                    axis,
                    expected,
                    got: l.len(),
                });
            }
        }
    }

    out
}
