//! Exact truncated values of histories and history-state pairs.
//!
//! Everything here is a finite-depth unrolling of the coupled recursions
//!
//! ```text
//! V(h)    = Σ_a π(a;h) Q(h,a)
//! Q(h,a)  = E_{s|h}[R(s,a)] + γ Σ_o Pr(o|h,a) V(hao)
//! V(h,s)  = Σ_a π(a;h) Q(h,s,a)
//! Q(h,s,a)= R(s,a) + γ E_{s',o|s,a}[V(hao, s')]
//! ```
//!
//! truncated to a fixed number of reward terms; the omitted tail is bounded
//! by `γ^depth · max|R| / (1−γ)`. Episode termination is folded in exactly:
//! a terminal `(s,a)` step keeps its reward and drops its continuation, and
//! terminal states contribute no continuation mass.
//!
//! Memoization is keyed by the canonical history encoding. For reactive
//! policies the future depends on the history only through its belief and
//! last observation, so memo keys collapse onto `(belief bits, last obs,
//! depth)` — this is what makes depth-60 evaluations on two-state models
//! instantaneous instead of exponential. Memo tables live and die with a
//! single public call; the total number of expanded nodes is capped by the
//! enumeration budget.

use crate::belief::Belief;
use crate::error::{OracleError, Result};
use crate::policy::TabularPolicy;
use pomdp_core::{History, Pomdp, TerminalSpec};
use std::collections::HashMap;

/// Number of reward terms kept in truncated value sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Horizon(pub usize);

impl From<usize> for Horizon {
    fn from(depth: usize) -> Self {
        Horizon(depth)
    }
}

/// Default cap on expanded recursion/enumeration nodes per public call.
pub const DEFAULT_BUDGET: usize = 10_000_000;

/// Exact-computation façade over one model (and its termination rules).
pub struct Oracle<'a> {
    pomdp: &'a Pomdp,
    terminals: TerminalSpec,
    budget: usize,
}

impl<'a> Oracle<'a> {
    pub fn new(pomdp: &'a Pomdp) -> Self {
        Oracle {
            pomdp,
            terminals: TerminalSpec::none(),
            budget: DEFAULT_BUDGET,
        }
    }

    pub fn with_terminals(pomdp: &'a Pomdp, terminals: &TerminalSpec) -> Self {
        Oracle {
            pomdp,
            terminals: terminals.clone(),
            budget: DEFAULT_BUDGET,
        }
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.budget = budget;
        self
    }

    pub fn pomdp(&self) -> &Pomdp {
        self.pomdp
    }

    pub fn terminals(&self) -> &TerminalSpec {
        &self.terminals
    }

    pub(crate) fn budget(&self) -> usize {
        self.budget
    }

    /// Terminal-aware posterior over states after `h`.
    pub fn belief_of_history(&self, h: &History) -> Result<Belief> {
        crate::belief::belief_of_history_with_terminals(self.pomdp, &self.terminals, h)
    }

    /// Terminal-aware single Bayes step.
    pub fn belief_update(&self, b: &Belief, a: usize, o: usize) -> Result<Belief> {
        crate::belief::belief_update_with_terminals(self.pomdp, &self.terminals, b, a, o)
    }

    /// Truncated expected return following history `h` under `policy`.
    pub fn v_history(&self, policy: &TabularPolicy, h: &History, hz: Horizon) -> Result<f64> {
        let b = self.belief_of_history(h)?;
        let mut eval = Evaluator::new(self.pomdp, &self.terminals, policy, self.budget);
        eval.v(h, b.probs(), hz.0)
    }

    /// Truncated expected return following `h` with the first action pinned.
    pub fn q_history(
        &self,
        policy: &TabularPolicy,
        h: &History,
        a: usize,
        hz: Horizon,
    ) -> Result<f64> {
        self.pomdp.check_action(a)?;
        let b = self.belief_of_history(h)?;
        let mut eval = Evaluator::new(self.pomdp, &self.terminals, policy, self.budget);
        eval.q(h, b.probs(), a, hz.0)
    }

    /// Truncated expected return given both the history and the latent state.
    pub fn v_history_state(
        &self,
        policy: &TabularPolicy,
        h: &History,
        s: usize,
        hz: Horizon,
    ) -> Result<f64> {
        self.check_pair(h, s)?;
        let mut eval = Evaluator::new(self.pomdp, &self.terminals, policy, self.budget);
        eval.vhs(h, s, hz.0)
    }

    /// As [`Oracle::v_history_state`], first action pinned.
    pub fn q_history_state(
        &self,
        policy: &TabularPolicy,
        h: &History,
        s: usize,
        a: usize,
        hz: Horizon,
    ) -> Result<f64> {
        self.pomdp.check_action(a)?;
        self.check_pair(h, s)?;
        let mut eval = Evaluator::new(self.pomdp, &self.terminals, policy, self.budget);
        eval.qhs(h, s, a, hz.0)
    }

    fn check_pair(&self, h: &History, s: usize) -> Result<()> {
        self.pomdp.check_state(s)?;
        let b = self.belief_of_history(h)?;
        if b.prob(s) == 0.0 {
            return Err(OracleError::UnrealizablePair {
                history: h.key(),
                state: s,
            });
        }
        Ok(())
    }

    /// Truncated expected return of a fresh episode, `E[Σ_{t<depth} γ^t R_t]`,
    /// averaging over the initial observation when the model announces one.
    pub fn expected_return(&self, policy: &TabularPolicy, hz: Horizon) -> Result<f64> {
        let mut eval = Evaluator::new(self.pomdp, &self.terminals, policy, self.budget);
        let mut total = 0.0;
        for (h, alpha) in self.initial_nodes() {
            let z: f64 = alpha.iter().sum();
            if z == 0.0 {
                continue;
            }
            let b: Vec<f64> = alpha.iter().map(|w| w / z).collect();
            total += z * eval.v(&h, &b, hz.0)?;
        }
        Ok(total)
    }

    /// Root nodes of the episode process: one per announced initial
    /// observation (weights `Pr(o₀, running)`), or a single unconditioned
    /// node when the model emits nothing before the first action.
    pub(crate) fn initial_nodes(&self) -> Vec<(History, Vec<f64>)> {
        let init = self.pomdp.initial();
        let masked = |s: usize| -> f64 {
            if self.terminals.is_terminal_state(s) {
                0.0
            } else {
                init.prob(s)
            }
        };
        match self.pomdp.initial_obs() {
            Some(rows) => (0..self.pomdp.n_obs())
                .map(|o0| {
                    let alpha: Vec<f64> =
                        (0..self.pomdp.n_states()).map(|s| masked(s) * rows[s].prob(o0)).collect();
                    (History::from_initial_obs(o0), alpha)
                })
                .filter(|(_, alpha)| alpha.iter().sum::<f64>() > 0.0)
                .collect(),
            None => {
                let alpha: Vec<f64> = (0..self.pomdp.n_states()).map(masked).collect();
                vec![(History::empty(), alpha)]
            }
        }
    }

    /// Largest `|V(h) − Σ_s b(s|h) V(h,s)|` over every realizable history of
    /// length at most `max_len`.
    ///
    /// Horizons are matched per history and scheduled against the episode
    /// clock: a history of length `t` is compared at depth `total − t`, so
    /// the whole sweep walks the single depth-`total` evaluation tree and
    /// one memo table backs all of it. `total` must exceed `max_len`, or the
    /// deepest layer would collapse to a vacuous depth-0 comparison.
    pub fn unbiasedness_max_gap(
        &self,
        policy: &TabularPolicy,
        max_len: usize,
        total: Horizon,
    ) -> Result<f64> {
        if total.0 <= max_len {
            return Err(OracleError::HorizonTooShallow { max_len, horizon: total.0 });
        }
        let layers =
            crate::enumeration::forward_histories(self.pomdp, &self.terminals, policy, max_len, self.budget)?;
        let mut eval = Evaluator::new(self.pomdp, &self.terminals, policy, self.budget);
        let mut worst = 0.0f64;
        for (t, layer) in layers.iter().enumerate() {
            let depth = total.0 - t;
            for node in layer {
                let z: f64 = node.alpha.iter().sum();
                if z == 0.0 {
                    continue;
                }
                let b: Vec<f64> = node.alpha.iter().map(|w| w / z).collect();
                let v = eval.v(&node.history, &b, depth)?;
                let mut e_vhs = 0.0;
                for (s, &bs) in b.iter().enumerate() {
                    if bs > 0.0 {
                        e_vhs += bs * eval.vhs(&node.history, s, depth)?;
                    }
                }
                worst = worst.max((v - e_vhs).abs());
            }
        }
        Ok(worst)
    }
}

// ── The shared recursion engine ──

#[derive(Hash, PartialEq, Eq)]
enum VKey {
    Hist(String, usize),
    /// Reactive collapse: exact belief bits, last observation, depth.
    Collapsed(Vec<u64>, Option<usize>, usize),
}

#[derive(Hash, PartialEq, Eq)]
enum SKey {
    Hist(String, usize, usize),
    Collapsed(Option<usize>, usize, usize),
}

pub(crate) struct Evaluator<'e> {
    pomdp: &'e Pomdp,
    terminals: &'e TerminalSpec,
    policy: &'e TabularPolicy,
    collapse: bool,
    v_memo: HashMap<VKey, f64>,
    s_memo: HashMap<SKey, f64>,
    expanded: usize,
    budget: usize,
}

impl<'e> Evaluator<'e> {
    pub(crate) fn new(
        pomdp: &'e Pomdp,
        terminals: &'e TerminalSpec,
        policy: &'e TabularPolicy,
        budget: usize,
    ) -> Self {
        Evaluator {
            pomdp,
            terminals,
            policy,
            collapse: policy.is_reactive(),
            v_memo: HashMap::new(),
            s_memo: HashMap::new(),
            expanded: 0,
            budget,
        }
    }

    fn charge(&mut self) -> Result<()> {
        self.expanded += 1;
        if self.expanded > self.budget {
            return Err(OracleError::BudgetExceeded { budget: self.budget });
        }
        Ok(())
    }

    fn vkey(&self, h: &History, b: &[f64], depth: usize) -> VKey {
        if self.collapse {
            VKey::Collapsed(b.iter().map(|w| w.to_bits()).collect(), h.last_obs(), depth)
        } else {
            VKey::Hist(h.key(), depth)
        }
    }

    fn skey(&self, h: &History, s: usize, depth: usize) -> SKey {
        if self.collapse {
            SKey::Collapsed(h.last_obs(), s, depth)
        } else {
            SKey::Hist(h.key(), s, depth)
        }
    }

    pub(crate) fn v(&mut self, h: &History, b: &[f64], depth: usize) -> Result<f64> {
        if depth == 0 {
            return Ok(0.0);
        }
        let key = self.vkey(h, b, depth);
        if let Some(&v) = self.v_memo.get(&key) {
            return Ok(v);
        }
        self.charge()?;
        let pi = self.policy.action_distribution(h);
        let mut total = 0.0;
        for a in 0..self.pomdp.n_actions() {
            let pa = pi.prob(a);
            if pa == 0.0 {
                continue;
            }
            total += pa * self.q(h, b, a, depth)?;
        }
        self.v_memo.insert(key, total);
        Ok(total)
    }

    pub(crate) fn q(&mut self, h: &History, b: &[f64], a: usize, depth: usize) -> Result<f64> {
        if depth == 0 {
            return Ok(0.0);
        }
        let mut rbar = 0.0;
        for (s, &bs) in b.iter().enumerate() {
            if bs > 0.0 {
                rbar += bs * self.pomdp.reward(s, a);
            }
        }
        if depth == 1 {
            return Ok(rbar);
        }

        // One sweep builds the unnormalized successor belief per observation.
        let n_states = self.pomdp.n_states();
        let mut per_obs = vec![vec![0.0f64; n_states]; self.pomdp.n_obs()];
        for (s, &bs) in b.iter().enumerate() {
            if bs == 0.0
                || self.terminals.is_terminal_state(s)
                || self.terminals.is_terminal_step(s, a)
            {
                continue;
            }
            let row = self.pomdp.transition_row(s, a);
            for s2 in row.support() {
                if self.terminals.is_terminal_state(s2) {
                    continue;
                }
                let w = bs * row.prob(s2);
                let obs = self.pomdp.obs_row(s, a, s2);
                for o in obs.support() {
                    per_obs[o][s2] += w * obs.prob(o);
                }
            }
        }

        let gamma = self.pomdp.gamma();
        let mut q = rbar;
        for (o, u) in per_obs.iter().enumerate() {
            let z: f64 = u.iter().sum();
            if z == 0.0 {
                continue;
            }
            let child: Vec<f64> = u.iter().map(|w| w / z).collect();
            let hao = h.extended(a, o);
            q += gamma * z * self.v(&hao, &child, depth - 1)?;
        }
        Ok(q)
    }

    pub(crate) fn vhs(&mut self, h: &History, s: usize, depth: usize) -> Result<f64> {
        if depth == 0 {
            return Ok(0.0);
        }
        let key = self.skey(h, s, depth);
        if let Some(&v) = self.s_memo.get(&key) {
            return Ok(v);
        }
        self.charge()?;
        let pi = self.policy.action_distribution(h);
        let mut total = 0.0;
        for a in 0..self.pomdp.n_actions() {
            let pa = pi.prob(a);
            if pa == 0.0 {
                continue;
            }
            total += pa * self.qhs(h, s, a, depth)?;
        }
        self.s_memo.insert(key, total);
        Ok(total)
    }

    pub(crate) fn qhs(&mut self, h: &History, s: usize, a: usize, depth: usize) -> Result<f64> {
        if depth == 0 {
            return Ok(0.0);
        }
        let r = self.pomdp.reward(s, a);
        if depth == 1 || self.terminals.is_terminal_step(s, a) {
            return Ok(r);
        }
        let gamma = self.pomdp.gamma();
        let mut cont = 0.0;
        let row = self.pomdp.transition_row(s, a);
        for s2 in row.support() {
            if self.terminals.is_terminal_state(s2) {
                continue;
            }
            let tp = row.prob(s2);
            let obs = self.pomdp.obs_row(s, a, s2);
            for o in obs.support() {
                let hao = h.extended(a, o);
                cont += tp * obs.prob(o) * self.vhs(&hao, s2, depth - 1)?;
            }
        }
        Ok(r + gamma * cont)
    }
}
