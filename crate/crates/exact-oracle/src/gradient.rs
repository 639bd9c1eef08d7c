//! Exact truncated policy-loss gradients for softmax tabular policies.
//!
//! The objective is the *loss* `L(θ) = −E[Σ_{t<d} γ^t R_t]`, so minimizing
//! `L` maximizes return. With one logit row per history key, the gradient
//! has a closed per-row form obtained from the score function
//! `∂ log π(a;h) / ∂θ[h][b] = 1[a=b] − π(b;h)` and causality. Two
//! mathematically equal bookkeepings are implemented:
//!
//! * **Symmetric** — critic quantities conditioned on the history alone:
//!   `∂L/∂θ[h][b] = −γ^{|h|} Pr(h) π(b;h) (Q(h,b) − V(h))`.
//! * **Asymmetric** — critic quantities conditioned on history *and* state,
//!   weighted by the joint occupancy `α_h(s) = Pr(h, S=s, running)`:
//!   `∂L/∂θ[h][b] = −γ^{|h|} π(b;h) Σ_s α_h(s) (Q(h,s,b) − V(h,s))`.
//!
//! Because `S_t` is conditionally independent of `A_t` given `H_t`, the two
//! agree entry for entry — provided every value is truncated at the *same*
//! remaining depth `d − |h|`, which is exactly what the evaluator does.
//! Either table equals the true gradient of the truncated return, which is
//! what the finite-difference cross-checks in the tests verify.

use crate::enumeration::forward_histories;
use crate::error::Result;
use crate::policy::TabularPolicy;
use crate::value::{Evaluator, Horizon, Oracle};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradientMode {
    /// History-conditioned critic terms `Q(h,a) − V(h)`.
    Symmetric,
    /// History-state-conditioned terms `Q(h,s,a) − V(h,s)`.
    Asymmetric,
}

/// Dense gradient rows keyed by canonical history encoding.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientTable {
    n_actions: usize,
    entries: BTreeMap<String, Vec<f64>>,
}

impl GradientTable {
    fn new(n_actions: usize) -> Self {
        GradientTable { n_actions, entries: BTreeMap::new() }
    }

    fn row_mut(&mut self, key: String) -> &mut Vec<f64> {
        let n = self.n_actions;
        self.entries.entry(key).or_insert_with(|| vec![0.0; n])
    }

    /// Gradient entry for (history key, action); histories the policy never
    /// reaches carry zero gradient.
    pub fn entry(&self, key: &str, a: usize) -> f64 {
        self.entries.get(key).map_or(0.0, |row| row[a])
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn rows(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    /// Largest entrywise absolute difference, over the union of keys.
    pub fn max_abs_difference(&self, other: &GradientTable) -> f64 {
        self.worst_entry_difference(other).map_or(0.0, |(_, _, gap)| gap)
    }

    /// The (history key, action, |difference|) triple realizing
    /// [`max_abs_difference`](Self::max_abs_difference), or `None` when both
    /// tables are empty. Missing rows compare against zero.
    pub fn worst_entry_difference(&self, other: &GradientTable) -> Option<(String, usize, f64)> {
        let mut worst: Option<(String, usize, f64)> = None;
        let mut consider = |key: &str, a: usize, gap: f64| {
            if worst.as_ref().map_or(true, |(_, _, w)| gap > *w) {
                worst = Some((key.to_string(), a, gap));
            }
        };
        for (key, row) in &self.entries {
            for (a, &v) in row.iter().enumerate() {
                consider(key, a, (v - other.entry(key, a)).abs());
            }
        }
        for (key, row) in &other.entries {
            if !self.entries.contains_key(key) {
                for (a, &v) in row.iter().enumerate() {
                    consider(key, a, v.abs());
                }
            }
        }
        worst
    }

    /// A copy with `delta` added to one entry — a hook for planting a known
    /// defect when exercising failure reporting.
    pub fn with_entry_bumped(&self, key: &str, a: usize, delta: f64) -> GradientTable {
        let mut out = self.clone();
        out.row_mut(key.to_string())[a] += delta;
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.entries
            .values()
            .flat_map(|row| row.iter())
            .fold(0.0f64, |m, &v| m.max(v.abs()))
    }

    /// `history,action,value` rows in key order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("history,action,value\n");
        for (key, row) in &self.entries {
            for (a, v) in row.iter().enumerate() {
                out.push_str(&format!("{key},{a},{v}\n"));
            }
        }
        out
    }
}

impl<'a> Oracle<'a> {
    /// Exact gradient of the truncated policy loss with respect to every
    /// logit row the policy can reach within the horizon.
    pub fn exact_policy_gradient(
        &self,
        policy: &TabularPolicy,
        hz: Horizon,
        mode: GradientMode,
    ) -> Result<GradientTable> {
        if !matches!(policy, TabularPolicy::Softmax { .. }) {
            return Err(crate::error::OracleError::WrongPolicyKind {
                expected: "softmax",
                got: policy.kind_name(),
            });
        }
        let n_actions = policy.n_actions();
        let mut table = GradientTable::new(n_actions);
        if hz.0 == 0 {
            return Ok(table);
        }

        let layers = forward_histories(
            self.pomdp(),
            self.terminals(),
            policy,
            hz.0 - 1,
            self.budget(),
        )?;
        let mut eval = Evaluator::new(self.pomdp(), self.terminals(), policy, self.budget());
        let gamma = self.pomdp().gamma();

        for (t, layer) in layers.iter().enumerate() {
            let remaining = hz.0 - t;
            let discount = gamma.powi(t as i32);
            for node in layer {
                let mass = node.mass();
                if mass == 0.0 {
                    continue;
                }
                let pi = policy.action_distribution(&node.history);
                let row = table.row_mut(node.history.key());
                match mode {
                    GradientMode::Symmetric => {
                        let b = node.belief();
                        let mut q = vec![0.0f64; n_actions];
                        let mut v = 0.0;
                        for a in 0..n_actions {
                            q[a] = eval.q(&node.history, &b, a, remaining)?;
                            v += pi.prob(a) * q[a];
                        }
                        for (a_out, slot) in row.iter_mut().enumerate() {
                            *slot -=
                                discount * mass * pi.prob(a_out) * (q[a_out] - v);
                        }
                    }
                    GradientMode::Asymmetric => {
                        for (s, &w) in node.alpha.iter().enumerate() {
                            if w == 0.0 {
                                continue;
                            }
                            let mut q = vec![0.0f64; n_actions];
                            let mut v = 0.0;
                            for a in 0..n_actions {
                                q[a] = eval.qhs(&node.history, s, a, remaining)?;
                                v += pi.prob(a) * q[a];
                            }
                            for (a_out, slot) in row.iter_mut().enumerate() {
                                *slot -= discount * pi.prob(a_out) * w * (q[a_out] - v);
                            }
                        }
                    }
                }
            }
        }
        Ok(table)
    }
}
