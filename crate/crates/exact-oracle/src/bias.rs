//! Side-by-side comparison of three value notions at one history.
//!
//! For a fixed history `h` the report collects
//!
//! * `v_h` — the history value `V(h)` (truncated),
//! * `e_vs` — the belief-weighted *state* values `Σ_s b(s|h) V(s)`, which
//!   exist only for reactive policies on state-only observation channels,
//! * `e_vhs` — the belief-weighted *history-state* values
//!   `Σ_s b(s|h) V(h,s)` at the same truncation depth,
//!
//! and the two absolute gaps. `e_vhs` always agrees with `v_h`; `e_vs` can
//! disagree, and on the two-state good/bad model it must: bootstrapping
//! through state values inflates the estimate by exactly 1/6 per step, for
//! every discount factor. [`goodbad_contradiction`] isolates that algebra.

use crate::belief::predictive_observation;
use crate::error::Result;
use crate::policy::TabularPolicy;
use crate::reactive::{state_only_obs_rows, v_state_reactive};
use crate::value::{Evaluator, Horizon, Oracle};
use env_suite::build_goodbad;
use pomdp_core::{DiscreteDistribution, History, TerminalSpec};

/// Three value estimates for one history, plus their disagreements.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasReport {
    /// Truncated history value `V(h)`.
    pub v_h: f64,
    /// `Σ_s b(s|h) V(s)` with infinite-horizon state values, when state
    /// values exist at all (reactive policy, state-only observations).
    pub e_vs: Option<f64>,
    /// `Σ_s b(s|h) V(h,s)` at the same truncation depth as `v_h`.
    pub e_vhs: f64,
    /// `|v_h − e_vs|`.
    pub gap_state: Option<f64>,
    /// `|v_h − e_vhs|`.
    pub gap_hs: f64,
}

impl BiasReport {
    pub fn csv_header() -> &'static str {
        "v_h,e_vs,e_vhs,gap_state,gap_hs"
    }

    pub fn to_csv_row(&self) -> String {
        let opt = |v: &Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{}",
            self.v_h,
            opt(&self.e_vs),
            self.e_vhs,
            opt(&self.gap_state),
            self.gap_hs
        )
    }

    pub fn to_csv(&self) -> String {
        format!("{}\n{}\n", Self::csv_header(), self.to_csv_row())
    }
}

impl<'a> Oracle<'a> {
    /// Build a [`BiasReport`] for `policy` at `h`, truncating both history
    /// and history-state values at `hz`.
    pub fn bias_report(
        &self,
        policy: &TabularPolicy,
        h: &History,
        hz: Horizon,
    ) -> Result<BiasReport> {
        let b = self.belief_of_history(h)?;
        let mut eval = Evaluator::new(self.pomdp(), self.terminals(), policy, self.budget());
        let v_h = eval.v(h, b.probs(), hz.0)?;
        let mut e_vhs = 0.0;
        for (s, &bs) in b.probs().iter().enumerate() {
            if bs > 0.0 {
                e_vhs += bs * eval.vhs(h, s, hz.0)?;
            }
        }
        // State values exist only in the reactive, state-only-channel
        // regime; elsewhere the column is empty rather than approximated.
        let e_vs = if policy.is_reactive() && state_only_obs_rows(self.pomdp()).is_ok() {
            let v_s = v_state_reactive(self.pomdp(), self.terminals(), policy)?;
            Some(b.expectation(&v_s))
        } else {
            None
        };
        Ok(BiasReport {
            v_h,
            e_vs,
            e_vhs,
            gap_state: e_vs.map(|e| (v_h - e).abs()),
            gap_hs: (v_h - e_vhs).abs(),
        })
    }
}

/// The two-state bootstrap contradiction, as a function of the discount.
///
/// Under the mirror policy, condition on the history "initial observation
/// `g`" and expand one lookahead step through *state* values:
///
/// * `lhs`  — `E_{s|h}[V(s)]`: the state-value summary of `h` itself;
/// * `rhs`  — `E[r] + γ Σ_o Pr(o|h,a_π) E_{s|hao}[V(s)]`: the same summary
///   rebuilt from its own one-step bootstrap.
///
/// If state values were a consistent summary of histories these would be
/// equal. The returned `gap = rhs − lhs` works out to exactly 1/6 for every
/// discount in `[0, 1)`: conditioning on the next observation shifts the
/// belief by more than the state-value average can absorb.
pub fn goodbad_contradiction(gamma: f64) -> Result<(f64, f64, f64)> {
    let p = build_goodbad(gamma)?;
    let mirror = TabularPolicy::reactive(vec![
        DiscreteDistribution::delta(0, 2),
        DiscreteDistribution::delta(1, 2),
    ]);
    let v_s = v_state_reactive(&p, &TerminalSpec::none(), &mirror)?;

    let h = History::from_initial_obs(0);
    let b = crate::belief::belief_of_history(&p, &h)?;
    let lhs = b.expectation(&v_s);

    // The mirror policy plays `g` after the good observation.
    let a = 0;
    let mut mean_reward = 0.0;
    for (s, &bs) in b.probs().iter().enumerate() {
        mean_reward += bs * p.reward(s, a);
    }
    let pred = predictive_observation(&p, &b, a);
    let mut bootstrap = 0.0;
    for o in pred.support() {
        let b_next = crate::belief::belief_update(&p, &b, a, o)?;
        bootstrap += pred.prob(o) * b_next.expectation(&v_s);
    }
    let rhs = mean_reward + gamma * bootstrap;
    Ok((lhs, rhs, rhs - lhs))
}

#[cfg(test)]
mod tests {
    use super::*;

    // ── The frozen γ = 0.9 instance ──

    #[test]
    fn contradiction_numbers_at_point_nine() {
        let (lhs, rhs, gap) = goodbad_contradiction(0.9).unwrap();
        assert!((lhs - 25.0 / 3.0).abs() < 1e-12, "lhs = {lhs}");
        assert!((rhs - 8.5).abs() < 1e-12, "rhs = {rhs}");
        assert!((gap - 1.0 / 6.0).abs() < 1e-12, "gap = {gap}");
    }

    #[test]
    fn gap_is_one_sixth_for_every_discount() {
        for gamma in [0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95, 0.989] {
            let (_, _, gap) = goodbad_contradiction(gamma).unwrap();
            assert!((gap - 1.0 / 6.0).abs() < 1e-12, "γ={gamma}: gap={gap}");
        }
    }

    // ── Reports ──

    #[test]
    fn report_on_goodbad_shows_the_state_bias_and_no_pair_bias() {
        let p = build_goodbad(0.9).unwrap();
        let oracle = Oracle::new(&p);
        let mirror = TabularPolicy::reactive(vec![
            DiscreteDistribution::delta(0, 2),
            DiscreteDistribution::delta(1, 2),
        ]);
        let h = History::from_initial_obs(0);
        let report = oracle.bias_report(&mirror, &h, Horizon(60)).unwrap();
        // History and history-state values agree to truncation noise.
        assert!(report.gap_hs < 1e-6, "gap_hs = {}", report.gap_hs);
        // The state-value summary misses by a sixth, less tail effects.
        let gap = report.gap_state.expect("state values exist here");
        assert!(gap > 0.05, "gap_state = {gap}");
        assert!((report.e_vs.unwrap() - 25.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn historyful_policies_leave_the_state_column_empty() {
        let p = build_goodbad(0.9).unwrap();
        let oracle = Oracle::new(&p);
        let pol = TabularPolicy::historyful(2, crate::policy::DefaultRow::Uniform);
        let h = History::from_initial_obs(0);
        let report = oracle.bias_report(&pol, &h, Horizon(10)).unwrap();
        assert!(report.e_vs.is_none());
        assert!(report.gap_state.is_none());
        assert!(report.gap_hs < 1e-9);
    }

    #[test]
    fn csv_round_trips_the_empty_column() {
        let report = BiasReport {
            v_h: 1.5,
            e_vs: None,
            e_vhs: 1.5,
            gap_state: None,
            gap_hs: 0.0,
        };
        let csv = report.to_csv();
        assert_eq!(csv, "v_h,e_vs,e_vhs,gap_state,gap_hs\n1.5,,1.5,,0\n");
    }
}
