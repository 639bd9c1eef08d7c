//! Does the sampled gradient agree with the closed-form one?
//!
//! With the critic pinned to exact values at matched depths, each episode's
//! score-function contribution is an unbiased draw of the truncated
//! objective's gradient — so over many episodes the per-entry sample mean
//! must sit within a few standard errors of the exact entry. This holds in
//! logit-table space for both TD-error forms, and in network parameter space
//! once the chain rule carries the table gradient through the policy
//! network.

use agent_trainer::{
    exact_net_policy_gradient, sampled_net_policy_gradient, sampled_policy_gradient,
    AgentNets, CriticKind, NetDims, OracleValues,
};
use env_suite::build_goodbad;
use exact_oracle::{
    forward_histories, GradientMode, Horizon, Oracle, TabularPolicy, DEFAULT_BUDGET,
};
use pomdp_core::TerminalSpec;

const EPISODES: u64 = 10_000;
const POLICY_SEED: u64 = 41;
const POLICY_SCALE: f64 = 0.7;

fn calibrate(mode: GradientMode, seed: u64) {
    let p = build_goodbad(0.9).unwrap();
    let terms = TerminalSpec::none();
    let policy = TabularPolicy::softmax(POLICY_SEED, POLICY_SCALE, 2);
    let hz = Horizon(3);

    let stats =
        sampled_policy_gradient(&p, &terms, &policy, hz, EPISODES, mode, seed).unwrap();
    let oracle = Oracle::with_terminals(&p, &terms);
    let exact = oracle.exact_policy_gradient(&policy, hz, mode).unwrap();
    let cal = stats.compare(&exact);

    // Three layers of reachable histories (2, 8, and 32 rows), two actions.
    assert_eq!(cal.entries, 84);
    assert!(
        cal.worst_z <= 3.0,
        "{mode:?}: worst z {} at {:?} (max gap {})",
        cal.worst_z,
        cal.worst_entry,
        cal.max_abs_gap
    );
    // The pinned TD error is mean-zero by construction.
    let gate = 3.0 * stats.delta0_sem();
    assert!(
        stats.delta0_mean().abs() <= gate,
        "{mode:?}: delta0 {} exceeds {gate}",
        stats.delta0_mean()
    );
}

// ── Logit-table space ──

#[test]
fn symmetric_estimates_sit_within_three_standard_errors_of_exact() {
    calibrate(GradientMode::Symmetric, 1201);
}

#[test]
fn asymmetric_estimates_sit_within_three_standard_errors_of_exact() {
    calibrate(GradientMode::Asymmetric, 1201);
}

// ── Network parameter space ──

#[test]
fn network_space_estimates_match_the_chain_rule_gradient() {
    let p = build_goodbad(0.9).unwrap();
    let terms = TerminalSpec::none();
    let nets =
        AgentNets::with_dims(CriticKind::History, 2, 2, 2, NetDims::tiny(), 601).unwrap();
    let hz = Horizon(2);

    // Materialize the network's policy as a logit table: reachability under
    // any softmax table covers every action–observation combination, so the
    // uniform table enumerates the right keys, and nudging each row by the
    // network's log-probabilities reproduces its distributions exactly.
    let mut table_policy = TabularPolicy::softmax(0, 0.0, 2);
    let layers = forward_histories(&p, &terms, &table_policy, hz.0, DEFAULT_BUDGET).unwrap();
    for layer in &layers {
        for node in layer {
            let probs = nets.policy_distribution(&node.history);
            for (b, &pb) in probs.probs().iter().enumerate() {
                table_policy =
                    table_policy.with_logit_nudged(&node.history.key(), b, pb.ln());
            }
        }
    }
    for layer in &layers {
        for node in layer {
            let want = nets.policy_distribution(&node.history);
            let got = table_policy.action_distribution(&node.history);
            for b in 0..2 {
                assert!(
                    (want.prob(b) - got.prob(b)).abs() < 1e-12,
                    "materialization drifted at {}",
                    node.history
                );
            }
        }
    }

    let values = OracleValues::tabulate(&p, &terms, &table_policy, hz).unwrap();
    let oracle = Oracle::with_terminals(&p, &terms);
    for (mode, seed) in [(GradientMode::Symmetric, 71), (GradientMode::Asymmetric, 71)] {
        let table = oracle.exact_policy_gradient(&table_policy, hz, mode).unwrap();
        let exact = exact_net_policy_gradient(&nets, &table, values.support()).unwrap();
        let stats =
            sampled_net_policy_gradient(&p, &terms, &nets, &values, mode, 4_000, seed)
                .unwrap();
        let cal = stats.compare(&exact, nets.policy_params());
        assert!(cal.entries > 200, "expected every network coordinate covered");
        assert!(
            cal.worst_z <= 4.0,
            "{mode:?}: worst z {} at {:?} (max gap {})",
            cal.worst_z,
            cal.worst_entry,
            cal.max_abs_gap
        );
    }
}
