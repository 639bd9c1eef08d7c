//! Gradient tables against finite differences and against each other.
//!
//! The history-critic and history-state-critic bookkeepings are equal in
//! expectation term by term, so their tables must agree entrywise; and both
//! claim to be the gradient of the truncated policy loss, so nudging any
//! single logit and re-evaluating the truncated return must reproduce each
//! entry (with the sign flipped: the loss is the negated return).

use exact_oracle::{
    random_pomdp, random_softmax_policy, GradientMode, Horizon, Oracle,
};

#[test]
fn the_two_bookkeepings_agree_on_random_models() {
    for seed in 0..15u64 {
        let p = random_pomdp(seed);
        let pol = random_softmax_policy(seed ^ 0x5EED, p.n_actions());
        let oracle = Oracle::new(&p);
        let sym = oracle
            .exact_policy_gradient(&pol, Horizon(3), GradientMode::Symmetric)
            .unwrap();
        let asym = oracle
            .exact_policy_gradient(&pol, Horizon(3), GradientMode::Asymmetric)
            .unwrap();
        assert!(!sym.is_empty(), "seed {seed} produced an empty table");
        let diff = sym.max_abs_difference(&asym);
        assert!(diff <= 1e-10, "seed {seed}: entrywise difference {diff}");
    }
}

#[test]
fn every_entry_differentiates_the_truncated_return() {
    let delta = 1e-5;
    for seed in [2u64, 5, 11] {
        let p = random_pomdp(seed);
        let pol = random_softmax_policy(seed ^ 0xD1FF, p.n_actions());
        let oracle = Oracle::new(&p);
        let hz = Horizon(3);
        let table = oracle
            .exact_policy_gradient(&pol, hz, GradientMode::Asymmetric)
            .unwrap();
        for (key, row) in table.rows() {
            for (a, &g) in row.iter().enumerate() {
                let up = pol.with_logit_nudged(key, a, delta);
                let dn = pol.with_logit_nudged(key, a, -delta);
                let j_up = oracle.expected_return(&up, hz).unwrap();
                let j_dn = oracle.expected_return(&dn, hz).unwrap();
                let fd = (j_up - j_dn) / (2.0 * delta);
                assert!(
                    (g + fd).abs() < 5e-7,
                    "seed {seed}, {key}, a={a}: table {g} vs return slope {fd}"
                );
            }
        }
    }
}

#[test]
fn unreached_rows_carry_no_gradient() {
    let p = random_pomdp(4);
    let pol = random_softmax_policy(44, p.n_actions());
    let oracle = Oracle::new(&p);
    let table = oracle
        .exact_policy_gradient(&pol, Horizon(2), GradientMode::Symmetric)
        .unwrap();
    // A key that cannot occur (way beyond the horizon) reads as zero.
    assert_eq!(table.entry("no-such-history", 0), 0.0);
    // And nudging such a row leaves the return untouched.
    let j = oracle.expected_return(&pol, Horizon(2)).unwrap();
    let nudged = pol.with_logit_nudged("no-such-history", 0, 0.3);
    let j2 = oracle.expected_return(&nudged, Horizon(2)).unwrap();
    assert_eq!(j, j2);
}
