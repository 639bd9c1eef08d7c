//! The two routes to per-timestep state values must agree exactly.
//!
//! The fast route merges histories sharing a memo key and propagates joint
//! weights; the slow route enumerates every trajectory prefix separately.
//! Both truncate the backward recursion at the same horizon, so agreement
//! is to rounding, not to a modeling tolerance.

use exact_oracle::{
    random_historyful_policy, random_pomdp_sized, random_reactive_policy,
    random_softmax_policy, v_timed_state_via_trajectories, Horizon, ObsGranularity, Oracle,
    OracleError, TabularPolicy,
};
use pomdp_core::TerminalSpec;

#[test]
fn merged_and_trajectory_tree_values_coincide() {
    let granularities =
        [ObsGranularity::StateOnly, ObsGranularity::ActionNext, ObsGranularity::Full];
    for seed in 0..9u64 {
        let gamma = 0.55 + 0.1 * (seed % 4) as f64;
        let p = random_pomdp_sized(
            seed,
            3,
            2,
            2,
            gamma,
            granularities[(seed % 3) as usize],
            seed % 2 == 0,
        );
        let pol: TabularPolicy = match seed % 3 {
            0 => random_reactive_policy(seed ^ 0x31, p.n_obs(), p.n_actions()),
            1 => random_historyful_policy(seed ^ 0x32, p.n_actions()),
            _ => random_softmax_policy(seed ^ 0x33, p.n_actions()),
        };
        let oracle = Oracle::new(&p);
        let none = TerminalSpec::none();
        for t in 0..=2usize {
            let fast = oracle.timed_values(&pol, t, Horizon(3)).unwrap();
            for s in 0..p.n_states() {
                let slow = v_timed_state_via_trajectories(
                    &p,
                    &none,
                    &pol,
                    t,
                    s,
                    Horizon(3),
                    5_000_000,
                );
                match (fast[s], slow) {
                    (Some(v_fast), Ok(v_slow)) => assert!(
                        (v_fast - v_slow).abs() < 1e-10,
                        "seed {seed}, t={t}, s={s}: {v_fast} vs {v_slow}"
                    ),
                    (None, Err(OracleError::UnreachableTimedState { .. })) => {}
                    (fast_v, slow_v) => panic!(
                        "seed {seed}, t={t}, s={s}: reachability disagrees \
                         ({fast_v:?} vs {slow_v:?})"
                    ),
                }
            }
        }
    }
}

#[test]
fn horizons_matter_and_match() {
    // Growing the horizon changes both routes in lockstep, confirming the
    // truncation depths really are aligned (an off-by-one would show here).
    let p = random_pomdp_sized(17, 3, 2, 2, 0.9, ObsGranularity::StateOnly, true);
    let pol = random_softmax_policy(170, p.n_actions());
    let oracle = Oracle::new(&p);
    let none = TerminalSpec::none();
    for hz in 1..=4usize {
        let fast = oracle.v_timed_state(&pol, 1, 0, Horizon(hz)).unwrap();
        let slow =
            v_timed_state_via_trajectories(&p, &none, &pol, 1, 0, Horizon(hz), 5_000_000)
                .unwrap();
        assert!(
            (fast - slow).abs() < 1e-10,
            "hz={hz}: {fast} vs {slow}"
        );
    }
    // And the value genuinely moves with the horizon on this model.
    let short = oracle.v_timed_state(&pol, 1, 0, Horizon(1)).unwrap();
    let long = oracle.v_timed_state(&pol, 1, 0, Horizon(4)).unwrap();
    assert!((short - long).abs() > 1e-6, "degenerate test model");
}
