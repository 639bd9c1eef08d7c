//! Monte-Carlo conformance checks: the sampled dynamics of each environment
//! family must match its declared tables. Stochastic rows are tested with a
//! chi-square goodness-of-fit at the 0.999 quantile (so a correct sampler
//! fails any single check with probability 1e-3); deterministic rows are
//! checked exactly. Seeds are pinned, so the suite is reproducible.

use env_suite::{build_goodbad, build_heavenhell, build_shopping};
use env_suite::{GB_ACT_G, GB_STATE_B};
use pomdp_core::seeding::derive_rng;
use pomdp_core::{step, Pomdp};

const DRAWS: usize = 100_000;

/// Upper 0.999 quantiles of the chi-square distribution, indexed by df.
fn chi2_crit(df: usize) -> f64 {
    const SMALL: [f64; 10] = [
        10.828, 13.816, 16.266, 18.467, 20.515, 22.458, 24.322, 26.124, 27.877, 29.588,
    ];
    match df {
        1..=10 => SMALL[df - 1],
        24 => 51.179,
        _ => panic!("no tabulated quantile for df = {df}"),
    }
}

fn chi2_stat(counts: &[u64], expected: &[f64]) -> (f64, usize) {
    assert_eq!(counts.len(), expected.len());
    let mut stat = 0.0;
    let mut df = 0usize;
    for (&c, &e) in counts.iter().zip(expected) {
        if e == 0.0 {
            assert_eq!(c, 0, "impossible outcome was sampled");
            continue;
        }
        let diff = c as f64 - e;
        stat += diff * diff / e;
        df += 1;
    }
    (stat, df.saturating_sub(1))
}

fn assert_matches_distribution(counts: &[u64], probs: &[f64], what: &str) {
    let expected: Vec<f64> = probs.iter().map(|p| p * DRAWS as f64).collect();
    let (stat, df) = chi2_stat(counts, &expected);
    let crit = chi2_crit(df);
    assert!(
        stat <= crit,
        "{what}: chi-square {stat:.2} exceeds {crit:.2} at df {df} (counts {counts:?})"
    );
}

fn initial_counts(pomdp: &Pomdp, seed_path: &[u64]) -> Vec<u64> {
    let mut rng = derive_rng(0xD15E, seed_path);
    let mut counts = vec![0u64; pomdp.n_states()];
    for _ in 0..DRAWS {
        counts[pomdp.initial().sample(&mut rng)] += 1;
    }
    counts
}

// ── Stochastic rows ──

#[test]
fn goodbad_initial_state_is_a_fair_coin() {
    let pomdp = build_goodbad(0.9).unwrap();
    let counts = initial_counts(&pomdp, &[1]);
    assert_matches_distribution(&counts, pomdp.initial().probs(), "two-state initial");
}

#[test]
fn goodbad_emission_from_the_uninformative_state_is_uniform() {
    let pomdp = build_goodbad(0.9).unwrap();
    let mut rng = derive_rng(0xD15E, &[2]);
    let mut counts = vec![0u64; pomdp.n_obs()];
    for _ in 0..DRAWS {
        let out = step(&pomdp, GB_STATE_B, GB_ACT_G, &mut rng).unwrap();
        assert_eq!(out.next_state, GB_STATE_B);
        counts[out.obs] += 1;
    }
    assert_matches_distribution(
        &counts,
        pomdp.obs_row(GB_STATE_B, GB_ACT_G, GB_STATE_B).probs(),
        "uninformative emission",
    );
}

#[test]
fn heavenhell_initial_side_is_a_fair_coin() {
    let (pomdp, _) = build_heavenhell(3).unwrap();
    let counts = initial_counts(&pomdp, &[3]);
    assert_matches_distribution(&counts, pomdp.initial().probs(), "side assignment");
}

#[test]
fn shopping_initial_item_is_uniform_over_cells() {
    let (pomdp, _) = build_shopping(5).unwrap();
    let counts = initial_counts(&pomdp, &[4]);
    // 25 reachable initial states (item anywhere, agent in the corner).
    assert_eq!(counts.iter().filter(|&&c| c > 0).count(), 25);
    assert_matches_distribution(&counts, pomdp.initial().probs(), "item placement");
}

// ── Deterministic rows stay deterministic under sampling ──

#[test]
fn deterministic_rows_never_vary() {
    let (pomdp, _) = build_heavenhell(3).unwrap();
    let mut rng = derive_rng(0xD15E, &[5]);
    for s in 0..pomdp.n_states() {
        for a in 0..pomdp.n_actions() {
            let first = step(&pomdp, s, a, &mut rng).unwrap();
            for _ in 0..20 {
                let again = step(&pomdp, s, a, &mut rng).unwrap();
                assert_eq!(again.next_state, first.next_state);
                assert_eq!(again.obs, first.obs);
                assert_eq!(again.reward, first.reward);
            }
        }
    }
}
