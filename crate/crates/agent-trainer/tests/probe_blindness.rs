//! What a critic can and cannot tell apart is an architectural fact.
//!
//! The four fork situations in the length-4 corridor pair up so that two
//! share a hidden state and two share a history. A critic wired to read only
//! one of the coordinates must return bit-identical values across the pair
//! that varies the other — before training, after training, always.

use agent_trainer::{probe_critic, train, AgentNets, CriticKind, NetDims, TrainConfig, TrainError};
use env_suite::{build_heavenhell, fork_probes};

fn fresh(kind: CriticKind, seed: u64) -> AgentNets {
    let (p, _) = build_heavenhell(4).unwrap();
    AgentNets::with_dims(kind, p.n_actions(), p.n_obs(), p.n_states(), NetDims::tiny(), seed)
        .unwrap()
}

// ── Equality across the blind coordinate ──

#[test]
fn the_state_critic_cannot_distinguish_priest_visit_variants() {
    let (p, terms) = build_heavenhell(4).unwrap();
    let probes = fork_probes(4).unwrap();
    for seed in [3, 17, 2024] {
        let nets = fresh(CriticKind::State, seed);
        let vals = probe_critic(&nets, &p, &terms, &probes).unwrap();
        // Probes 0 and 2 share the heaven-left fork state; 1 and 3 the
        // heaven-right one. The histories differ but the critic cannot see
        // them.
        assert_eq!(vals[0], vals[2], "seed {seed}");
        assert_eq!(vals[1], vals[3], "seed {seed}");
        // Across sides the state differs, so the values generally do too.
        assert_ne!(vals[0], vals[1], "seed {seed}");
    }
}

#[test]
fn the_history_critic_cannot_distinguish_heaven_side_variants() {
    let (p, terms) = build_heavenhell(4).unwrap();
    let probes = fork_probes(4).unwrap();
    for seed in [5, 23, 4096] {
        let nets = fresh(CriticKind::History, seed);
        let vals = probe_critic(&nets, &p, &terms, &probes).unwrap();
        // Probes 0 and 1 replay the same uninformed walk on opposite sides.
        assert_eq!(vals[0], vals[1], "seed {seed}");
        // The detour histories are visible to it.
        assert_ne!(vals[0], vals[2], "seed {seed}");
        assert_ne!(vals[2], vals[3], "seed {seed}");
    }
}

#[test]
fn the_joint_critic_distinguishes_all_four_situations() {
    let (p, terms) = build_heavenhell(4).unwrap();
    let probes = fork_probes(4).unwrap();
    let nets = fresh(CriticKind::HistoryState, 7);
    let vals = probe_critic(&nets, &p, &terms, &probes).unwrap();
    assert!(vals.iter().all(|v| v.is_finite()));
    for i in 0..4 {
        for j in (i + 1)..4 {
            assert_ne!(vals[i], vals[j], "probes {i} and {j} collided");
        }
    }
}

// ── The constraint survives training ──

#[test]
fn blindness_is_still_exact_after_training_steps() {
    let (p, terms) = build_heavenhell(4).unwrap();
    let probes = fork_probes(4).unwrap();
    let mut config = TrainConfig::new(1e-3, 1e-3, 0.1, 600, 11);
    config.dims = NetDims::tiny();
    config.episode_cap = 40;

    let out = train(&p, &terms, CriticKind::State, &config).unwrap();
    let vals = probe_critic(&out.nets, &p, &terms, &probes).unwrap();
    assert_eq!(vals[0], vals[2]);
    assert_eq!(vals[1], vals[3]);

    let out = train(&p, &terms, CriticKind::History, &config).unwrap();
    let vals = probe_critic(&out.nets, &p, &terms, &probes).unwrap();
    assert_eq!(vals[0], vals[1]);
}

// ── Probe validation ──

#[test]
fn contradictory_probe_pairings_are_refused() {
    let (p, terms) = build_heavenhell(4).unwrap();
    let probes = fork_probes(4).unwrap();
    let nets = fresh(CriticKind::HistoryState, 9);
    // The told-left history pinned to the heaven-right fork state cannot
    // happen.
    let impossible = vec![(probes[2].0.clone(), probes[3].1)];
    let err = probe_critic(&nets, &p, &terms, &impossible).unwrap_err();
    assert!(matches!(err, TrainError::UnrealizableProbe { .. }), "got {err}");
}
