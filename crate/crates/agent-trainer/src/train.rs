//! The outer training loop: sample, log, schedule, update, refresh.
//!
//! Each iteration draws a small batch of episodes with the current policy,
//! appends one learning-curve point per episode (undiscounted return plus a
//! rolling mean of the last hundred), recomputes the entropy weight from the
//! new timestep count, applies one update, and finally refreshes the frozen
//! critic copy whenever enough timesteps have passed since the last refresh.
//!
//! The entropy weight decays linearly over the first two million timesteps
//! and then holds: `λ(t) = λ₀·(1 − 0.9·min(t, 2·10⁶)/2·10⁶)`, so it ends at
//! a tenth of its starting value.
//!
//! Determinism: the environment and the belief-sampling streams are derived
//! from the run seed with distinct tags, and the network initializations use
//! their own tags, so a seed pins the entire run bit-for-bit.

use crate::error::{Result, TrainError};
use crate::nets::{AgentNets, CriticKind, NetDims};
use crate::sampling::sample_batch;
use crate::update::{update, UpdateStats};
use autodiff_nn::Adam;
use pomdp_core::seeding::derive_rng;
use pomdp_core::{Pomdp, TerminalSpec};

/// Timesteps over which the entropy weight decays before holding.
pub const ENTROPY_DECAY_HORIZON: f64 = 2_000_000.0;

/// Entropy weight at timestep `t` for a starting weight `lambda0`.
pub fn negentropy_schedule(t: u64, lambda0: f64) -> f64 {
    let clamped = (t as f64).min(ENTROPY_DECAY_HORIZON);
    lambda0 * (1.0 - 0.9 * clamped / ENTROPY_DECAY_HORIZON)
}

/// Hyperparameters and bookkeeping knobs for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub lr_actor: f64,
    pub lr_critic: f64,
    pub lambda0: f64,
    /// Episodes drawn per update.
    pub episodes_per_update: usize,
    /// Hard per-episode step cap; capped episodes bootstrap their last step.
    pub episode_cap: usize,
    /// Timesteps between copies of the online critic into the frozen one.
    pub target_refresh_period: u64,
    pub max_timesteps: u64,
    pub seed: u64,
    /// Weight each step's score term by `γ^t` (on) or by 1 (off).
    pub gamma_t_weighting: bool,
    pub dims: NetDims,
}

impl TrainConfig {
    pub fn new(lr_actor: f64, lr_critic: f64, lambda0: f64, max_timesteps: u64, seed: u64) -> Self {
        Self {
            lr_actor,
            lr_critic,
            lambda0,
            episodes_per_update: 2,
            episode_cap: 100,
            target_refresh_period: 10_000,
            max_timesteps,
            seed,
            gamma_t_weighting: true,
            dims: NetDims::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |reason: &str| {
            Err(TrainError::InvalidConfig { reason: reason.into() })
        };
        if !(self.lr_actor.is_finite() && self.lr_actor > 0.0) {
            return bad("actor learning rate must be positive");
        }
        if !(self.lr_critic.is_finite() && self.lr_critic > 0.0) {
            return bad("critic learning rate must be positive");
        }
        if !(self.lambda0.is_finite() && self.lambda0 >= 0.0) {
            return bad("entropy weight must be non-negative");
        }
        if self.episodes_per_update == 0 {
            return bad("need at least one episode per update");
        }
        if self.episode_cap == 0 {
            return bad("the episode cap must allow at least one step");
        }
        if self.target_refresh_period == 0 {
            return bad("the target refresh period must be positive");
        }
        self.dims.validate()
    }
}

/// One learning-curve row: an episode's end, return, and trailing mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    /// Cumulative environment timesteps when the episode ended.
    pub timestep: u64,
    /// Zero-based episode index.
    pub episode: u64,
    /// Undiscounted return of the episode.
    pub ret: f64,
    /// Mean return of the most recent hundred episodes (fewer at the start).
    pub rolling: f64,
}

/// Per-episode returns in arrival order, with a rolling-100 mean.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LearningCurve {
    points: Vec<CurvePoint>,
}

impl LearningCurve {
    pub const ROLLING_WINDOW: usize = 100;

    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, timestep: u64, ret: f64) {
        if let Some(last) = self.points.last() {
            assert!(
                timestep > last.timestep,
                "curve timesteps must strictly increase ({timestep} after {})",
                last.timestep
            );
        }
        let episode = self.points.len() as u64;
        let tail_start = self.points.len().saturating_sub(Self::ROLLING_WINDOW - 1);
        let tail_sum: f64 = self.points[tail_start..].iter().map(|p| p.ret).sum();
        let count = (self.points.len() - tail_start + 1) as f64;
        let rolling = (tail_sum + ret) / count;
        self.points.push(CurvePoint { timestep, episode, ret, rolling });
    }

    pub fn points(&self) -> &[CurvePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn last_rolling(&self) -> Option<f64> {
        self.points.last().map(|p| p.rolling)
    }

    /// Cumulative timesteps covered so far (0 when empty).
    pub fn timesteps(&self) -> u64 {
        self.points.last().map_or(0, |p| p.timestep)
    }
}

/// Everything a finished (or zero-budget) run hands back.
#[derive(Debug)]
pub struct TrainOutcome {
    pub curve: LearningCurve,
    pub nets: AgentNets,
    pub actor: Adam,
    pub critic_opt: Adam,
    /// Environment timesteps actually consumed.
    pub timesteps: u64,
    /// Stats of the last update, if any ran.
    pub last_update: Option<UpdateStats>,
}

/// Runs actor-critic training until the timestep budget is exhausted.
pub fn train(
    pomdp: &Pomdp,
    terminals: &TerminalSpec,
    kind: CriticKind,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    let mut nets = AgentNets::with_dims(
        kind,
        pomdp.n_actions(),
        pomdp.n_obs(),
        pomdp.n_states(),
        config.dims,
        config.seed,
    )?;
    let mut actor = Adam::new(&nets.policy, config.lr_actor);
    let mut critic_opt = Adam::new(&nets.critic, config.lr_critic);
    let mut env_rng = derive_rng(config.seed, &[0x9E]);
    let mut belief_rng = derive_rng(config.seed, &[0xB5]);

    let mut curve = LearningCurve::new();
    let mut total: u64 = 0;
    let mut last_refresh: u64 = 0;
    let mut last_update = None;

    while total < config.max_timesteps {
        let batch = sample_batch(
            pomdp,
            terminals,
            &nets,
            config.episodes_per_update,
            config.episode_cap,
            &mut env_rng,
        )?;
        for traj in &batch {
            if traj.is_empty() {
                return Err(TrainError::EmptyEpisode);
            }
            total += traj.len() as u64;
            curve.push(total, traj.undiscounted_return());
        }
        let lambda = negentropy_schedule(total, config.lambda0);
        last_update = Some(
            update(
                &mut nets,
                &mut actor,
                &mut critic_opt,
                pomdp,
                terminals,
                &batch,
                lambda,
                config.gamma_t_weighting,
                &mut belief_rng,
            )
            .map_err(|e| e.with_run_context(total, &curve))?,
        );
        if total - last_refresh >= config.target_refresh_period {
            nets.refresh_target();
            last_refresh = total;
        }
    }

    Ok(TrainOutcome { curve, nets, actor, critic_opt, timesteps: total, last_update })
}

#[cfg(test)]
mod tests {
    use super::*;
    use env_suite::build_goodbad;

    fn tiny_config(max_timesteps: u64, seed: u64) -> TrainConfig {
        let mut c = TrainConfig::new(1e-3, 1e-3, 0.1, max_timesteps, seed);
        c.episode_cap = 8;
        c.dims = NetDims::tiny();
        c
    }

    fn snapshot(params: &autodiff_nn::Params) -> Vec<Vec<f64>> {
        params.iter().map(|(_, t)| t.data().to_vec()).collect()
    }

    // ── Schedule ──

    #[test]
    fn the_entropy_schedule_decays_to_a_tenth_and_holds() {
        assert_eq!(negentropy_schedule(0, 0.4), 0.4);
        assert!((negentropy_schedule(1_000_000, 0.4) - 0.4 * 0.55).abs() < 1e-15);
        assert!((negentropy_schedule(2_000_000, 0.4) - 0.04).abs() < 1e-15);
        assert!((negentropy_schedule(30_000_000, 0.4) - 0.04).abs() < 1e-15);
    }

    // ── Curve bookkeeping ──

    #[test]
    fn rolling_means_cover_at_most_the_last_hundred_returns() {
        let mut curve = LearningCurve::new();
        for i in 0..250u64 {
            curve.push(i + 1, if i < 150 { 0.0 } else { 1.0 });
        }
        let points = curve.points();
        assert_eq!(points[0].rolling, 0.0);
        assert_eq!(points[99].rolling, 0.0);
        // Episode 150 is the first return of 1; window [51..=150] holds one.
        assert!((points[150].rolling - 0.01).abs() < 1e-12);
        // By 249 the window [150..=249] is all ones.
        assert_eq!(points[249].rolling, 1.0);
        assert_eq!(curve.timesteps(), 250);
    }

    #[test]
    #[should_panic(expected = "strictly increase")]
    fn curve_timesteps_must_advance() {
        let mut curve = LearningCurve::new();
        curve.push(5, 1.0);
        curve.push(5, 2.0);
    }

    // ── Zero budget ──

    #[test]
    fn a_zero_budget_run_leaves_the_nets_at_initialization() {
        let p = build_goodbad(0.9).unwrap();
        let terms = TerminalSpec::none();
        let config = tiny_config(0, 77);
        let out = train(&p, &terms, CriticKind::History, &config).unwrap();
        assert!(out.curve.is_empty());
        assert_eq!(out.timesteps, 0);
        assert!(out.last_update.is_none());
        let fresh = AgentNets::with_dims(CriticKind::History, 2, 2, 2, NetDims::tiny(), 77).unwrap();
        assert_eq!(snapshot(&out.nets.policy), snapshot(&fresh.policy));
        assert_eq!(snapshot(&out.nets.critic), snapshot(&fresh.critic));
    }

    // ── Determinism ──

    #[test]
    fn the_same_seed_reproduces_curves_and_parameters_bit_for_bit() {
        let p = build_goodbad(0.9).unwrap();
        let terms = TerminalSpec::none();
        let config = tiny_config(48, 101);
        let a = train(&p, &terms, CriticKind::HistoryState, &config).unwrap();
        let b = train(&p, &terms, CriticKind::HistoryState, &config).unwrap();
        assert_eq!(a.curve, b.curve);
        assert_eq!(snapshot(&a.nets.policy), snapshot(&b.nets.policy));
        assert_eq!(snapshot(&a.nets.critic), snapshot(&b.nets.critic));
        assert!(a.timesteps >= 48);
        let timesteps: Vec<u64> = a.curve.points().iter().map(|pt| pt.timestep).collect();
        assert!(timesteps.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(*timesteps.last().unwrap(), a.timesteps);
    }

    #[test]
    fn different_seeds_diverge() {
        let p = build_goodbad(0.9).unwrap();
        let terms = TerminalSpec::none();
        let a = train(&p, &terms, CriticKind::History, &tiny_config(32, 1)).unwrap();
        let b = train(&p, &terms, CriticKind::History, &tiny_config(32, 2)).unwrap();
        assert_ne!(snapshot(&a.nets.policy), snapshot(&b.nets.policy));
    }

    // ── Target refresh ──

    #[test]
    fn a_unit_refresh_period_keeps_the_frozen_copy_in_lockstep() {
        let p = build_goodbad(0.9).unwrap();
        let terms = TerminalSpec::none();
        let mut config = tiny_config(32, 55);
        config.target_refresh_period = 1;
        let out = train(&p, &terms, CriticKind::History, &config).unwrap();
        assert_eq!(snapshot(&out.nets.critic), snapshot(&out.nets.target));
    }

    #[test]
    fn a_huge_refresh_period_leaves_the_frozen_copy_at_initialization() {
        let p = build_goodbad(0.9).unwrap();
        let terms = TerminalSpec::none();
        let mut config = tiny_config(32, 56);
        config.target_refresh_period = 1_000_000;
        let out = train(&p, &terms, CriticKind::History, &config).unwrap();
        let fresh = AgentNets::with_dims(CriticKind::History, 2, 2, 2, NetDims::tiny(), 56).unwrap();
        assert_eq!(snapshot(&out.nets.target), snapshot(&fresh.critic));
        assert_ne!(snapshot(&out.nets.critic), snapshot(&fresh.critic));
    }

    // ── Config validation ──

    #[test]
    fn nonpositive_rates_are_rejected() {
        let mut c = tiny_config(10, 1);
        c.lr_actor = 0.0;
        assert!(matches!(c.validate(), Err(TrainError::InvalidConfig { .. })));
        let mut c = tiny_config(10, 1);
        c.lr_critic = -1.0;
        assert!(c.validate().is_err());
        let mut c = tiny_config(10, 1);
        c.lambda0 = f64::NAN;
        assert!(c.validate().is_err());
        let mut c = tiny_config(10, 1);
        c.episodes_per_update = 0;
        assert!(c.validate().is_err());
    }
}
