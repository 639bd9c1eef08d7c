//! Sampled policy-gradient estimators with critics pinned to exact values.
//!
//! The score-function estimator for the horizon-`D` objective contributes,
//! per episode and per logit entry `(h_t, b)`,
//!
//! ```text
//!   −γ^t · δ_t · (1[b = a_t] − π(b; h_t))
//! ```
//!
//! where `δ_t` is the one-step TD error written with *exact* values at
//! matched depths: `δ_t = r_t + γ·V_{D−t−1}(h_{t+1}) − V_{D−t}(h_t)` for the
//! history-critic form, or the same expression over `(h, s)` pairs with the
//! actually-sampled states for the history-state form. With the depths
//! matched this way, the per-episode contribution is an unbiased draw of the
//! exact truncated-objective gradient entry — so the sample mean converges
//! on it, and the sample's standard error says how fast.
//!
//! The same construction runs in network parameter space: each episode's
//! weighted log-probability sum is differentiated through the policy network,
//! giving one gradient draw per coordinate. Estimator means are then
//! compared against the exact gradient coordinate-by-coordinate in standard
//! errors.

use std::collections::HashMap;

use crate::error::{Result, TrainError};
use crate::nets::AgentNets;
use crate::sampling::sample_batch;
use crate::td::is_terminal_step;
use autodiff_nn::{Grads, Params, Tape};
use exact_oracle::{
    forward_histories, GradientMode, GradientTable, Horizon, Oracle, PolicyTracker,
    TabularPolicy, DEFAULT_BUDGET,
};
use pomdp_core::seeding::derive_rng;
use pomdp_core::{sample_episode, History, Pomdp, TerminalSpec, Trajectory};

/// Entries whose contributions never vary get an absolute gate instead of a
/// standard-error one.
const ZERO_SEM_TOL: f64 = 1e-9;

// ── Running moments ──

/// Streaming mean and standard error of the mean.
#[derive(Debug, Clone, Default)]
pub struct RunningStat {
    n: u64,
    mean: f64,
    m2: f64,
}

impl RunningStat {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Standard error of the mean; zero until two samples have arrived.
    pub fn sem(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        (self.m2 / (self.n - 1) as f64 / self.n as f64).sqrt()
    }
}

fn z_score(gap: f64, sem: f64) -> f64 {
    if sem > 0.0 {
        gap.abs() / sem
    } else if gap.abs() <= ZERO_SEM_TOL {
        0.0
    } else {
        f64::INFINITY
    }
}

// ── Exact value tables ──

/// Exact values `V_{D−t}(h)` and `V_{D−t}(h, s)` for every history the
/// policy can reach within the horizon, keyed by canonical history encoding.
///
/// Depth-zero rows (histories of full length `D`) are stored as zeros, so a
/// bootstrap read off the end of the horizon is well-defined.
#[derive(Debug, Clone)]
pub struct OracleValues {
    horizon: usize,
    support: Vec<History>,
    v_h: HashMap<String, f64>,
    v_hs: HashMap<(String, usize), f64>,
}

impl OracleValues {
    /// Tabulates both value families under `policy` out to `hz`.
    pub fn tabulate(
        pomdp: &Pomdp,
        terminals: &TerminalSpec,
        policy: &TabularPolicy,
        hz: Horizon,
    ) -> Result<Self> {
        if hz.0 == 0 {
            return Err(TrainError::InvalidConfig {
                reason: "value tables need a positive horizon".into(),
            });
        }
        let oracle = Oracle::with_terminals(pomdp, terminals);
        let layers = forward_histories(pomdp, terminals, policy, hz.0, DEFAULT_BUDGET)?;
        let mut support = Vec::new();
        let mut v_h = HashMap::new();
        let mut v_hs = HashMap::new();
        for (t, layer) in layers.iter().enumerate() {
            let depth = hz.0 - t;
            for node in layer {
                let key = node.history.key();
                if depth == 0 {
                    v_h.insert(key.clone(), 0.0);
                    for (s, &mass) in node.alpha.iter().enumerate() {
                        if mass > 0.0 {
                            v_hs.insert((key.clone(), s), 0.0);
                        }
                    }
                    continue;
                }
                support.push(node.history.clone());
                v_h.insert(
                    key.clone(),
                    oracle.v_history(policy, &node.history, Horizon(depth))?,
                );
                for (s, &mass) in node.alpha.iter().enumerate() {
                    if mass > 0.0 {
                        let v = oracle.v_history_state(
                            policy,
                            &node.history,
                            s,
                            Horizon(depth),
                        )?;
                        v_hs.insert((key.clone(), s), v);
                    }
                }
            }
        }
        Ok(OracleValues { horizon: hz.0, support, v_h, v_hs })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Histories shorter than the horizon, layer by layer — the rows a
    /// gradient over this horizon can touch.
    pub fn support(&self) -> &[History] {
        &self.support
    }

    pub fn v(&self, key: &str) -> Option<f64> {
        self.v_h.get(key).copied()
    }

    pub fn v_state(&self, key: &str, s: usize) -> Option<f64> {
        self.v_hs.get(&(key.to_owned(), s)).copied()
    }
}

fn missing(key: &str) -> TrainError {
    TrainError::InvalidConfig {
        reason: format!("history {key:?} is outside the tabulated horizon"),
    }
}

/// TD error at step `t` of `traj`, using pinned exact values at matched
/// depths. `mode` picks the conditioning: history only, or history and the
/// sampled states.
fn pinned_delta(
    values: &OracleValues,
    traj: &Trajectory,
    t: usize,
    cur_key: &str,
    mode: GradientMode,
    gamma: f64,
) -> Result<f64> {
    let next_key = traj.history_prefix(t + 1).key();
    let (v_cur, v_next) = match mode {
        GradientMode::Symmetric => {
            let cur = values.v(cur_key).ok_or_else(|| missing(cur_key))?;
            let next = if is_terminal_step(traj, t) {
                0.0
            } else {
                values.v(&next_key).ok_or_else(|| missing(&next_key))?
            };
            (cur, next)
        }
        GradientMode::Asymmetric => {
            let cur = values
                .v_state(cur_key, traj.states[t])
                .ok_or_else(|| missing(cur_key))?;
            let next = if is_terminal_step(traj, t) {
                0.0
            } else {
                values
                    .v_state(&next_key, traj.states[t + 1])
                    .ok_or_else(|| missing(&next_key))?
            };
            (cur, next)
        }
    };
    Ok(traj.rewards[t] + gamma * v_next - v_cur)
}

// ── Tabular-space estimator ──

/// Per-entry sample statistics of the estimator, plus the first-step TD
/// error's own moments (its expectation is zero when the values are exact).
#[derive(Debug, Clone)]
pub struct GradientStats {
    mode: GradientMode,
    horizon: usize,
    episodes: u64,
    keys: Vec<String>,
    n_actions: usize,
    entries: Vec<RunningStat>,
    delta0: RunningStat,
}

/// How a set of estimator means sits against an exact table.
#[derive(Debug, Clone)]
pub struct Calibration {
    /// Entries compared (union of estimated and exact supports).
    pub entries: usize,
    /// Largest |mean − exact| / SEM over the entries.
    pub worst_z: f64,
    /// Entry behind `worst_z`.
    pub worst_entry: Option<(String, usize)>,
    /// Largest raw |mean − exact|.
    pub max_abs_gap: f64,
    /// Entries judged by the absolute gate because their SEM was zero.
    pub zero_sem_entries: usize,
}

impl GradientStats {
    pub fn mode(&self) -> GradientMode {
        self.mode
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn episodes(&self) -> u64 {
        self.episodes
    }

    pub fn delta0_mean(&self) -> f64 {
        self.delta0.mean()
    }

    pub fn delta0_sem(&self) -> f64 {
        self.delta0.sem()
    }

    /// Sample mean for one (history key, action) entry.
    pub fn mean(&self, key: &str, a: usize) -> Option<f64> {
        let row = self.keys.iter().position(|k| k == key)?;
        Some(self.entries[row * self.n_actions + a].mean())
    }

    /// Compares the estimator means against an exact gradient table in
    /// standard-error units.
    pub fn compare(&self, exact: &GradientTable) -> Calibration {
        let mut cal = Calibration {
            entries: 0,
            worst_z: 0.0,
            worst_entry: None,
            max_abs_gap: 0.0,
            zero_sem_entries: 0,
        };
        let mut seen: Vec<&str> = Vec::new();
        for (row, key) in self.keys.iter().enumerate() {
            seen.push(key);
            for a in 0..self.n_actions {
                let stat = &self.entries[row * self.n_actions + a];
                let gap = stat.mean() - exact.entry(key, a);
                let z = z_score(gap, stat.sem());
                cal.entries += 1;
                if stat.sem() == 0.0 {
                    cal.zero_sem_entries += 1;
                }
                cal.max_abs_gap = cal.max_abs_gap.max(gap.abs());
                if z >= cal.worst_z {
                    cal.worst_z = z;
                    cal.worst_entry = Some((key.clone(), a));
                }
            }
        }
        // Exact rows the estimator never enumerated count as zero-mean,
        // zero-SEM estimates.
        for (key, row) in exact.rows() {
            if seen.contains(&key) {
                continue;
            }
            for (a, &v) in row.iter().enumerate() {
                cal.entries += 1;
                cal.zero_sem_entries += 1;
                cal.max_abs_gap = cal.max_abs_gap.max(v.abs());
                let z = z_score(-v, 0.0);
                if z >= cal.worst_z {
                    cal.worst_z = z;
                    cal.worst_entry = Some((key.to_owned(), a));
                }
            }
        }
        cal
    }
}

/// Monte-Carlo policy gradient over `episodes` rollouts with the critic
/// pinned to exact values, in logit-table space.
///
/// Every enumerable entry gets a sample each episode — zero when the episode
/// never visits the entry's history — so entry means are unbiased for the
/// exact truncated-horizon gradient and their SEMs are honest.
pub fn sampled_policy_gradient(
    pomdp: &Pomdp,
    terminals: &TerminalSpec,
    policy: &TabularPolicy,
    hz: Horizon,
    episodes: u64,
    mode: GradientMode,
    seed: u64,
) -> Result<GradientStats> {
    let values = OracleValues::tabulate(pomdp, terminals, policy, hz)?;
    let n_actions = pomdp.n_actions();
    let keys: Vec<String> = values.support().iter().map(|h| h.key()).collect();
    let row_of: HashMap<&str, usize> =
        keys.iter().enumerate().map(|(i, k)| (k.as_str(), i)).collect();
    let mut entries = vec![RunningStat::new(); keys.len() * n_actions];
    let mut delta0 = RunningStat::new();
    let mut scratch = vec![0.0; entries.len()];

    let gamma = pomdp.gamma();
    let mut tracker = PolicyTracker::new(policy);
    let mut rng = derive_rng(seed, &[0xE5]);
    for _ in 0..episodes {
        let traj = sample_episode(pomdp, terminals, &mut tracker, hz.0, &mut rng)?;
        scratch.iter_mut().for_each(|v| *v = 0.0);
        let mut disc = 1.0;
        for t in 0..traj.len() {
            let h_t = traj.history_prefix(t);
            let key = h_t.key();
            let delta = pinned_delta(&values, &traj, t, &key, mode, gamma)?;
            if t == 0 {
                delta0.push(delta);
            }
            let row = *row_of.get(key.as_str()).ok_or_else(|| missing(&key))?;
            let probs = policy.action_distribution(&h_t);
            for b in 0..n_actions {
                let indicator = if b == traj.actions[t] { 1.0 } else { 0.0 };
                scratch[row * n_actions + b] -= disc * delta * (indicator - probs.prob(b));
            }
            disc *= gamma;
        }
        for (stat, &x) in entries.iter_mut().zip(&scratch) {
            stat.push(x);
        }
    }

    Ok(GradientStats {
        mode,
        horizon: hz.0,
        episodes,
        keys,
        n_actions,
        entries,
        delta0,
    })
}

// ── Network-space estimator ──

/// Exact gradient of the truncated objective with respect to the policy
/// network's parameters.
///
/// Chain rule through the logit layer: with `g[h][b]` the exact logit-space
/// gradient and `ℓ_b(h; θ)` the network's logits, the parameter gradient is
/// the gradient of the scalar `Σ_{h,b} g[h][b] · ℓ_b(h; θ)`. `support` must
/// list the histories the table covers (shorter than the horizon).
pub fn exact_net_policy_gradient(
    nets: &AgentNets,
    table: &GradientTable,
    support: &[History],
) -> Result<Grads> {
    let mut tape = Tape::new();
    let mut terms = Vec::new();
    for h in support {
        let key = h.key();
        let hidden = nets.pol.enc.encode(
            &mut tape,
            &nets.policy,
            h,
            nets.kind().truncation(),
            nets.start_symbol(),
        );
        let logits = nets.pol.logits(&mut tape, &nets.policy, hidden);
        for b in 0..nets.n_actions() {
            let coeff = table.entry(&key, b);
            if coeff != 0.0 {
                let l = tape.pick(logits, b);
                terms.push((coeff, l));
            }
        }
    }
    let surrogate = tape.weighted_sum(&terms);
    let mut grads = Grads::zeros_like(&nets.policy);
    tape.backward(&nets.policy, surrogate, &mut grads)?;
    Ok(grads)
}

/// Per-coordinate sample statistics of the network-space estimator.
#[derive(Debug, Clone)]
pub struct NetGradientStats {
    episodes: u64,
    coords: Vec<RunningStat>,
}

impl NetGradientStats {
    pub fn episodes(&self) -> u64 {
        self.episodes
    }

    pub fn n_coords(&self) -> usize {
        self.coords.len()
    }

    /// Compares coordinate means against an exact parameter gradient.
    /// `params` supplies the flattening order shared by both sides.
    pub fn compare(&self, exact: &Grads, params: &Params) -> Calibration {
        let flat: Vec<f64> =
            params.ids().flat_map(|id| exact.group(id).to_vec()).collect();
        assert_eq!(flat.len(), self.coords.len(), "gradient shape mismatch");
        let mut cal = Calibration {
            entries: flat.len(),
            worst_z: 0.0,
            worst_entry: None,
            max_abs_gap: 0.0,
            zero_sem_entries: 0,
        };
        for (i, (stat, &target)) in self.coords.iter().zip(&flat).enumerate() {
            let gap = stat.mean() - target;
            let z = z_score(gap, stat.sem());
            if stat.sem() == 0.0 {
                cal.zero_sem_entries += 1;
            }
            cal.max_abs_gap = cal.max_abs_gap.max(gap.abs());
            if z >= cal.worst_z {
                cal.worst_z = z;
                cal.worst_entry = Some((format!("coord {i}"), 0));
            }
        }
        cal
    }
}

/// Monte-Carlo gradient of the truncated objective through the policy
/// network, with the critic pinned to exact values.
///
/// Each episode is sampled with the network's own policy, its per-step
/// weights `−γ^t δ_t` are computed from `values`, and one backward pass
/// turns the weighted log-probability sum into a gradient draw.
pub fn sampled_net_policy_gradient(
    pomdp: &Pomdp,
    terminals: &TerminalSpec,
    nets: &AgentNets,
    values: &OracleValues,
    mode: GradientMode,
    episodes: u64,
    seed: u64,
) -> Result<NetGradientStats> {
    let gamma = pomdp.gamma();
    let mut coords =
        vec![RunningStat::new(); nets.policy_params().n_scalars()];
    let mut rng = derive_rng(seed, &[0xE5]);
    for _ in 0..episodes {
        let traj = sample_batch(pomdp, terminals, nets, 1, values.horizon(), &mut rng)?
            .pop()
            .expect("one episode requested");
        let mut tape = Tape::new();
        let mut terms = Vec::new();
        let mut hidden = nets.pol.enc.initial(&mut tape);
        if nets.kind().truncation().is_none() {
            if let Some(o0) = traj.initial_obs {
                hidden = nets.pol.enc.advance(
                    &mut tape,
                    &nets.policy,
                    hidden,
                    nets.start_symbol(),
                    o0,
                );
            }
        }
        let mut disc = 1.0;
        for t in 0..traj.len() {
            let h_t = traj.history_prefix(t);
            if nets.kind().truncation().is_some() {
                hidden = nets.pol.enc.encode(
                    &mut tape,
                    &nets.policy,
                    &h_t,
                    nets.kind().truncation(),
                    nets.start_symbol(),
                );
            }
            let delta = pinned_delta(&values, &traj, t, &h_t.key(), mode, gamma)?;
            let lp = nets.pol.log_probs(&mut tape, &nets.policy, hidden);
            let picked = tape.pick(lp, traj.actions[t]);
            terms.push((-disc * delta, picked));
            disc *= gamma;
            if nets.kind().truncation().is_none() && t + 1 < traj.len() {
                hidden = nets.pol.enc.advance(
                    &mut tape,
                    &nets.policy,
                    hidden,
                    traj.actions[t],
                    traj.observations[t],
                );
            }
        }
        let loss = tape.weighted_sum(&terms);
        let mut grads = Grads::zeros_like(&nets.policy);
        tape.backward(&nets.policy, loss, &mut grads)?;
        let mut i = 0;
        for id in nets.policy_params().ids() {
            for &g in grads.group(id) {
                coords[i].push(g);
                i += 1;
            }
        }
    }
    Ok(NetGradientStats { episodes, coords })
}
