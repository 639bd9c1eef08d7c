//! The actor-critic network pair and its critic-conditioning variants.
//!
//! Both branches read the history the same way: each `(action, observation)`
//! pair is embedded, the two embeddings are concatenated, and a GRU folds the
//! sequence left to right. The very first input pairs a designated
//! start-of-sequence action symbol (index `n_actions`) with the pre-action
//! observation, so models that announce something before the first action fit
//! the same shapes as those that do not. An empty history encodes as the GRU
//! initial hidden state, all zeros.
//!
//! The policy branch maps the hidden state through an MLP to action logits.
//! The critic branch concatenates a history feature and a state embedding
//! into one fixed-width input and maps it to a scalar; which half carries
//! information depends on [`CriticKind`]:
//!
//! * `History` — state half zeroed,
//! * `State` — history half zeroed (same machinery, information ablated),
//! * `HistoryState` — both halves live,
//! * `HistoryStateSampled` — both halves live; training feeds a state drawn
//!   from the belief instead of the simulator's true state,
//! * `TruncatedHistory(k)` — both policy and critic see only the last `k`
//!   pairs, re-unrolled from a zero hidden state each time.
//!
//! The two branches share no parameters, and the critic keeps a frozen copy
//! of its weights (the bootstrap target), refreshed on a fixed cadence by the
//! training loop.

use crate::error::{Result, TrainError};
use autodiff_nn::{
    load_checkpoint, save_checkpoint, Adam, EmbeddingTable, GruCell, MlpHead, Params, Tape,
    Tensor, Var, EMBED_DIM, GRU_HIDDEN, MLP_HIDDEN1, MLP_HIDDEN2,
};
use pomdp_core::{seeding::derive_rng, DiscreteDistribution, History, Pomdp};
use std::path::Path;

/// What the critic is allowed to condition on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CriticKind {
    /// v̂(h): history features only.
    History,
    /// v̂(s): state embedding only, history half ablated.
    State,
    /// v̂(h, s): both, with the simulator's true state.
    HistoryState,
    /// v̂(h, s̃) with s̃ ~ b(h) drawn fresh each step during training.
    HistoryStateSampled,
    /// v̂ over the last `k` pairs only; the policy is truncated the same way.
    TruncatedHistory(usize),
}

impl CriticKind {
    /// Whether the critic input includes history features.
    pub fn uses_history(self) -> bool {
        !matches!(self, CriticKind::State)
    }

    /// Whether the critic input includes a state embedding.
    pub fn uses_state(self) -> bool {
        matches!(
            self,
            CriticKind::State | CriticKind::HistoryState | CriticKind::HistoryStateSampled
        )
    }

    /// The window for quasi-reactive variants; `None` means full history.
    pub fn truncation(self) -> Option<usize> {
        match self {
            CriticKind::TruncatedHistory(k) => Some(k),
            _ => None,
        }
    }

    /// Short name used in run manifests, CSV columns, and CLI flags.
    pub fn label(self) -> &'static str {
        match self {
            CriticKind::History => "h",
            CriticKind::State => "s",
            CriticKind::HistoryState => "hs",
            CriticKind::HistoryStateSampled => "hs-sampled",
            CriticKind::TruncatedHistory(2) => "h2",
            CriticKind::TruncatedHistory(4) => "h4",
            CriticKind::TruncatedHistory(_) => "h?",
        }
    }

    pub fn parse_label(s: &str) -> Option<CriticKind> {
        match s {
            "h" => Some(CriticKind::History),
            "s" => Some(CriticKind::State),
            "hs" => Some(CriticKind::HistoryState),
            "hs-sampled" => Some(CriticKind::HistoryStateSampled),
            "h2" => Some(CriticKind::TruncatedHistory(2)),
            "h4" => Some(CriticKind::TruncatedHistory(4)),
            _ => None,
        }
    }

    pub fn validate(self) -> Result<()> {
        if let CriticKind::TruncatedHistory(k) = self {
            if k != 2 && k != 4 {
                return Err(TrainError::UnsupportedTruncation { k });
            }
        }
        Ok(())
    }

    fn code(self) -> (u8, usize) {
        match self {
            CriticKind::History => (0, 0),
            CriticKind::State => (1, 0),
            CriticKind::HistoryState => (2, 0),
            CriticKind::HistoryStateSampled => (3, 0),
            CriticKind::TruncatedHistory(k) => (4, k),
        }
    }

    fn from_code(code: u8, k: usize) -> Option<CriticKind> {
        match code {
            0 => Some(CriticKind::History),
            1 => Some(CriticKind::State),
            2 => Some(CriticKind::HistoryState),
            3 => Some(CriticKind::HistoryStateSampled),
            4 => Some(CriticKind::TruncatedHistory(k)),
            _ => None,
        }
    }
}

impl std::fmt::Display for CriticKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Layer widths; the default is the full-size configuration, tests shrink it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NetDims {
    pub embed: usize,
    pub hidden: usize,
    pub mlp1: usize,
    pub mlp2: usize,
}

impl Default for NetDims {
    fn default() -> Self {
        NetDims {
            embed: EMBED_DIM,
            hidden: GRU_HIDDEN,
            mlp1: MLP_HIDDEN1,
            mlp2: MLP_HIDDEN2,
        }
    }
}

impl NetDims {
    /// A deliberately small configuration for tests that need many forward
    /// passes or exact cross-checks rather than capacity.
    pub fn tiny() -> Self {
        NetDims { embed: 3, hidden: 4, mlp1: 8, mlp2: 6 }
    }

    pub fn validate(self) -> Result<()> {
        if self.embed == 0 || self.hidden == 0 || self.mlp1 == 0 || self.mlp2 == 0 {
            return Err(TrainError::InvalidConfig {
                reason: format!("network widths must be positive, got {self:?}"),
            });
        }
        Ok(())
    }
}

/// Embeds `(action, observation)` pairs and folds them through a GRU.
#[derive(Debug)]
pub(crate) struct SeqEncoder {
    act: EmbeddingTable,
    obs: EmbeddingTable,
    gru: GruCell,
}

impl SeqEncoder {
    fn new(
        params: &mut Params,
        n_actions: usize,
        n_obs: usize,
        dims: NetDims,
        rng: &mut impl rand::Rng,
    ) -> Self {
        // One extra action row: the start-of-sequence symbol.
        let act = EmbeddingTable::new(params, "act", n_actions + 1, dims.embed, rng);
        let obs = EmbeddingTable::new(params, "obs", n_obs, dims.embed, rng);
        let gru = GruCell::new(params, "gru", 2 * dims.embed, dims.hidden, rng);
        SeqEncoder { act, obs, gru }
    }

    pub(crate) fn initial(&self, tape: &mut Tape) -> Var {
        tape.constant(self.gru.initial_state())
    }

    /// One fold step: embed the pair, concatenate, advance the hidden state.
    pub(crate) fn advance(
        &self,
        tape: &mut Tape,
        params: &Params,
        hidden: Var,
        action_symbol: usize,
        obs: usize,
    ) -> Var {
        let a = self.act.lookup(tape, params, action_symbol);
        let o = self.obs.lookup(tape, params, obs);
        let x = tape.concat(a, o);
        self.gru.apply(tape, params, x, hidden)
    }

    /// Full re-unroll of `h` (optionally only its last `trunc` pairs) from
    /// the zero state. The start symbol is used exactly when the effective
    /// history still carries its pre-action observation.
    pub(crate) fn encode(
        &self,
        tape: &mut Tape,
        params: &Params,
        h: &History,
        trunc: Option<usize>,
        start_symbol: usize,
    ) -> Var {
        let owned;
        let h_eff = match trunc {
            Some(k) if h.len() > k => {
                owned = h.suffix(k);
                &owned
            }
            _ => h,
        };
        let mut hidden = self.initial(tape);
        if let Some(o0) = h_eff.initial_obs() {
            hidden = self.advance(tape, params, hidden, start_symbol, o0);
        }
        for &(a, o) in h_eff.steps() {
            hidden = self.advance(tape, params, hidden, a, o);
        }
        hidden
    }
}

#[derive(Debug)]
pub(crate) struct PolicyBranch {
    pub(crate) enc: SeqEncoder,
    pub(crate) head: MlpHead,
}

impl PolicyBranch {
    /// Action log-probabilities from a hidden state.
    pub(crate) fn log_probs(&self, tape: &mut Tape, params: &Params, hidden: Var) -> Var {
        let logits = self.head.apply(tape, params, hidden);
        tape.log_softmax(logits)
    }

    pub(crate) fn logits(&self, tape: &mut Tape, params: &Params, hidden: Var) -> Var {
        self.head.apply(tape, params, hidden)
    }
}

#[derive(Debug)]
pub(crate) struct CriticBranch {
    pub(crate) enc: SeqEncoder,
    pub(crate) state: EmbeddingTable,
    pub(crate) head: MlpHead,
    hidden_dim: usize,
    embed_dim: usize,
}

impl CriticBranch {
    /// Critic input from an already-encoded history feature and an optional
    /// state, with the kind's ablation applied.
    fn assemble(
        &self,
        tape: &mut Tape,
        params: &Params,
        kind: CriticKind,
        h_feat: Option<Var>,
        state: Option<usize>,
    ) -> Result<Var> {
        let hist = match h_feat {
            Some(v) if kind.uses_history() => v,
            _ => tape.constant(vec![0.0; self.hidden_dim]),
        };
        let st = if kind.uses_state() {
            let s = state.ok_or(TrainError::StateRequired { kind: kind.label() })?;
            self.state.lookup(tape, params, s)
        } else {
            tape.constant(vec![0.0; self.embed_dim])
        };
        let x = tape.concat(hist, st);
        Ok(self.head.apply(tape, params, x))
    }

    /// Scalar critic output for one `(history, state)` query.
    pub(crate) fn value(
        &self,
        tape: &mut Tape,
        params: &Params,
        kind: CriticKind,
        start_symbol: usize,
        h: &History,
        state: Option<usize>,
    ) -> Result<Var> {
        let h_feat = if kind.uses_history() {
            Some(self.enc.encode(tape, params, h, kind.truncation(), start_symbol))
        } else {
            None
        };
        self.assemble(tape, params, kind, h_feat, state)
    }

    /// Scalar critic outputs along one episode: entry `t` values the history
    /// before step `t` (paired with `states[t]` when the kind wants one), for
    /// `t = 0 ..= T`. Full-history kinds fold the GRU once across the
    /// episode; truncated kinds re-unroll their window at every step.
    pub(crate) fn episode_values(
        &self,
        tape: &mut Tape,
        params: &Params,
        kind: CriticKind,
        start_symbol: usize,
        traj: &pomdp_core::Trajectory,
        states: Option<&[usize]>,
    ) -> Result<Vec<Var>> {
        let t_len = traj.len();
        if kind.uses_state() {
            let s = states.ok_or(TrainError::StateRequired { kind: kind.label() })?;
            debug_assert_eq!(s.len(), t_len + 1);
        }
        let state_at = |t: usize| states.map(|s| s[t]);
        let mut out = Vec::with_capacity(t_len + 1);

        match (kind.uses_history(), kind.truncation()) {
            (false, _) => {
                for t in 0..=t_len {
                    out.push(self.assemble(tape, params, kind, None, state_at(t))?);
                }
            }
            (true, Some(_)) => {
                for t in 0..=t_len {
                    let h = traj.history_prefix(t);
                    out.push(self.value(tape, params, kind, start_symbol, &h, state_at(t))?);
                }
            }
            (true, None) => {
                let mut hidden = self.enc.initial(tape);
                if let Some(o0) = traj.initial_obs {
                    hidden = self.enc.advance(tape, params, hidden, start_symbol, o0);
                }
                for t in 0..=t_len {
                    out.push(self.assemble(tape, params, kind, Some(hidden), state_at(t))?);
                    if t < t_len {
                        hidden = self.enc.advance(
                            tape,
                            params,
                            hidden,
                            traj.actions[t],
                            traj.observations[t],
                        );
                    }
                }
            }
        }
        Ok(out)
    }
}

/// The full agent: policy parameters, critic parameters, and the critic's
/// frozen target copy, plus the block handles that know how to read them.
#[derive(Debug)]
pub struct AgentNets {
    kind: CriticKind,
    dims: NetDims,
    n_actions: usize,
    n_obs: usize,
    n_states: usize,
    pub(crate) policy: Params,
    pub(crate) critic: Params,
    pub(crate) target: Params,
    pub(crate) pol: PolicyBranch,
    pub(crate) cri: CriticBranch,
}

impl AgentNets {
    pub fn new(
        kind: CriticKind,
        n_actions: usize,
        n_obs: usize,
        n_states: usize,
        seed: u64,
    ) -> Result<Self> {
        Self::with_dims(kind, n_actions, n_obs, n_states, NetDims::default(), seed)
    }

    /// As [`AgentNets::new`] with explicit layer widths.
    pub fn with_dims(
        kind: CriticKind,
        n_actions: usize,
        n_obs: usize,
        n_states: usize,
        dims: NetDims,
        seed: u64,
    ) -> Result<Self> {
        kind.validate()?;
        dims.validate()?;
        if n_actions == 0 || n_obs == 0 || n_states == 0 {
            return Err(TrainError::InvalidConfig {
                reason: format!(
                    "model dimensions must be positive, got {n_actions} actions, \
                     {n_obs} observations, {n_states} states"
                ),
            });
        }

        let mut policy = Params::new();
        let mut rng = derive_rng(seed, &[0x4E, 0x01]);
        let enc = SeqEncoder::new(&mut policy, n_actions, n_obs, dims, &mut rng);
        let head = MlpHead::with_hidden(
            &mut policy,
            "head",
            dims.hidden,
            dims.mlp1,
            dims.mlp2,
            n_actions,
            &mut rng,
        );
        let pol = PolicyBranch { enc, head };

        let mut critic = Params::new();
        let mut rng = derive_rng(seed, &[0x4E, 0x02]);
        let enc = SeqEncoder::new(&mut critic, n_actions, n_obs, dims, &mut rng);
        let state = EmbeddingTable::new(&mut critic, "state", n_states, dims.embed, &mut rng);
        let head = MlpHead::with_hidden(
            &mut critic,
            "head",
            dims.hidden + dims.embed,
            dims.mlp1,
            dims.mlp2,
            1,
            &mut rng,
        );
        let cri = CriticBranch {
            enc,
            state,
            head,
            hidden_dim: dims.hidden,
            embed_dim: dims.embed,
        };

        let target = critic.clone();
        Ok(AgentNets {
            kind,
            dims,
            n_actions,
            n_obs,
            n_states,
            policy,
            critic,
            target,
            pol,
            cri,
        })
    }

    /// Convenience constructor reading the dimensions off a model.
    pub fn for_model(pomdp: &Pomdp, kind: CriticKind, seed: u64) -> Result<Self> {
        Self::new(kind, pomdp.n_actions(), pomdp.n_obs(), pomdp.n_states(), seed)
    }

    pub fn kind(&self) -> CriticKind {
        self.kind
    }

    pub fn dims(&self) -> NetDims {
        self.dims
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn n_obs(&self) -> usize {
        self.n_obs
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    /// The action index reserved for "no action yet".
    pub fn start_symbol(&self) -> usize {
        self.n_actions
    }

    pub fn policy_params(&self) -> &Params {
        &self.policy
    }

    pub fn critic_params(&self) -> &Params {
        &self.critic
    }

    pub fn target_params(&self) -> &Params {
        &self.target
    }

    /// The policy branch's history features (the GRU hidden state after
    /// folding `h`, truncated first for quasi-reactive kinds).
    pub fn encode_policy_features(&self, h: &History) -> Vec<f64> {
        let mut tape = Tape::new();
        let trunc = self.kind.truncation();
        let hidden =
            self.pol
                .enc
                .encode(&mut tape, &self.policy, h, trunc, self.start_symbol());
        tape.value(hidden).to_vec()
    }

    /// π(·; h) as a distribution.
    pub fn policy_distribution(&self, h: &History) -> DiscreteDistribution {
        let mut tape = Tape::new();
        let trunc = self.kind.truncation();
        let hidden =
            self.pol
                .enc
                .encode(&mut tape, &self.policy, h, trunc, self.start_symbol());
        let lp = self.pol.log_probs(&mut tape, &self.policy, hidden);
        let probs: Vec<f64> = tape.value(lp).iter().map(|&l| l.exp()).collect();
        DiscreteDistribution::from_weights_unchecked(probs)
    }

    /// Online-critic output for one query.
    pub fn critic_value(&self, h: &History, state: Option<usize>) -> Result<f64> {
        self.critic_value_with(&self.critic, h, state)
    }

    /// Frozen-target output for one query.
    pub fn target_value(&self, h: &History, state: Option<usize>) -> Result<f64> {
        self.critic_value_with(&self.target, h, state)
    }

    pub(crate) fn critic_value_with(
        &self,
        params: &Params,
        h: &History,
        state: Option<usize>,
    ) -> Result<f64> {
        if let Some(s) = state {
            if s >= self.n_states {
                return Err(TrainError::StateOutOfRange { state: s, n_states: self.n_states });
            }
        }
        let mut tape = Tape::new();
        let v = self.cri.value(
            &mut tape,
            params,
            self.kind,
            self.start_symbol(),
            h,
            state,
        )?;
        Ok(tape.scalar(v))
    }

    pub(crate) fn refresh_target(&mut self) {
        self.target = self.critic.clone();
    }

    // ── Checkpointing ──

    /// Writes policy, critic, target, both optimizer states, and a small
    /// layout descriptor so [`AgentNets::load`] can rebuild the agent without
    /// outside knowledge.
    pub fn save(
        &self,
        path: impl AsRef<Path>,
        step: u64,
        actor: &Adam,
        critic_opt: &Adam,
    ) -> Result<()> {
        let meta = self.meta_params();
        save_checkpoint(
            path,
            step,
            &[
                ("meta", &meta),
                ("policy", &self.policy),
                ("critic", &self.critic),
                ("target", &self.target),
            ],
            &[("actor", actor), ("critic", critic_opt)],
        )?;
        Ok(())
    }

    /// Rebuilds an agent (and its optimizers) from [`AgentNets::save`] output.
    pub fn load(path: impl AsRef<Path>) -> Result<(AgentNets, Adam, Adam, u64)> {
        let data = load_checkpoint(path)?;
        let meta = data
            .params("meta")
            .ok_or_else(|| TrainError::MalformedAgentCheckpoint {
                reason: "missing the layout section".into(),
            })?;
        let layout_id =
            meta.id_of("layout").ok_or_else(|| TrainError::MalformedAgentCheckpoint {
                reason: "layout section has no layout row".into(),
            })?;
        let raw = meta.tensor(layout_id).data().to_vec();
        let nets = Self::from_layout(&raw)?;
        let mut nets = nets;
        data.restore_params("policy", &mut nets.policy)?;
        data.restore_params("critic", &mut nets.critic)?;
        data.restore_params("target", &mut nets.target)?;

        let actor_snap = data
            .optimizer("actor")
            .ok_or_else(|| TrainError::MalformedAgentCheckpoint {
                reason: "missing the actor optimizer".into(),
            })?
            .clone();
        let critic_snap = data
            .optimizer("critic")
            .ok_or_else(|| TrainError::MalformedAgentCheckpoint {
                reason: "missing the critic optimizer".into(),
            })?
            .clone();
        let actor = Adam::restore(&nets.policy, actor_snap)?;
        let critic_opt = Adam::restore(&nets.critic, critic_snap)?;
        Ok((nets, actor, critic_opt, data.step))
    }

    fn meta_params(&self) -> Params {
        let (code, k) = self.kind.code();
        let row = vec![
            1.0, // layout format
            f64::from(code),
            k as f64,
            self.n_actions as f64,
            self.n_obs as f64,
            self.n_states as f64,
            self.dims.embed as f64,
            self.dims.hidden as f64,
            self.dims.mlp1 as f64,
            self.dims.mlp2 as f64,
        ];
        let mut meta = Params::new();
        meta.add("layout", Tensor::new(1, row.len(), row));
        meta
    }

    fn from_layout(raw: &[f64]) -> Result<AgentNets> {
        let field = |i: usize| -> Result<usize> {
            let v = raw.get(i).copied().ok_or_else(|| {
                TrainError::MalformedAgentCheckpoint {
                    reason: format!("layout row has {} fields, expected 10", raw.len()),
                }
            })?;
            if v < 0.0 || v.fract() != 0.0 || v > u32::MAX as f64 {
                return Err(TrainError::MalformedAgentCheckpoint {
                    reason: format!("layout field {i} is {v}, not a small integer"),
                });
            }
            Ok(v as usize)
        };
        if field(0)? != 1 {
            return Err(TrainError::MalformedAgentCheckpoint {
                reason: format!("unknown layout format {}", raw[0]),
            });
        }
        let kind = CriticKind::from_code(field(1)? as u8, field(2)?).ok_or_else(|| {
            TrainError::MalformedAgentCheckpoint {
                reason: format!("unknown critic kind code {}", raw[1]),
            }
        })?;
        let dims = NetDims {
            embed: field(6)?,
            hidden: field(7)?,
            mlp1: field(8)?,
            mlp2: field(9)?,
        };
        Self::with_dims(kind, field(3)?, field(4)?, field(5)?, dims, 0)
    }
}
