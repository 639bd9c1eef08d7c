//! Analytical verification commands: each check recomputes a closed-form or
//! brute-force quantity two independent ways and reports the numbers plus a
//! PASS/FAIL verdict with its tolerance pinned in code.
//!
//! Reports render in the same `[section]` / `key = value` text format the
//! config parser reads, so they are machine-readable with the tooling
//! already in hand.

use crate::envs::GOODBAD_GAMMA;
use crate::error::{HarnessError, Result};
use autodiff_nn::blocks::{EmbeddingTable, GruCell, Linear, MlpHead};
use autodiff_nn::gradcheck::{GradCheck, Tamper};
use autodiff_nn::tape::Tape;
use autodiff_nn::tensor::{Grads, Params, Var};
use env_suite::{build_goodbad, GB_OBS_G};
use exact_oracle::{
    belief_of_history, forward_histories, goodbad_contradiction, mdp_in_disguise,
    predictive_observation, random_historyful_policy, random_pomdp, random_pomdp_sized,
    random_reactive_policy, random_softmax_policy, v_state_reactive, v_timed_state_via_trajectories,
    GradientMode, GradientTable, Horizon, ObsGranularity, Oracle, TabularPolicy, DEFAULT_BUDGET,
};
use pomdp_core::seeding::derive_rng;
use pomdp_core::{DiscreteDistribution, History, TerminalSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use std::fmt::Display;
use std::time::Instant;

// Pinned tolerances. Loosening one of these is a contract change, not a fix.
const GOODBAD_TOL: f64 = 1e-9;
const GOODBAD_GAMMA_SWEEP_TOL: f64 = 1e-12;
const DECOMPOSITION_TOL: f64 = 1e-8;
const GRADIENT_TOL: f64 = 1e-8;
const DISGUISE_TOL: f64 = 1e-8;
const TIMED_FIXED_POINT_TOL: f64 = 1e-8;
const TIMED_TREE_TOL: f64 = 1e-10;

/// The available verification checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckName {
    /// Two-state counterexample numbers, including the discount-free gap.
    Goodbad,
    /// History values decompose through the belief at matched horizons.
    Decomposition,
    /// Symmetric and asymmetric exact policy gradients agree entrywise.
    Gradients,
    /// Full observability collapses history values onto state values.
    Disguise,
    /// Per-timestep state values against a linear solve and a trajectory tree.
    Timed,
    /// Central finite differences against every network block's backward pass.
    Gradcheck,
}

impl CheckName {
    pub const ALL: [CheckName; 6] = [
        CheckName::Goodbad,
        CheckName::Decomposition,
        CheckName::Gradients,
        CheckName::Disguise,
        CheckName::Timed,
        CheckName::Gradcheck,
    ];

    pub fn label(self) -> &'static str {
        match self {
            CheckName::Goodbad => "goodbad",
            CheckName::Decomposition => "decomposition",
            CheckName::Gradients => "gradients",
            CheckName::Disguise => "disguise",
            CheckName::Timed => "timed",
            CheckName::Gradcheck => "gradcheck",
        }
    }

    pub fn parse(text: &str) -> Option<CheckName> {
        CheckName::ALL.iter().copied().find(|c| c.label() == text)
    }
}

/// Metrics and verdict of one verification check.
#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub check: &'static str,
    pub passed: bool,
    /// Ordered `key = value` metric lines.
    pub lines: Vec<(String, String)>,
}

impl VerifyReport {
    fn new(check: CheckName) -> Self {
        VerifyReport { check: check.label(), passed: true, lines: Vec::new() }
    }

    fn metric(&mut self, key: &str, value: impl Display) {
        self.lines.push((key.to_string(), value.to_string()));
    }

    /// Records `value` and fails the report when it exceeds `tol`.
    fn gate(&mut self, key: &str, value: f64, tol: f64) {
        self.metric(key, value);
        if !(value <= tol) {
            self.passed = false;
        }
    }

    fn fail(&mut self, key: &str, value: impl Display) {
        self.metric(key, value);
        self.passed = false;
    }

    pub fn render(&self) -> String {
        let mut out = format!("[{}]\n", self.check);
        for (k, v) in &self.lines {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out.push_str(&format!("result = {}\n", if self.passed { "PASS" } else { "FAIL" }));
        out
    }
}

/// Runs one check. `corrupt` plants a known defect in a gradient path — only
/// the gradient-flavored checks support it — to demonstrate that failures
/// are caught and attributed.
pub fn run_verify(check: CheckName, corrupt: bool) -> Result<VerifyReport> {
    if corrupt && !matches!(check, CheckName::Gradients | CheckName::Gradcheck) {
        return Err(HarnessError::config(format!(
            "--corrupt only applies to `gradients` and `gradcheck`, not `{}`",
            check.label()
        )));
    }
    let start = Instant::now();
    let mut report = match check {
        CheckName::Goodbad => verify_goodbad()?,
        CheckName::Decomposition => verify_decomposition()?,
        CheckName::Gradients => verify_gradients(corrupt)?,
        CheckName::Disguise => verify_disguise()?,
        CheckName::Timed => verify_timed()?,
        CheckName::Gradcheck => verify_gradcheck(corrupt),
    };
    report.metric("elapsed_ms", start.elapsed().as_millis());
    Ok(report)
}

// ── goodbad ───────────────────────────────────────────────────────────────

/// The two-armed mirror policy: play arm 0 after observation 0, arm 1 after
/// observation 1.
fn mirror_policy() -> TabularPolicy {
    TabularPolicy::reactive(vec![
        DiscreteDistribution::delta(0, 2),
        DiscreteDistribution::delta(1, 2),
    ])
}

fn verify_goodbad() -> Result<VerifyReport> {
    let mut report = VerifyReport::new(CheckName::Goodbad);
    let model = build_goodbad(GOODBAD_GAMMA)?;
    let mirror = mirror_policy();
    let h = History::from_initial_obs(GB_OBS_G);

    let b = belief_of_history(&model, &h)?;
    report.metric("belief_after_g", format!("{},{}", b.prob(0), b.prob(1)));
    report.gate("belief_gap", (b.prob(0) - 2.0 / 3.0).abs().max((b.prob(1) - 1.0 / 3.0).abs()), GOODBAD_TOL);

    let pred = predictive_observation(&model, &b, 0);
    report.metric("emission_probs", format!("{},{}", pred.prob(0), pred.prob(1)));
    report.gate(
        "emission_gap",
        (pred.prob(0) - 5.0 / 6.0).abs().max((pred.prob(1) - 1.0 / 6.0).abs()),
        GOODBAD_TOL,
    );

    let v_s = v_state_reactive(&model, &TerminalSpec::none(), &mirror)?;
    report.metric("v_state", format!("{},{}", v_s[0], v_s[1]));
    report.gate("v_state_gap", (v_s[0] - 10.0).abs().max((v_s[1] - 5.0).abs()), GOODBAD_TOL);

    let (lhs, rhs, gap) = goodbad_contradiction(GOODBAD_GAMMA)?;
    report.metric("lhs", lhs);
    report.metric("rhs", rhs);
    report.metric("gap", gap);
    report.gate("lhs_gap", (lhs - 25.0 / 3.0).abs(), GOODBAD_TOL);
    report.gate("rhs_gap", (rhs - 8.5).abs(), GOODBAD_TOL);
    report.gate("gap_vs_one_sixth", (gap - 1.0 / 6.0).abs(), GOODBAD_TOL);

    // The gap is independent of the discount: sweep random γ.
    let mut rng = derive_rng(2024, &[0x47]);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let gamma: f64 = rng.gen_range(0.0..0.99);
        let (_, _, g) = goodbad_contradiction(gamma)?;
        worst = worst.max((g - 1.0 / 6.0).abs());
    }
    report.gate("gamma_sweep_worst_gap", worst, GOODBAD_GAMMA_SWEEP_TOL);
    Ok(report)
}

// ── decomposition ─────────────────────────────────────────────────────────

fn verify_decomposition() -> Result<VerifyReport> {
    let mut report = VerifyReport::new(CheckName::Decomposition);
    let mut worst = 0.0f64;
    let mut worst_model = 0u64;
    for seed in 0..100 {
        let pomdp = random_pomdp(seed);
        let policy = random_historyful_policy(1000 + seed, pomdp.n_actions());
        let oracle = Oracle::new(&pomdp);
        let gap = oracle.unbiasedness_max_gap(&policy, 3, Horizon(6))?;
        if gap > worst {
            worst = gap;
            worst_model = seed;
        }
    }
    report.metric("models", 100);
    report.metric("max_history_len", 3);
    report.metric("worst_model_seed", worst_model);
    report.gate("worst_gap", worst, DECOMPOSITION_TOL);
    Ok(report)
}

// ── gradients ─────────────────────────────────────────────────────────────

fn largest_entry(table: &GradientTable) -> Option<(String, usize)> {
    let mut best: Option<(String, usize, f64)> = None;
    for (key, row) in table.rows() {
        for (a, &v) in row.iter().enumerate() {
            if best.as_ref().map_or(true, |(_, _, b)| v.abs() > *b) {
                best = Some((key.to_string(), a, v.abs()));
            }
        }
    }
    best.map(|(k, a, _)| (k, a))
}

fn verify_gradients(corrupt: bool) -> Result<VerifyReport> {
    let mut report = VerifyReport::new(CheckName::Gradients);
    let mut worst = 0.0f64;
    let mut worst_entry: Option<(u64, String, usize)> = None;
    for seed in 0..20 {
        let pomdp = random_pomdp(seed);
        let policy = random_softmax_policy(3000 + seed, pomdp.n_actions());
        let oracle = Oracle::new(&pomdp);
        let sym = oracle.exact_policy_gradient(&policy, Horizon(3), GradientMode::Symmetric)?;
        let mut asym =
            oracle.exact_policy_gradient(&policy, Horizon(3), GradientMode::Asymmetric)?;
        if corrupt && seed == 0 {
            let (key, a) = largest_entry(&sym)
                .ok_or_else(|| HarnessError::config("gradient table is unexpectedly empty"))?;
            asym = asym.with_entry_bumped(&key, a, 1e-3);
            report.metric("planted_defect", format!("{key} action {a}"));
        }
        if let Some((key, a, gap)) = sym.worst_entry_difference(&asym) {
            if gap > worst {
                worst = gap;
                worst_entry = Some((seed, key, a));
            }
        }
    }
    report.metric("models", 20);
    report.metric("depth", 3);
    if let Some((seed, key, a)) = &worst_entry {
        report.metric("worst_model_seed", seed);
        report.metric("worst_history", key);
        report.metric("worst_action", a);
    }
    report.gate("worst_gap", worst, GRADIENT_TOL);
    Ok(report)
}

// ── disguise ──────────────────────────────────────────────────────────────

fn verify_disguise() -> Result<VerifyReport> {
    let mut report = VerifyReport::new(CheckName::Disguise);
    // A small discount makes the depth-5 truncation of V(h) sharper than the
    // tolerance: the dropped tail is at most γ⁵·rmax/(1−γ) ≈ 10⁻¹⁰.
    let gamma = 0.01;
    let terminals = TerminalSpec::none();
    let mut worst = 0.0f64;
    let mut histories = 0usize;
    for seed in 0..5 {
        let pomdp = mdp_in_disguise(seed, gamma);
        let policy = random_reactive_policy(7000 + seed, pomdp.n_obs(), pomdp.n_actions());
        let oracle = Oracle::new(&pomdp);
        let v_s = v_state_reactive(&pomdp, &terminals, &policy)?;
        let layers = forward_histories(&pomdp, &terminals, &policy, 3, DEFAULT_BUDGET)?;
        for node in layers.iter().flatten() {
            let v_h = oracle.v_history(&policy, &node.history, Horizon(5))?;
            let expected: f64 =
                node.belief().iter().zip(&v_s).map(|(b, v)| b * v).sum();
            worst = worst.max((v_h - expected).abs());
            histories += 1;
        }
    }
    report.metric("models", 5);
    report.metric("histories", histories);
    report.gate("worst_gap", worst, DISGUISE_TOL);
    Ok(report)
}

// ── timed ─────────────────────────────────────────────────────────────────

fn verify_timed() -> Result<VerifyReport> {
    let mut report = VerifyReport::new(CheckName::Timed);
    let terminals = TerminalSpec::none();

    // Frozen two-state model: V_t(s) is constant in t and equals the linear
    // solve. Horizon 250 puts the truncation tail near 10⁻¹¹.
    let model = build_goodbad(GOODBAD_GAMMA)?;
    let mirror = mirror_policy();
    let oracle = Oracle::new(&model);
    let v_inf = v_state_reactive(&model, &terminals, &mirror)?;
    let mut worst_fixed = 0.0f64;
    for t in 0..=5 {
        for (s, &v) in v_inf.iter().enumerate() {
            let vt = oracle.v_timed_state(&mirror, t, s, Horizon(250))?;
            worst_fixed = worst_fixed.max((vt - v).abs());
        }
    }
    report.gate("fixed_point_worst_gap", worst_fixed, TIMED_FIXED_POINT_TOL);

    // Random three-state models: the layered computation of V_2(s) against
    // a from-scratch trajectory-tree enumeration at the same horizon.
    let mut rng = derive_rng(2024, &[0x71]);
    let mut worst_tree = 0.0f64;
    let mut compared = 0usize;
    for seed in 0..20u64 {
        let gamma = rng.gen_range(0.3..0.9);
        let granularity = match seed % 3 {
            0 => ObsGranularity::StateOnly,
            1 => ObsGranularity::ActionNext,
            _ => ObsGranularity::Full,
        };
        let pomdp = random_pomdp_sized(seed, 3, 2, 2, gamma, granularity, seed % 2 == 0);
        let policy = random_historyful_policy(5000 + seed, pomdp.n_actions());
        let oracle = Oracle::new(&pomdp);
        let layered = oracle.timed_values(&policy, 2, Horizon(4))?;
        for (s, v) in layered.iter().enumerate() {
            let Some(v) = v else { continue };
            let tree = v_timed_state_via_trajectories(
                &pomdp,
                &terminals,
                &policy,
                2,
                s,
                Horizon(4),
                DEFAULT_BUDGET,
            )?;
            worst_tree = worst_tree.max((v - tree).abs());
            compared += 1;
        }
    }
    report.metric("models", 20);
    report.metric("states_compared", compared);
    report.gate("tree_worst_gap", worst_tree, TIMED_TREE_TOL);
    Ok(report)
}

// ── gradcheck ─────────────────────────────────────────────────────────────

/// Weight-init and probe-coordinate streams for the finite-difference
/// checks. The named seeds (79 in particular) are certified kink-safe: at
/// the point they initialize, every rectifier preactivation clears zero by
/// more than the ±1e-5 probes can move it. That certificate is for this
/// exact generator and draw order, so the checks pin both.
fn fd_rng(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

fn uniform_vec(rng: &mut impl Rng, n: usize, half: f64) -> Vec<f64> {
    (0..n).map(|_| half * (2.0 * rng.gen::<f64>() - 1.0)).collect()
}

/// One named finite-difference check over a freshly built graph.
fn fd_check(
    report: &mut VerifyReport,
    name: &str,
    params: &mut Params,
    coord_seed: u64,
    tamper: Option<Tamper>,
    build: impl Fn(&Params, &mut Tape) -> Var,
) {
    let check = GradCheck { tamper, ..GradCheck::default() };
    let fd = check.run(params, &mut fd_rng(coord_seed), build);
    report.metric(&format!("{name}.max_rel_err"), fd.max_rel_err());
    if !fd.passed() {
        report.fail(&format!("{name}.failing_groups"), fd.failing_groups().join(";"));
    }
}

fn verify_gradcheck(corrupt: bool) -> VerifyReport {
    let mut report = VerifyReport::new(CheckName::Gradcheck);

    // Embedding feeding a linear layer.
    {
        let mut params = Params::new();
        let mut r = fd_rng(11);
        let emb = EmbeddingTable::new(&mut params, "emb", 6, 4, &mut r);
        let lin = Linear::new(&mut params, "lin", 4, 3, &mut r);
        fd_check(&mut report, "embedding_linear", &mut params, 12, None, |p, tape| {
            let e = emb.lookup(tape, p, 2);
            let y = lin.apply(tape, p, e);
            let picks: Vec<_> = (0..3).map(|k| tape.pick(y, k)).collect();
            tape.sum_squared_residuals(&picks, &[0.1, -0.4, 0.9])
        });
    }

    // Three rectified layers end to end.
    {
        let mut params = Params::new();
        let mut r = fd_rng(21);
        let l1 = Linear::new(&mut params, "s1", 5, 8, &mut r);
        let l2 = Linear::new(&mut params, "s2", 8, 8, &mut r);
        let l3 = Linear::new(&mut params, "s3", 8, 1, &mut r);
        let x = uniform_vec(&mut r, 5, 1.5);
        fd_check(&mut report, "rectifier_stack", &mut params, 22, None, move |p, tape| {
            let v = tape.constant(x.clone());
            let a1 = l1.apply(tape, p, v);
            let a = tape.relu(a1);
            let b1 = l2.apply(tape, p, a);
            let b = tape.relu(b1);
            let y = l3.apply(tape, p, b);
            let y0 = tape.pick(y, 0);
            tape.mul(y0, y0)
        });
    }

    // The recurrent cell, from a nonzero previous state so the hidden-side
    // weights carry gradient. The corrupt hook doubles one computed entry
    // here to demonstrate attribution.
    {
        let mut params = Params::new();
        let mut r = fd_rng(31);
        let cell = GruCell::new(&mut params, "gru", 4, 6, &mut r);
        let x = uniform_vec(&mut r, 4, 2.0);
        let h0 = uniform_vec(&mut r, 6, 0.9);
        let build = {
            let (x, h0) = (x.clone(), h0.clone());
            move |p: &Params, tape: &mut Tape| {
                let xv = tape.constant(x.clone());
                let hv = tape.constant(h0.clone());
                let h1 = cell.apply(tape, p, xv, hv);
                let picks: Vec<_> = (0..6).map(|k| tape.pick(h1, k)).collect();
                tape.sum_squared_residuals(&picks, &[0.0; 6])
            }
        };
        let tamper = if corrupt {
            let group = params.id_of("gru.hn.w").expect("gru group exists");
            let mut grads = Grads::zeros_like(&params);
            let mut tape = Tape::new();
            let out = build(&params, &mut tape);
            tape.backward(&params, out, &mut grads).expect("backward on a fresh graph");
            let index = grads
                .group(group)
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
                .map(|(i, _)| i)
                .expect("nonempty gradient group");
            report.metric("planted_defect", format!("gru.hn.w[{index}] doubled"));
            Some(Tamper { group, index, factor: 2.0 })
        } else {
            None
        };
        fd_check(&mut report, "gru_cell", &mut params, 32, tamper, build);
    }

    // Full-width scalar/logit head.
    {
        let mut params = Params::new();
        let mut r = fd_rng(41);
        let head = MlpHead::new(&mut params, "head", 6, 3, &mut r);
        let x = uniform_vec(&mut r, 6, 1.0);
        fd_check(&mut report, "mlp_head", &mut params, 42, None, move |p, tape| {
            let v = tape.constant(x.clone());
            let y = head.apply(tape, p, v);
            let lp = tape.log_softmax(y);
            let picked = tape.pick(lp, 1);
            tape.weighted_sum(&[(-1.0, picked)])
        });
    }

    // Policy-shaped graph over a five-step history: embedded (action,
    // observation) pairs drive the recurrence, a rectified head emits
    // logits, and the loss mixes weighted log-likelihoods with an entropy
    // term. Seed 79 keeps every rectifier preactivation ≥ 2e-4 from zero at
    // the evaluation point, so ±1e-5 probes never straddle a kink.
    {
        let n_actions = 3;
        let mut params = Params::new();
        let mut r = fd_rng(79);
        let act_emb = EmbeddingTable::new(&mut params, "pol.act", n_actions + 1, 4, &mut r);
        let obs_emb = EmbeddingTable::new(&mut params, "pol.obs", 3, 4, &mut r);
        let gru = GruCell::new(&mut params, "pol.gru", 8, 6, &mut r);
        let head = MlpHead::with_hidden(&mut params, "pol.head", 6, 16, 8, n_actions, &mut r);
        let steps =
            [(3, 0, 2, 0.7), (2, 1, 0, -0.3), (0, 2, 1, 0.9), (1, 1, 1, -1.1), (1, 0, 2, 0.4)];
        fd_check(&mut report, "policy_graph", &mut params, 52, None, move |p, tape| {
            let mut h = tape.constant(gru.initial_state());
            let mut terms = Vec::new();
            for &(prev_a, o, taken, w) in &steps {
                let ae = act_emb.lookup(tape, p, prev_a);
                let oe = obs_emb.lookup(tape, p, o);
                let x = tape.concat(ae, oe);
                h = gru.apply(tape, p, x, h);
                let logits = head.apply(tape, p, h);
                let lp = tape.log_softmax(logits);
                let picked = tape.pick(lp, taken);
                terms.push((w, picked));
                let ne = tape.neg_entropy_of_log_probs(lp);
                terms.push((0.01, ne));
            }
            tape.weighted_sum(&terms)
        });
    }

    // Critic-shaped graph: recurrent history features concatenated with a
    // state embedding, scalar head, squared-residual loss.
    {
        let mut params = Params::new();
        let mut r = fd_rng(61);
        let act_emb = EmbeddingTable::new(&mut params, "cri.act", 4, 4, &mut r);
        let obs_emb = EmbeddingTable::new(&mut params, "cri.obs", 3, 4, &mut r);
        let state_emb = EmbeddingTable::new(&mut params, "cri.state", 4, 4, &mut r);
        let gru = GruCell::new(&mut params, "cri.gru", 8, 6, &mut r);
        let head = MlpHead::with_hidden(&mut params, "cri.head", 10, 16, 8, 1, &mut r);
        let steps = [(3, 0, 1), (0, 2, 3), (2, 1, 0), (1, 1, 2), (0, 0, 1)];
        let targets = [0.3, -0.2, 1.1, 0.0, -0.7];
        fd_check(&mut report, "critic_graph", &mut params, 62, None, move |p, tape| {
            let mut h = tape.constant(gru.initial_state());
            let mut preds = Vec::new();
            for &(prev_a, o, s) in &steps {
                let ae = act_emb.lookup(tape, p, prev_a);
                let oe = obs_emb.lookup(tape, p, o);
                let x = tape.concat(ae, oe);
                h = gru.apply(tape, p, x, h);
                let se = state_emb.lookup(tape, p, s);
                let joint = tape.concat(h, se);
                preds.push(head.apply(tape, p, joint));
            }
            tape.sum_squared_residuals(&preds, &targets)
        });
    }

    report
}
