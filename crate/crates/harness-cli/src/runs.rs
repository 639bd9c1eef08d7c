//! Experiment orchestration: multi-seed runs, manifests, aggregation, and
//! hyperparameter grids.
//!
//! Every run directory is self-describing: `manifest.cfg` echoes the full
//! experiment specification (plus the code version that produced it) in the
//! same text format the tool accepts as input, so any output directory can
//! be re-run or audited by parsing its own manifest.
//!
//! Aggregation follows the usual learning-curve convention: episode returns
//! are grouped into fixed-width timestep buckets, each run contributes its
//! per-bucket mean, and the cross-run mean is reported with the standard
//! error of the mean over however many runs actually have data in that
//! bucket. A run that diverged early simply stops contributing to later
//! buckets; its partial curve still counts where it exists.

use crate::config::{self, ConfigDoc};
use crate::csvio;
use crate::envs;
use crate::error::{HarnessError, Result};
use agent_trainer::{train, CriticKind, LearningCurve, NetDims, TrainConfig, TrainError};
use pomdp_core::{Pomdp, TerminalSpec};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

/// Everything needed to reproduce one multi-seed training experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    /// Environment name (see [`envs::resolve_env`]); a label when
    /// `pomdp_file` is set.
    pub env: String,
    /// Model file overriding the named environment, if any.
    pub pomdp_file: Option<PathBuf>,
    pub kind: CriticKind,
    /// Training configuration; its `seed` field is ignored — each run takes
    /// its seed from `seeds`.
    pub config: TrainConfig,
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(HarnessError::config("seed list is empty"));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() {
            return Err(HarnessError::config("seed list contains duplicates"));
        }
        self.config.validate()?;
        Ok(())
    }

    /// Serializes the spec as a manifest document. `version` is recorded
    /// under `[provenance]`; parsing ignores its value, so provenance never
    /// affects spec identity.
    pub fn to_config_doc(&self, version: &str) -> ConfigDoc {
        let mut doc = ConfigDoc::new();
        doc.push("experiment", "env", &self.env);
        if let Some(path) = &self.pomdp_file {
            doc.push("experiment", "pomdp-file", path.display());
        }
        doc.push("experiment", "critic", self.kind.label());
        doc.push("experiment", "seeds", config::join_list(&self.seeds));
        doc.push("experiment", "out", self.out_dir.display());
        let c = &self.config;
        doc.push("train", "max-steps", c.max_timesteps);
        doc.push("train", "lr-actor", c.lr_actor);
        doc.push("train", "lr-critic", c.lr_critic);
        doc.push("train", "lambda0", c.lambda0);
        doc.push("train", "episodes-per-update", c.episodes_per_update);
        doc.push("train", "episode-cap", c.episode_cap);
        doc.push("train", "target-refresh", c.target_refresh_period);
        doc.push("train", "gamma-t-weighting", c.gamma_t_weighting);
        doc.push("train", "embed", c.dims.embed);
        doc.push("train", "hidden", c.dims.hidden);
        doc.push("train", "mlp1", c.dims.mlp1);
        doc.push("train", "mlp2", c.dims.mlp2);
        doc.push("provenance", "version", version);
        doc
    }

    /// Reconstructs a spec from a manifest document. Unknown keys or
    /// sections are errors.
    pub fn from_config_doc(doc: &ConfigDoc) -> Result<ExperimentSpec> {
        if doc.has_section("provenance") {
            doc.expect_sections(&["experiment", "train", "provenance"])?;
            let mut prov = doc.read_section("provenance")?;
            prov.get("version");
            prov.finish()?;
        } else {
            doc.expect_sections(&["experiment", "train"])?;
        }

        let mut exp = doc.read_section("experiment")?;
        let env = exp.require("env")?.to_string();
        let pomdp_file = exp.get("pomdp-file").map(PathBuf::from);
        let critic_label = exp.require("critic")?;
        let kind = CriticKind::parse_label(critic_label).ok_or_else(|| {
            HarnessError::config(format!("unknown critic kind `{critic_label}`"))
        })?;
        let seeds = config::parse_u64_list("seeds", exp.require("seeds")?)?;
        let out_dir = PathBuf::from(exp.require("out")?);
        exp.finish()?;

        let mut tr = doc.read_section("train")?;
        let max_steps = config::parse_u64("max-steps", tr.require("max-steps")?)?;
        let (da, dc, dl) = envs::default_cell(&env, kind);
        let mut cfg = TrainConfig::new(da, dc, dl, max_steps, 0);
        if let Some(v) = tr.get("lr-actor") {
            cfg.lr_actor = config::parse_f64("lr-actor", v)?;
        }
        if let Some(v) = tr.get("lr-critic") {
            cfg.lr_critic = config::parse_f64("lr-critic", v)?;
        }
        if let Some(v) = tr.get("lambda0") {
            cfg.lambda0 = config::parse_f64("lambda0", v)?;
        }
        if let Some(v) = tr.get("episodes-per-update") {
            cfg.episodes_per_update = config::parse_usize("episodes-per-update", v)?;
        }
        if let Some(v) = tr.get("episode-cap") {
            cfg.episode_cap = config::parse_usize("episode-cap", v)?;
        }
        if let Some(v) = tr.get("target-refresh") {
            cfg.target_refresh_period = config::parse_u64("target-refresh", v)?;
        }
        if let Some(v) = tr.get("gamma-t-weighting") {
            cfg.gamma_t_weighting = config::parse_bool("gamma-t-weighting", v)?;
        }
        let mut dims = NetDims::default();
        if let Some(v) = tr.get("embed") {
            dims.embed = config::parse_usize("embed", v)?;
        }
        if let Some(v) = tr.get("hidden") {
            dims.hidden = config::parse_usize("hidden", v)?;
        }
        if let Some(v) = tr.get("mlp1") {
            dims.mlp1 = config::parse_usize("mlp1", v)?;
        }
        if let Some(v) = tr.get("mlp2") {
            dims.mlp2 = config::parse_usize("mlp2", v)?;
        }
        cfg.dims = dims;
        tr.finish()?;

        Ok(ExperimentSpec { env, pomdp_file, kind, config: cfg, seeds, out_dir })
    }
}

// ── Aggregation ───────────────────────────────────────────────────────────

/// Width of the timestep buckets used for cross-run aggregation.
pub const BUCKET_WIDTH: u64 = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateBucket {
    /// First timestep covered by the bucket (multiples of [`BUCKET_WIDTH`]).
    pub bucket_start: u64,
    /// Mean over runs of the per-run mean episode return in this bucket.
    pub mean: f64,
    /// Standard error of the mean over the runs present; 0 for a lone run.
    pub sem: f64,
    /// How many runs had at least one episode end in this bucket.
    pub n_runs: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AggregateCurve {
    pub buckets: Vec<AggregateBucket>,
}

impl AggregateCurve {
    pub fn from_curves<'a>(curves: impl IntoIterator<Item = &'a LearningCurve>) -> Self {
        // bucket index → per-run means, in run order.
        let mut table: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
        for curve in curves {
            let mut per_run: BTreeMap<u64, (f64, usize)> = BTreeMap::new();
            for p in curve.points() {
                let cell = per_run.entry(p.timestep / BUCKET_WIDTH).or_insert((0.0, 0));
                cell.0 += p.ret;
                cell.1 += 1;
            }
            for (idx, (sum, count)) in per_run {
                table.entry(idx).or_default().push(sum / count as f64);
            }
        }
        let buckets = table
            .into_iter()
            .map(|(idx, means)| {
                let n = means.len();
                let mean = means.iter().sum::<f64>() / n as f64;
                let sem = if n >= 2 {
                    let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>()
                        / (n as f64 - 1.0);
                    (var / n as f64).sqrt()
                } else {
                    0.0
                };
                AggregateBucket { bucket_start: idx * BUCKET_WIDTH, mean, sem, n_runs: n }
            })
            .collect();
        AggregateCurve { buckets }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("bucket_start,mean_return,sem,n_runs\n");
        for b in &self.buckets {
            out.push_str(&format!("{},{},{},{}\n", b.bucket_start, b.mean, b.sem, b.n_runs));
        }
        out
    }
}

// ── Multi-seed execution ──────────────────────────────────────────────────

/// What happened to one seed of an experiment.
#[derive(Debug, Clone)]
pub struct SeedOutcome {
    pub seed: u64,
    /// Learning progress — complete, or partial if the run diverged.
    pub curve: LearningCurve,
    /// Divergence diagnostic, when the run blew up instead of finishing.
    pub diverged: Option<String>,
    /// Environment timesteps consumed.
    pub timesteps: u64,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub out_dir: PathBuf,
    pub outcomes: Vec<SeedOutcome>,
    pub aggregate: AggregateCurve,
}

impl RunReport {
    pub fn any_diverged(&self) -> bool {
        self.outcomes.iter().any(|o| o.diverged.is_some())
    }

    /// Mean and standard error of the final rolling-100 return over the
    /// seeds that finished, with the finisher count.
    pub fn final_metric(&self) -> (f64, f64, usize) {
        let finals: Vec<f64> = self
            .outcomes
            .iter()
            .filter(|o| o.diverged.is_none())
            .filter_map(|o| o.curve.last_rolling())
            .collect();
        let n = finals.len();
        if n == 0 {
            return (f64::NEG_INFINITY, 0.0, 0);
        }
        let mean = finals.iter().sum::<f64>() / n as f64;
        let sem = if n >= 2 {
            let var =
                finals.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        (mean, sem, n)
    }
}

pub fn curve_filename(seed: u64) -> String {
    format!("curve_seed{seed}.csv")
}

pub fn checkpoint_filename(seed: u64) -> String {
    format!("agent_seed{seed}.ckpt")
}

pub fn divergence_filename(seed: u64) -> String {
    format!("divergence_seed{seed}.txt")
}

/// Runs every seed of `spec` (up to `workers` in parallel), writing per-seed
/// curves and checkpoints, an aggregate curve, and a manifest under
/// `spec.out_dir`.
///
/// A diverged seed is recorded — partial curve plus a `divergence_seed*.txt`
/// note — and does not abort the experiment; the caller decides what status
/// that deserves. Genuine setup failures (bad config, unwritable disk)
/// abort.
pub fn run_experiment(spec: &ExperimentSpec, workers: usize) -> Result<RunReport> {
    spec.validate()?;
    let (pomdp, terminals) = envs::resolve_env(&spec.env, spec.pomdp_file.as_deref())?;
    std::fs::create_dir_all(&spec.out_dir).map_err(|e| HarnessError::io(&spec.out_dir, e))?;
    let manifest = spec.to_config_doc(env!("CARGO_PKG_VERSION")).serialize();
    csvio::write_file(spec.out_dir.join("manifest.cfg"), &manifest)?;

    let n = spec.seeds.len();
    let queue = Mutex::new((0..n).collect::<Vec<usize>>());
    let results: Mutex<Vec<Option<Result<SeedOutcome>>>> = Mutex::new((0..n).map(|_| None).collect());
    let workers = workers.clamp(1, n);

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let Some(idx) = queue.lock().unwrap().pop() else { break };
                let outcome = run_one_seed(spec, &pomdp, &terminals, spec.seeds[idx]);
                results.lock().unwrap()[idx] = Some(outcome);
            });
        }
    });

    let mut outcomes = Vec::with_capacity(n);
    for slot in results.into_inner().unwrap() {
        outcomes.push(slot.expect("every queued seed produces an outcome")?);
    }

    let aggregate = AggregateCurve::from_curves(outcomes.iter().map(|o| &o.curve));
    csvio::write_file(spec.out_dir.join("aggregate.csv"), &aggregate.to_csv())?;
    Ok(RunReport { out_dir: spec.out_dir.clone(), outcomes, aggregate })
}

fn run_one_seed(
    spec: &ExperimentSpec,
    pomdp: &Pomdp,
    terminals: &TerminalSpec,
    seed: u64,
) -> Result<SeedOutcome> {
    let mut cfg = spec.config.clone();
    cfg.seed = seed;
    match train(pomdp, terminals, spec.kind, &cfg) {
        Ok(out) => {
            csvio::write_file(
                spec.out_dir.join(curve_filename(seed)),
                &csvio::curve_to_csv(&out.curve),
            )?;
            out.nets
                .save(
                    spec.out_dir.join(checkpoint_filename(seed)),
                    out.timesteps,
                    &out.actor,
                    &out.critic_opt,
                )
                .map_err(HarnessError::Train)?;
            Ok(SeedOutcome { seed, timesteps: out.timesteps, curve: out.curve, diverged: None })
        }
        Err(TrainError::Diverged { timestep, detail, curve }) => {
            csvio::write_file(
                spec.out_dir.join(curve_filename(seed)),
                &csvio::curve_to_csv(&curve),
            )?;
            let note = format!("timestep = {timestep}\ndetail = {detail}\n");
            csvio::write_file(spec.out_dir.join(divergence_filename(seed)), &note)?;
            Ok(SeedOutcome { seed, timesteps: timestep, curve: *curve, diverged: Some(detail) })
        }
        Err(other) => Err(other.into()),
    }
}

// ── Grid search ───────────────────────────────────────────────────────────

/// Hyperparameter grid: the cross product of actor rates, critic rates, and
/// entropy weights, each cell trained on `runs_per_cell` seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSearchSpec {
    pub actor_rates: Vec<f64>,
    pub critic_rates: Vec<f64>,
    pub lambda0s: Vec<f64>,
    pub runs_per_cell: usize,
}

impl GridSearchSpec {
    /// The full search used for tuning: 3 × 3 learning-rate pairs crossed
    /// with the environment's λ₀ range.
    pub fn for_env(env: &str, runs_per_cell: usize) -> Self {
        GridSearchSpec {
            actor_rates: envs::RATE_GRID.to_vec(),
            critic_rates: envs::RATE_GRID.to_vec(),
            lambda0s: envs::lambda0_grid(env),
            runs_per_cell,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.actor_rates.is_empty() || self.critic_rates.is_empty() || self.lambda0s.is_empty()
        {
            return Err(HarnessError::config("grid axes must be nonempty"));
        }
        if self.runs_per_cell == 0 {
            return Err(HarnessError::config("runs-per-cell must be at least 1"));
        }
        Ok(())
    }

    pub fn n_cells(&self) -> usize {
        self.actor_rates.len() * self.critic_rates.len() * self.lambda0s.len()
    }

    /// Cells in deterministic (actor, critic, λ₀) nesting order.
    pub fn cells(&self) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::with_capacity(self.n_cells());
        for &a in &self.actor_rates {
            for &c in &self.critic_rates {
                for &l in &self.lambda0s {
                    out.push((a, c, l));
                }
            }
        }
        out
    }

    /// Reads a `[grid]` section: `actor-rates`, `critic-rates`, `lambda0s`,
    /// `runs-per-cell`, each optional over `self` as the base.
    pub fn apply_config(&mut self, doc: &ConfigDoc) -> Result<()> {
        if !doc.has_section("grid") {
            return Ok(());
        }
        let mut sec = doc.read_section("grid")?;
        if let Some(v) = sec.get("actor-rates") {
            self.actor_rates = config::parse_f64_list("actor-rates", v)?;
        }
        if let Some(v) = sec.get("critic-rates") {
            self.critic_rates = config::parse_f64_list("critic-rates", v)?;
        }
        if let Some(v) = sec.get("lambda0s") {
            self.lambda0s = config::parse_f64_list("lambda0s", v)?;
        }
        if let Some(v) = sec.get("runs-per-cell") {
            self.runs_per_cell = config::parse_usize("runs-per-cell", v)?;
        }
        sec.finish()
    }
}

/// One grid cell's ranking row.
#[derive(Debug, Clone)]
pub struct CellResult {
    pub lr_actor: f64,
    pub lr_critic: f64,
    pub lambda0: f64,
    /// Mean final rolling-100 return over finished seeds; −∞ when every
    /// seed diverged, so broken cells sink to the bottom of the ranking.
    pub final_mean: f64,
    pub final_sem: f64,
    pub n_runs: usize,
    pub n_diverged: usize,
    pub dir: PathBuf,
}

#[derive(Debug, Clone)]
pub struct GridReport {
    /// Cells ranked best-first.
    pub cells: Vec<CellResult>,
}

impl GridReport {
    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("rank,lr_actor,lr_critic,lambda0,final_mean,final_sem,n_runs,n_diverged\n");
        for (i, c) in self.cells.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                i + 1,
                c.lr_actor,
                c.lr_critic,
                c.lambda0,
                c.final_mean,
                c.final_sem,
                c.n_runs,
                c.n_diverged
            ));
        }
        out
    }
}

fn cell_dir_name(a: f64, c: f64, l: f64) -> String {
    format!("cell-a{a}-c{c}-l{l}")
}

/// Trains every cell of the grid and ranks cells by mean final rolling-100
/// return. Ties prefer the lower actor rate, then the lower critic rate,
/// then the smaller λ₀ — when two cells reach the same return, the gentler
/// optimizer is the safer recommendation.
pub fn grid_search(
    env: &str,
    pomdp_file: Option<&Path>,
    kind: CriticKind,
    grid: &GridSearchSpec,
    base: &TrainConfig,
    out_dir: &Path,
    workers: usize,
) -> Result<GridReport> {
    grid.validate()?;
    std::fs::create_dir_all(out_dir).map_err(|e| HarnessError::io(out_dir, e))?;
    let mut cells = Vec::with_capacity(grid.n_cells());
    for (a, c, l) in grid.cells() {
        let mut cfg = base.clone();
        cfg.lr_actor = a;
        cfg.lr_critic = c;
        cfg.lambda0 = l;
        let dir = out_dir.join(cell_dir_name(a, c, l));
        let spec = ExperimentSpec {
            env: env.to_string(),
            pomdp_file: pomdp_file.map(PathBuf::from),
            kind,
            config: cfg,
            seeds: (1..=grid.runs_per_cell as u64).collect(),
            out_dir: dir.clone(),
        };
        let report = run_experiment(&spec, workers)?;
        let (final_mean, final_sem, n_finished) = report.final_metric();
        cells.push(CellResult {
            lr_actor: a,
            lr_critic: c,
            lambda0: l,
            final_mean,
            final_sem,
            n_runs: n_finished,
            n_diverged: report.outcomes.len() - n_finished,
            dir,
        });
    }
    cells.sort_by(|x, y| {
        y.final_mean
            .total_cmp(&x.final_mean)
            .then(x.lr_actor.total_cmp(&y.lr_actor))
            .then(x.lr_critic.total_cmp(&y.lr_critic))
            .then(x.lambda0.total_cmp(&y.lambda0))
    });
    let report = GridReport { cells };
    csvio::write_file(out_dir.join("ranking.csv"), &report.to_csv())?;
    Ok(report)
}
