//! `pomdp-lab` — batch experiment runner and verification console.
//!
//! Exit statuses: 0 on success, 1 when a verification check fails or a
//! mandatory training run diverges, 2 for configuration errors (including
//! command-line usage errors, which clap also reports with status 2).

use clap::{Args, Parser, Subcommand};
use harness_cli::config::{self, ConfigDoc};
use harness_cli::csvio::{self, ProbeRow};
use harness_cli::envs::{default_cell, resolve_env, GOODBAD_GAMMA};
use harness_cli::verify::{run_verify, CheckName};
use harness_cli::{
    grid_search, run_experiment, ExperimentSpec, GridSearchSpec, HarnessError, Result,
};

use agent_trainer::{probe_critic, AgentNets, CriticKind, TrainConfig};
use env_suite::{build_goodbad, build_heavenhell, fork_probes};
use exact_oracle::{random_softmax_policy, GradientMode, Horizon, Oracle, TabularPolicy};
use pomdp_core::{DiscreteDistribution, History, TerminalSpec};
use std::path::{Path, PathBuf};

/// Environment variable naming the default output root (`./runs` otherwise).
const OUT_ENV_VAR: &str = "POMDP_LAB_OUT";

#[derive(Parser)]
#[command(
    name = "pomdp-lab",
    version,
    about = "Train actor-critic agents on small partially observed models, \
             search hyperparameters, verify the exact machinery, and export \
             plot-ready CSVs."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one critic variant over one or more seeds.
    Train(TrainArgs),
    /// Grid-search hyperparameters and write a ranked report.
    Grid(GridArgs),
    /// Run analytical verification checks.
    Verify(VerifyArgs),
    /// Evaluate a trained critic on the corridor-maze fork probes.
    Probe(ProbeArgs),
    /// Compute a named CSV artifact.
    Export(ExportArgs),
    /// Build an environment and print its shape diagnostics.
    ValidateEnv(ValidateEnvArgs),
}

#[derive(Args)]
struct TrainArgs {
    /// Environment name: goodbad, heavenhell-3/4, shopping-5/6.
    #[arg(long)]
    env: Option<String>,
    /// Critic conditioning: h, s, hs, hs-sampled, h2, h4.
    #[arg(long)]
    critic: Option<String>,
    /// Single seed (shorthand for --seeds with one entry).
    #[arg(long, conflicts_with = "seeds")]
    seed: Option<u64>,
    /// Comma-separated seed list; default 1,2,3.
    #[arg(long)]
    seeds: Option<String>,
    /// Environment-timestep budget per seed.
    #[arg(long)]
    max_steps: Option<u64>,
    #[arg(long)]
    lr_actor: Option<f64>,
    #[arg(long)]
    lr_critic: Option<f64>,
    /// Initial entropy-bonus weight λ₀.
    #[arg(long)]
    lambda0: Option<f64>,
    /// Output root; overrides POMDP_LAB_OUT and the built-in ./runs.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Parallel seed workers.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Model file standing in for a named environment.
    #[arg(long)]
    pomdp_file: Option<PathBuf>,
    /// Experiment manifest to start from; explicit flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct GridArgs {
    #[arg(long)]
    env: String,
    /// Critic conditioning: h, s, hs, hs-sampled, h2, h4.
    #[arg(long, default_value = "hs")]
    critic: String,
    /// Seeds per grid cell.
    #[arg(long, default_value_t = 2)]
    runs: usize,
    /// Environment-timestep budget per run.
    #[arg(long, default_value_t = 20_000)]
    max_steps: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long)]
    pomdp_file: Option<PathBuf>,
    /// Config file with a [grid] section overriding the default axes.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// goodbad, decomposition, gradients, disguise, timed, gradcheck, or all.
    check: String,
    /// Plant a known defect in a gradient path (testing the failure path).
    #[arg(long, hide = true)]
    corrupt: bool,
}

#[derive(Args)]
struct ProbeArgs {
    /// Agent checkpoint written by `train`.
    #[arg(long)]
    checkpoint: PathBuf,
    /// Corridor maze the checkpoint was trained on: heavenhell-3 or -4.
    #[arg(long)]
    env: String,
    /// Destination CSV file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExportArgs {
    /// Artifact to compute: `bias` or `gradient`.
    artifact: String,
    /// Destination directory; defaults to the output root.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Truncation depth (default: 60 for bias, 3 for gradient).
    #[arg(long)]
    depth: Option<usize>,
    /// Policy seed for the gradient artifact.
    #[arg(long, default_value_t = 41)]
    seed: u64,
}

#[derive(Args)]
struct ValidateEnvArgs {
    #[arg(long)]
    env: String,
    #[arg(long)]
    pomdp_file: Option<PathBuf>,
}

fn main() {
    let cli = Cli::parse();
    let status = match dispatch(cli) {
        Ok(status) => status,
        Err(err) => {
            eprintln!("error: {err}");
            2
        }
    };
    std::process::exit(status);
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Train(args) => cmd_train(args),
        Command::Grid(args) => cmd_grid(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Probe(args) => cmd_probe(args),
        Command::Export(args) => cmd_export(args),
        Command::ValidateEnv(args) => cmd_validate_env(args),
    }
}

fn out_root(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUT_ENV_VAR).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs"))
}

fn parse_kind(label: &str) -> Result<CriticKind> {
    CriticKind::parse_label(label).ok_or_else(|| {
        HarnessError::config(format!(
            "unknown critic kind `{label}` (expected h, s, hs, hs-sampled, h2, or h4)"
        ))
    })
}

fn load_config_doc(path: &Path) -> Result<ConfigDoc> {
    ConfigDoc::parse(&csvio::read_file(path)?)
}

// ── train ─────────────────────────────────────────────────────────────────

fn build_train_spec(args: &TrainArgs) -> Result<ExperimentSpec> {
    let mut spec = match &args.config {
        Some(path) => ExperimentSpec::from_config_doc(&load_config_doc(path)?)?,
        None => {
            let env = args.env.clone().ok_or_else(|| {
                HarnessError::config("--env is required (or pass --config)")
            })?;
            let kind = parse_kind(args.critic.as_deref().unwrap_or("hs"))?;
            let (lr_a, lr_c, l0) = default_cell(&env, kind);
            let config = TrainConfig::new(lr_a, lr_c, l0, 100_000, 0);
            let label = kind.label();
            ExperimentSpec {
                out_dir: out_root(args.out.clone()).join(format!("{env}-{label}")),
                env,
                pomdp_file: None,
                kind,
                config,
                seeds: vec![1, 2, 3],
            }
        }
    };

    // Explicit flags override whatever the base provided.
    if args.config.is_some() {
        if let Some(env) = &args.env {
            spec.env = env.clone();
        }
        if let Some(label) = &args.critic {
            spec.kind = parse_kind(label)?;
        }
        if let Some(out) = &args.out {
            spec.out_dir = out.join(format!("{}-{}", spec.env, spec.kind.label()));
        }
    }
    if let Some(path) = &args.pomdp_file {
        spec.pomdp_file = Some(path.clone());
    }
    if let Some(seed) = args.seed {
        spec.seeds = vec![seed];
    }
    if let Some(seeds) = &args.seeds {
        spec.seeds = config::parse_u64_list("--seeds", seeds)?;
    }
    if let Some(steps) = args.max_steps {
        spec.config.max_timesteps = steps;
    }
    if let Some(lr) = args.lr_actor {
        spec.config.lr_actor = lr;
    }
    if let Some(lr) = args.lr_critic {
        spec.config.lr_critic = lr;
    }
    if let Some(l0) = args.lambda0 {
        spec.config.lambda0 = l0;
    }
    Ok(spec)
}

fn cmd_train(args: TrainArgs) -> Result<i32> {
    let workers = args.workers;
    let spec = build_train_spec(&args)?;
    let report = run_experiment(&spec, workers)?;
    for o in &report.outcomes {
        match &o.diverged {
            None => println!(
                "seed {}: {} steps, {} episodes, final rolling-100 {:.4}",
                o.seed,
                o.timesteps,
                o.curve.len(),
                o.curve.last_rolling().unwrap_or(f64::NAN)
            ),
            Some(detail) => {
                println!("seed {}: DIVERGED at step {} ({detail})", o.seed, o.timesteps)
            }
        }
    }
    println!(
        "wrote {} (manifest, {} curves, aggregate)",
        report.out_dir.display(),
        report.outcomes.len()
    );
    if report.any_diverged() {
        eprintln!("one or more seeds diverged");
        return Ok(1);
    }
    Ok(0)
}

// ── grid ──────────────────────────────────────────────────────────────────

fn cmd_grid(args: GridArgs) -> Result<i32> {
    let kind = parse_kind(&args.critic)?;
    let mut grid = GridSearchSpec::for_env(&args.env, args.runs);
    if let Some(path) = &args.config {
        let doc = load_config_doc(path)?;
        doc.expect_sections(&["grid"])?;
        grid.apply_config(&doc)?;
    }
    let (lr_a, lr_c, l0) = default_cell(&args.env, kind);
    let base = TrainConfig::new(lr_a, lr_c, l0, args.max_steps, 0);
    let out_dir =
        out_root(args.out.clone()).join(format!("grid-{}-{}", args.env, kind.label()));
    let report = grid_search(
        &args.env,
        args.pomdp_file.as_deref(),
        kind,
        &grid,
        &base,
        &out_dir,
        args.workers,
    )?;
    println!("ranked {} cells; best first:", report.cells.len());
    for (i, c) in report.cells.iter().take(5).enumerate() {
        println!(
            "  #{} actor {} critic {} lambda0 {} -> final {:.4} ± {:.4} ({} runs, {} diverged)",
            i + 1,
            c.lr_actor,
            c.lr_critic,
            c.lambda0,
            c.final_mean,
            c.final_sem,
            c.n_runs,
            c.n_diverged
        );
    }
    println!("wrote {}", out_dir.join("ranking.csv").display());
    Ok(0)
}

// ── verify ────────────────────────────────────────────────────────────────

fn cmd_verify(args: VerifyArgs) -> Result<i32> {
    let checks: Vec<CheckName> = if args.check == "all" {
        CheckName::ALL.to_vec()
    } else {
        vec![CheckName::parse(&args.check).ok_or_else(|| {
            HarnessError::config(format!(
                "unknown check `{}` (expected goodbad, decomposition, gradients, \
                 disguise, timed, gradcheck, or all)",
                args.check
            ))
        })?]
    };
    let mut all_passed = true;
    for (i, check) in checks.iter().enumerate() {
        if i > 0 {
            println!();
        }
        let report = run_verify(*check, args.corrupt)?;
        print!("{}", report.render());
        all_passed &= report.passed;
    }
    Ok(if all_passed { 0 } else { 1 })
}

// ── probe ─────────────────────────────────────────────────────────────────

fn cmd_probe(args: ProbeArgs) -> Result<i32> {
    let n = match args.env.as_str() {
        "heavenhell-3" => 3,
        "heavenhell-4" => 4,
        other => {
            return Err(HarnessError::config(format!(
                "fork probes are defined for heavenhell-3 and heavenhell-4, not `{other}`"
            )))
        }
    };
    let (nets, _, _, step) = AgentNets::load(&args.checkpoint)?;
    let (pomdp, terminals) = build_heavenhell(n)?;
    if nets.n_actions() != pomdp.n_actions()
        || nets.n_obs() != pomdp.n_obs()
        || nets.n_states() != pomdp.n_states()
    {
        return Err(HarnessError::config(format!(
            "checkpoint shape ({} actions, {} observations, {} states) does not match {}",
            nets.n_actions(),
            nets.n_obs(),
            nets.n_states(),
            args.env
        )));
    }
    let probes = fork_probes(n)?;
    let values = probe_critic(&nets, &pomdp, &terminals, &probes)?;
    let kind = nets.kind().label();
    let rows: Vec<ProbeRow> = values
        .iter()
        .enumerate()
        .map(|(i, &value)| ProbeRow { timestep: step, probe_id: i, kind: kind.into(), value })
        .collect();
    let csv = csvio::probe_log_to_csv(&rows);
    match &args.out {
        Some(path) => {
            csvio::write_file(path, &csv)?;
            println!("wrote {}", path.display());
        }
        None => print!("{csv}"),
    }
    Ok(0)
}

// ── export ────────────────────────────────────────────────────────────────

fn cmd_export(args: ExportArgs) -> Result<i32> {
    let dir = args.out.clone().unwrap_or_else(|| out_root(None));
    match args.artifact.as_str() {
        "bias" => {
            // The two-state counterexample's value-estimate disagreement
            // after the reassuring first observation.
            let model = build_goodbad(GOODBAD_GAMMA)?;
            let mirror = TabularPolicy::reactive(vec![
                DiscreteDistribution::delta(0, 2),
                DiscreteDistribution::delta(1, 2),
            ]);
            let oracle = Oracle::new(&model);
            let h = History::from_initial_obs(env_suite::GB_OBS_G);
            let depth = args.depth.unwrap_or(60);
            let report = oracle.bias_report(&mirror, &h, Horizon(depth))?;
            let path = dir.join("bias.csv");
            csvio::write_file(&path, &report.to_csv())?;
            println!("wrote {}", path.display());
        }
        "gradient" => {
            let model = build_goodbad(GOODBAD_GAMMA)?;
            let policy = random_softmax_policy(args.seed, model.n_actions());
            let oracle = Oracle::with_terminals(&model, &TerminalSpec::none());
            let depth = args.depth.unwrap_or(3);
            let table =
                oracle.exact_policy_gradient(&policy, Horizon(depth), GradientMode::Symmetric)?;
            let path = dir.join("gradient.csv");
            csvio::write_file(&path, &table.to_csv())?;
            println!("wrote {}", path.display());
        }
        other => {
            return Err(HarnessError::config(format!(
                "unknown artifact `{other}` (expected bias or gradient)"
            )))
        }
    }
    Ok(0)
}

// ── validate-env ──────────────────────────────────────────────────────────

fn cmd_validate_env(args: ValidateEnvArgs) -> Result<i32> {
    let (pomdp, terminals) = resolve_env(&args.env, args.pomdp_file.as_deref())?;
    let n_terminal = (0..pomdp.n_states()).filter(|&s| terminals.is_terminal_state(s)).count();
    println!("[environment]");
    println!("name = {}", args.env);
    println!("states = {}", pomdp.n_states());
    println!("actions = {}", pomdp.n_actions());
    println!("observations = {}", pomdp.n_obs());
    println!("gamma = {}", pomdp.gamma());
    println!("terminal_states = {n_terminal}");
    println!("initial_observation = {}", pomdp.initial_obs().is_some());
    println!("result = VALID");
    Ok(0)
}
