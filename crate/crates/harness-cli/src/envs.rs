//! Environment-name resolution and per-environment tuning defaults.

use crate::error::{HarnessError, Result};
use agent_trainer::CriticKind;
use env_suite::{build_goodbad, build_heavenhell, build_shopping, load_pomdp_file};
use pomdp_core::{Pomdp, TerminalSpec};
use std::path::Path;

/// Discount used for the two-state diagnostic model when trained or
/// inspected through the CLI. Its value-bootstrap gap is discount-free, so
/// any choice works; 0.9 keeps printed values in a readable range.
pub const GOODBAD_GAMMA: f64 = 0.9;

pub const KNOWN_ENVS: [&str; 5] =
    ["goodbad", "heavenhell-3", "heavenhell-4", "shopping-5", "shopping-6"];

/// Builds a named environment, or loads a model file when `pomdp_file` is
/// given (the name is then only a label). Unknown names list the inventory.
pub fn resolve_env(name: &str, pomdp_file: Option<&Path>) -> Result<(Pomdp, TerminalSpec)> {
    if let Some(path) = pomdp_file {
        let pomdp = load_pomdp_file(path)?;
        return Ok((pomdp, TerminalSpec::none()));
    }
    match name {
        "goodbad" => Ok((build_goodbad(GOODBAD_GAMMA)?, TerminalSpec::none())),
        "heavenhell-3" => Ok(build_heavenhell(3)?),
        "heavenhell-4" => Ok(build_heavenhell(4)?),
        "shopping-5" => Ok(build_shopping(5)?),
        "shopping-6" => Ok(build_shopping(6)?),
        other => Err(HarnessError::config(format!(
            "unknown environment `{other}` (expected one of {}, or --pomdp-file)",
            KNOWN_ENVS.join(", ")
        ))),
    }
}

/// Grid-searched learning rates shared by every environment.
pub const RATE_GRID: [f64; 3] = [0.0001, 0.0003, 0.001];

/// Entropy-weight grid, tuned per environment family: navigation tasks
/// (corridor mazes) search a low range, the store tasks an order of
/// magnitude higher. Unknown environments get the low range.
pub fn lambda0_grid(env: &str) -> Vec<f64> {
    match env {
        "shopping-5" | "shopping-6" => vec![0.3, 1.0, 3.0, 10.0, 30.0],
        _ => vec![0.01, 0.03, 0.1, 0.3, 1.0],
    }
}

/// Best (actor rate, critic rate, λ₀) found by grid search for each built-in
/// environment and critic kind. The joint-critic cell doubles for its
/// sampled variant; anything else falls back to a safe middle cell.
pub fn default_cell(env: &str, kind: CriticKind) -> (f64, f64, f64) {
    use CriticKind::*;
    let kind = match kind {
        HistoryStateSampled => HistoryState,
        other => other,
    };
    match (env, kind) {
        ("heavenhell-3", HistoryState) => (0.001, 0.001, 0.1),
        ("heavenhell-3", State) => (0.001, 0.001, 1.0),
        ("heavenhell-3", History) => (0.001, 0.001, 0.1),
        ("heavenhell-3", TruncatedHistory(2)) => (0.001, 0.0003, 1.0),
        ("heavenhell-3", TruncatedHistory(4)) => (0.001, 0.0003, 1.0),

        ("heavenhell-4", HistoryState) => (0.001, 0.001, 0.1),
        ("heavenhell-4", State) => (0.001, 0.001, 0.1),
        ("heavenhell-4", History) => (0.001, 0.0003, 0.3),
        ("heavenhell-4", TruncatedHistory(2)) => (0.001, 0.0003, 0.3),
        ("heavenhell-4", TruncatedHistory(4)) => (0.001, 0.0003, 0.3),

        ("shopping-5", HistoryState) => (0.001, 0.0003, 3.0),
        ("shopping-5", State) => (0.001, 0.001, 10.0),
        ("shopping-5", History) => (0.001, 0.0003, 3.0),
        ("shopping-5", TruncatedHistory(2)) => (0.001, 0.001, 3.0),
        ("shopping-5", TruncatedHistory(4)) => (0.001, 0.001, 3.0),

        ("shopping-6", HistoryState) => (0.001, 0.0003, 3.0),
        ("shopping-6", State) => (0.001, 0.001, 10.0),
        ("shopping-6", History) => (0.001, 0.0003, 3.0),
        ("shopping-6", TruncatedHistory(2)) => (0.001, 0.001, 1.0),
        ("shopping-6", TruncatedHistory(4)) => (0.001, 0.0003, 10.0),

        _ => (0.001, 0.001, 0.1),
    }
}
