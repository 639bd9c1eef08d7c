//! Benchmark POMDP constructors plus a loader/exporter for the classic
//! `.pomdp` text format.
//!
//! Three families ship here: a two-state emission puzzle where acting on the
//! last observation looks deceptively Markov ([`build_goodbad`]), a T-shaped
//! corridor where a priest at the far end reveals which exit pays off
//! ([`build_heavenhell`]), and a grid-world shopping task whose item location
//! must be queried ([`build_shopping`]). All builders return models that pass
//! [`pomdp_core::validate`] with empty diagnostics.

mod goodbad;
mod heavenhell;
mod pomdp_file;
mod shopping;

pub use goodbad::{build_goodbad, GB_ACT_B, GB_ACT_G, GB_OBS_B, GB_OBS_G, GB_STATE_B, GB_STATE_G};
pub use heavenhell::{build_heavenhell, fork_probes, HeavenHellLayout, EAST, NORTH, SOUTH, WEST};
pub use pomdp_file::{export_pomdp_file, load_pomdp_file, parse_pomdp_file};
pub use shopping::{build_shopping, ShoppingLayout, BUY, DOWN, LEFT, QUERY, RIGHT, UP};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("unsupported {what} size {requested}; supported sizes: {supported:?}")]
    UnsupportedSize {
        what: &'static str,
        requested: usize,
        supported: Vec<usize>,
    },

    #[error("parse error at line {line}, column {col}: {message}")]
    Parse {
        line: usize,
        col: usize,
        message: String,
    },

    #[error("invalid model: {}", diagnostics.join("; "))]
    Invalid { diagnostics: Vec<String> },

    #[error("model not representable in the file format: {0}")]
    Unrepresentable(String),

    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },

    #[error(transparent)]
    Model(#[from] pomdp_core::Error),
}

pub type Result<T> = std::result::Result<T, EnvError>;
