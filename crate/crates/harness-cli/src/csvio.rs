//! Plot-ready CSV emission with pinned schemas and bit-stable ordering.
//!
//! Three row layouts are part of the tool's external contract:
//!
//! * learning curve — `timestep,episode,return,rolling100`;
//! * value-gap report — `v_h,e_vs,e_vhs,gap_state,gap_hs` (one row);
//! * probe log — `timestep,probe_id,kind,value`.
//!
//! Floats are written with Rust's shortest round-trip formatting, so equal
//! values always produce equal bytes.

use crate::error::{HarnessError, Result};
use agent_trainer::LearningCurve;
use std::path::Path;

pub fn curve_to_csv(curve: &LearningCurve) -> String {
    let mut out = String::from("timestep,episode,return,rolling100\n");
    for p in curve.points() {
        out.push_str(&format!("{},{},{},{}\n", p.timestep, p.episode, p.ret, p.rolling));
    }
    out
}

/// One probe-log row: when it was taken, which probe, which critic kind
/// produced it, and the raw critic output.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeRow {
    pub timestep: u64,
    pub probe_id: usize,
    pub kind: String,
    pub value: f64,
}

pub fn probe_log_to_csv(rows: &[ProbeRow]) -> String {
    let mut out = String::from("timestep,probe_id,kind,value\n");
    for r in rows {
        out.push_str(&format!("{},{},{},{}\n", r.timestep, r.probe_id, r.kind, r.value));
    }
    out
}

pub fn write_file(path: impl AsRef<Path>, content: &str) -> Result<()> {
    let path = path.as_ref();
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| HarnessError::io(parent, e))?;
        }
    }
    std::fs::write(path, content).map_err(|e| HarnessError::io(path, e))
}

pub fn read_file(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))
}
