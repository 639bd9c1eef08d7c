//! Binary checkpoints: named parameter sections, optimizer state, and a
//! step counter, written so identical inputs give identical bytes.
//!
//! Layout (all integers little-endian, strings length-prefixed with `u32`):
//!
//! ```text
//! magic "NNCP" · version u32
//! step u64
//! n_param_sections u32
//!   section: name · n_groups u32
//!     group: name · rows u64 · cols u64 · rows·cols f64
//! n_optim_sections u32
//!   section: name · lr f64 · t u64 · n_groups u32
//!     group: len u64 · len f64 (first moment) · len f64 (second moment)
//! ```
//!
//! Values are raw IEEE-754 bits, so a save/load round trip is exact.

use crate::adam::{Adam, AdamSnapshot};
use crate::error::{NnError, Result};
use crate::tensor::{Params, Tensor};
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"NNCP";
const VERSION: u32 = 1;
/// Caps on decoded sizes; anything larger is a corrupt file, not a model.
const MAX_NAME: u32 = 1 << 16;
const MAX_ELEMS: u64 = 1 << 32;

// ── Writing ──

fn put_u32(w: &mut impl Write, v: u32) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn put_u64(w: &mut impl Write, v: u64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn put_f64s(w: &mut impl Write, vs: &[f64]) -> Result<()> {
    for v in vs {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn put_str(w: &mut impl Write, s: &str) -> Result<()> {
    put_u32(w, s.len() as u32)?;
    w.write_all(s.as_bytes())?;
    Ok(())
}

pub fn write_checkpoint(
    w: &mut impl Write,
    step: u64,
    params: &[(&str, &Params)],
    optims: &[(&str, &Adam)],
) -> Result<()> {
    w.write_all(MAGIC)?;
    put_u32(w, VERSION)?;
    put_u64(w, step)?;

    put_u32(w, params.len() as u32)?;
    for (name, section) in params {
        put_str(w, name)?;
        put_u32(w, section.len() as u32)?;
        for (group_name, tensor) in section.iter() {
            put_str(w, group_name)?;
            put_u64(w, tensor.rows() as u64)?;
            put_u64(w, tensor.cols() as u64)?;
            put_f64s(w, tensor.data())?;
        }
    }

    put_u32(w, optims.len() as u32)?;
    for (name, opt) in optims {
        let snap = opt.snapshot();
        put_str(w, name)?;
        w.write_all(&snap.lr.to_le_bytes())?;
        put_u64(w, snap.t)?;
        put_u32(w, snap.m.len() as u32)?;
        for (m, v) in snap.m.iter().zip(&snap.v) {
            put_u64(w, m.len() as u64)?;
            put_f64s(w, m)?;
            put_f64s(w, v)?;
        }
    }
    Ok(())
}

pub fn save_checkpoint(
    path: impl AsRef<Path>,
    step: u64,
    params: &[(&str, &Params)],
    optims: &[(&str, &Adam)],
) -> Result<()> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_checkpoint(&mut file, step, params, optims)?;
    file.flush()?;
    Ok(())
}

// ── Reading ──

fn bad(reason: impl Into<String>) -> NnError {
    NnError::MalformedCheckpoint { reason: reason.into() }
}

fn get_exact(r: &mut impl Read, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf).map_err(|_| bad(format!("truncated while reading {what}")))
}

fn get_u32(r: &mut impl Read, what: &str) -> Result<u32> {
    let mut b = [0u8; 4];
    get_exact(r, &mut b, what)?;
    Ok(u32::from_le_bytes(b))
}

fn get_u64(r: &mut impl Read, what: &str) -> Result<u64> {
    let mut b = [0u8; 8];
    get_exact(r, &mut b, what)?;
    Ok(u64::from_le_bytes(b))
}

fn get_f64s(r: &mut impl Read, n: usize, what: &str) -> Result<Vec<f64>> {
    let mut out = vec![0.0f64; n];
    let mut b = [0u8; 8];
    for slot in &mut out {
        get_exact(r, &mut b, what)?;
        *slot = f64::from_le_bytes(b);
    }
    Ok(out)
}

fn get_str(r: &mut impl Read, what: &str) -> Result<String> {
    let len = get_u32(r, what)?;
    if len > MAX_NAME {
        return Err(bad(format!("{what} name length {len} is not plausible")));
    }
    let mut buf = vec![0u8; len as usize];
    get_exact(r, &mut buf, what)?;
    String::from_utf8(buf).map_err(|_| bad(format!("{what} name is not UTF-8")))
}

/// Everything a checkpoint holds, decoded.
#[derive(Debug, Clone)]
pub struct CheckpointData {
    pub step: u64,
    param_sections: Vec<(String, Params)>,
    optim_sections: Vec<(String, AdamSnapshot)>,
}

impl CheckpointData {
    pub fn params(&self, name: &str) -> Option<&Params> {
        self.param_sections.iter().find(|(n, _)| n == name).map(|(_, p)| p)
    }

    pub fn optimizer(&self, name: &str) -> Option<&AdamSnapshot> {
        self.optim_sections.iter().find(|(n, _)| n == name).map(|(_, s)| s)
    }

    pub fn param_section_names(&self) -> impl Iterator<Item = &str> {
        self.param_sections.iter().map(|(n, _)| n.as_str())
    }

    pub fn optim_section_names(&self) -> impl Iterator<Item = &str> {
        self.optim_sections.iter().map(|(n, _)| n.as_str())
    }

    /// Copies the section `name` into `into`, which must already have the
    /// identical layout: same groups, same names, same shapes, same order.
    pub fn restore_params(&self, name: &str, into: &mut Params) -> Result<()> {
        let mismatch = |reason: String| NnError::CheckpointMismatch { name: name.to_string(), reason };
        let stored = self
            .params(name)
            .ok_or_else(|| mismatch("no parameter section with this name".to_string()))?;
        if stored.len() != into.len() {
            return Err(mismatch(format!("{} stored groups vs {} live ones", stored.len(), into.len())));
        }
        for id in into.ids() {
            let live_name = into.name(id);
            let stored_name = stored.name(id);
            if live_name != stored_name {
                return Err(mismatch(format!("group {} is `{stored_name}` on disk, `{live_name}` live", id.0)));
            }
            let (st, lt) = (stored.tensor(id), into.tensor(id));
            if (st.rows(), st.cols()) != (lt.rows(), lt.cols()) {
                return Err(mismatch(format!(
                    "group `{live_name}` is {}x{} on disk, {}x{} live",
                    st.rows(),
                    st.cols(),
                    lt.rows(),
                    lt.cols()
                )));
            }
        }
        for id in into.ids().collect::<Vec<_>>() {
            let data = stored.tensor(id).data().to_vec();
            into.tensor_mut(id).data_mut().copy_from_slice(&data);
        }
        Ok(())
    }
}

pub fn read_checkpoint(r: &mut impl Read) -> Result<CheckpointData> {
    let mut magic = [0u8; 4];
    get_exact(r, &mut magic, "magic")?;
    if &magic != MAGIC {
        return Err(bad("wrong magic bytes"));
    }
    let version = get_u32(r, "version")?;
    if version != VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let step = get_u64(r, "step")?;

    let n_sections = get_u32(r, "parameter section count")?;
    let mut param_sections = Vec::new();
    for _ in 0..n_sections {
        let name = get_str(r, "parameter section")?;
        let n_groups = get_u32(r, "group count")?;
        let mut section = Params::new();
        for _ in 0..n_groups {
            let group_name = get_str(r, "group")?;
            let rows = get_u64(r, "rows")?;
            let cols = get_u64(r, "cols")?;
            let elems = rows.checked_mul(cols).filter(|&e| e <= MAX_ELEMS).ok_or_else(|| {
                bad(format!("group `{group_name}` claims {rows}x{cols} entries"))
            })?;
            let data = get_f64s(r, elems as usize, "tensor data")?;
            section.add(&group_name, Tensor::new(rows as usize, cols as usize, data));
        }
        param_sections.push((name, section));
    }

    let n_optims = get_u32(r, "optimizer section count")?;
    let mut optim_sections = Vec::new();
    for _ in 0..n_optims {
        let name = get_str(r, "optimizer section")?;
        let mut lr_bytes = [0u8; 8];
        get_exact(r, &mut lr_bytes, "learning rate")?;
        let lr = f64::from_le_bytes(lr_bytes);
        let t = get_u64(r, "step counter")?;
        let n_groups = get_u32(r, "moment group count")?;
        let mut m = Vec::new();
        let mut v = Vec::new();
        for _ in 0..n_groups {
            let len = get_u64(r, "moment length")?;
            if len > MAX_ELEMS {
                return Err(bad(format!("moment group claims {len} entries")));
            }
            m.push(get_f64s(r, len as usize, "first moment")?);
            v.push(get_f64s(r, len as usize, "second moment")?);
        }
        optim_sections.push((name, AdamSnapshot { lr, t, m, v }));
    }

    Ok(CheckpointData { step, param_sections, optim_sections })
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<CheckpointData> {
    let mut file = std::io::BufReader::new(std::fs::File::open(path)?);
    read_checkpoint(&mut file)
}
