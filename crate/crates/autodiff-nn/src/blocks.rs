//! Network building blocks: affine layers, embedding tables, a gated
//! recurrent cell, and the two-hidden-layer heads.
//!
//! A block is a bundle of [`ParamId`]s plus the shape bookkeeping to apply
//! itself on a [`Tape`]; the actual numbers always live in a [`Params`].
//! Constructing a block registers its tensors under `{prefix}.…` names —
//! those names are what gradcheck reports and checkpoints carry.
//!
//! The recurrent cell is the conventional gated unit,
//!
//! ```text
//! r  = σ(W_ir x + b_ir + W_hr h + b_hr)
//! z  = σ(W_iz x + b_iz + W_hz h + b_hz)
//! n  = tanh(W_in x + b_in + r ∘ (W_hn h + b_hn))
//! h' = z ∘ h + (1 − z) ∘ n
//! ```
//!
//! so `h'` is a gated blend of the previous state and a `tanh` candidate:
//! starting from the zero state, every entry stays strictly inside (−1, 1)
//! for finite inputs.

use crate::init;
use crate::tape::{Tape, Var};
use crate::tensor::{ParamId, Params, Tensor};
use rand::Rng;

/// Embedding width used by the categorical agents.
pub const EMBED_DIM: usize = 64;
/// Hidden width of the recurrent history encoder.
pub const GRU_HIDDEN: usize = 128;
/// First hidden layer of the output heads.
pub const MLP_HIDDEN1: usize = 512;
/// Second hidden layer of the output heads.
pub const MLP_HIDDEN2: usize = 256;

/// Fully connected `y = Wx + b` with fan-in initialized weights and zero bias.
#[derive(Debug)]
pub struct Linear {
    w: ParamId,
    b: ParamId,
    in_dim: usize,
    out_dim: usize,
}

impl Linear {
    pub fn new(params: &mut Params, prefix: &str, in_dim: usize, out_dim: usize, rng: &mut impl Rng) -> Self {
        let hw = init::fan_in_half_width(in_dim);
        let w = params.add(&format!("{prefix}.w"), init::uniform_tensor(rng, out_dim, in_dim, hw));
        let b = params.add(&format!("{prefix}.b"), Tensor::zeros(out_dim, 1));
        Linear { w, b, in_dim, out_dim }
    }

    pub fn apply(&self, tape: &mut Tape, params: &Params, x: Var) -> Var {
        tape.affine(params, self.w, self.b, x)
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }
}

/// Lookup table mapping categorical symbols to learned rows.
#[derive(Debug)]
pub struct EmbeddingTable {
    table: ParamId,
    n_symbols: usize,
    dim: usize,
}

impl EmbeddingTable {
    pub fn new(params: &mut Params, prefix: &str, n_symbols: usize, dim: usize, rng: &mut impl Rng) -> Self {
        let table = params.add(
            &format!("{prefix}.table"),
            init::uniform_tensor(rng, n_symbols, dim, init::EMBEDDING_HALF_WIDTH),
        );
        EmbeddingTable { table, n_symbols, dim }
    }

    /// The stored row for `symbol`, verbatim.
    pub fn lookup(&self, tape: &mut Tape, params: &Params, symbol: usize) -> Var {
        assert!(symbol < self.n_symbols, "symbol {symbol} out of range ({} known)", self.n_symbols);
        tape.row(params, self.table, symbol)
    }

    pub fn n_symbols(&self) -> usize {
        self.n_symbols
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

/// Single gated recurrent cell; see the module docs for the arithmetic.
#[derive(Debug)]
pub struct GruCell {
    ir: Linear,
    hr: Linear,
    iz: Linear,
    hz: Linear,
    in_gate: Linear,
    hn: Linear,
    input_dim: usize,
    hidden_dim: usize,
}

impl GruCell {
    pub fn new(params: &mut Params, prefix: &str, input_dim: usize, hidden_dim: usize, rng: &mut impl Rng) -> Self {
        GruCell {
            ir: Linear::new(params, &format!("{prefix}.ir"), input_dim, hidden_dim, rng),
            hr: Linear::new(params, &format!("{prefix}.hr"), hidden_dim, hidden_dim, rng),
            iz: Linear::new(params, &format!("{prefix}.iz"), input_dim, hidden_dim, rng),
            hz: Linear::new(params, &format!("{prefix}.hz"), hidden_dim, hidden_dim, rng),
            in_gate: Linear::new(params, &format!("{prefix}.in"), input_dim, hidden_dim, rng),
            hn: Linear::new(params, &format!("{prefix}.hn"), hidden_dim, hidden_dim, rng),
            input_dim,
            hidden_dim,
        }
    }

    /// One step: `(x, h) ↦ h'`.
    pub fn apply(&self, tape: &mut Tape, params: &Params, x: Var, h: Var) -> Var {
        let ri = self.ir.apply(tape, params, x);
        let rh = self.hr.apply(tape, params, h);
        let r_pre = tape.add(ri, rh);
        let r = tape.sigmoid(r_pre);

        let zi = self.iz.apply(tape, params, x);
        let zh = self.hz.apply(tape, params, h);
        let z_pre = tape.add(zi, zh);
        let z = tape.sigmoid(z_pre);

        let ni = self.in_gate.apply(tape, params, x);
        let nh = self.hn.apply(tape, params, h);
        let gated = tape.mul(r, nh);
        let n_pre = tape.add(ni, gated);
        let n = tape.tanh(n_pre);

        tape.lerp(z, h, n)
    }

    /// The all-zeros initial hidden state.
    pub fn initial_state(&self) -> Vec<f64> {
        vec![0.0; self.hidden_dim]
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden_dim
    }
}

/// Two rectified hidden layers (512 and 256 wide by default) and a linear
/// output — action logits or a scalar value depending on `out_dim`.
#[derive(Debug)]
pub struct MlpHead {
    l1: Linear,
    l2: Linear,
    out: Linear,
}

impl MlpHead {
    pub fn new(params: &mut Params, prefix: &str, in_dim: usize, out_dim: usize, rng: &mut impl Rng) -> Self {
        Self::with_hidden(params, prefix, in_dim, MLP_HIDDEN1, MLP_HIDDEN2, out_dim, rng)
    }

    pub fn with_hidden(
        params: &mut Params,
        prefix: &str,
        in_dim: usize,
        h1: usize,
        h2: usize,
        out_dim: usize,
        rng: &mut impl Rng,
    ) -> Self {
        MlpHead {
            l1: Linear::new(params, &format!("{prefix}.l1"), in_dim, h1, rng),
            l2: Linear::new(params, &format!("{prefix}.l2"), h1, h2, rng),
            out: Linear::new(params, &format!("{prefix}.out"), h2, out_dim, rng),
        }
    }

    pub fn apply(&self, tape: &mut Tape, params: &Params, x: Var) -> Var {
        let a = self.l1.apply(tape, params, x);
        let a = tape.relu(a);
        let b = self.l2.apply(tape, params, a);
        let b = tape.relu(b);
        self.out.apply(tape, params, b)
    }

    pub fn in_dim(&self) -> usize {
        self.l1.in_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.out.out_dim()
    }
}
