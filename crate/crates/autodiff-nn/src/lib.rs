//! Reverse-mode automatic differentiation and the network blocks the
//! categorical agents are built from.
//!
//! The pieces, bottom up:
//!
//! - [`tensor`]: named, shaped parameter groups ([`Params`]) and the
//!   gradient accumulators shaped after them ([`Grads`]);
//! - [`tape`]: a flat recording of forward operations with a single-sweep
//!   backward pass — parameters stay outside the tape and are only read;
//! - [`blocks`]: affine layers, 64-wide embedding tables, a 128-unit gated
//!   recurrent cell, and two-hidden-layer heads (512/256, rectified);
//! - [`init`]: the fixed initialization rules that make a seed pin every
//!   parameter bit;
//! - [`adam`]: bias-corrected adaptive updates, one optimizer per parameter
//!   container;
//! - [`gradcheck`]: central finite differences against the backward pass,
//!   reported per parameter group, with a tamper hook to prove the check
//!   can fail;
//! - [`checkpoint`]: byte-deterministic binary snapshots of parameters and
//!   optimizer state.
//!
//! Everything is `f64`, and every kernel runs in a fixed order: identical
//! seeds and inputs give bit-identical values, gradients, and checkpoint
//! bytes on a given build.

pub mod adam;
pub mod blocks;
pub mod checkpoint;
mod error;
pub mod gradcheck;
pub mod init;
pub mod tape;
pub mod tensor;

pub use adam::{Adam, AdamSnapshot};
pub use blocks::{EmbeddingTable, GruCell, Linear, MlpHead, EMBED_DIM, GRU_HIDDEN, MLP_HIDDEN1, MLP_HIDDEN2};
pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, CheckpointData};
pub use error::{NnError, Result};
pub use gradcheck::{GradCheck, GradCheckReport, GroupReport, Tamper};
pub use tape::{Tape, Var};
pub use tensor::{Grads, ParamId, Params, Tensor};
