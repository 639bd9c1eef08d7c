//! Adaptive moment estimation with bias correction.
//!
//! The update for each scalar parameter θ with gradient g is
//!
//! ```text
//! m ← β₁ m + (1−β₁) g          m̂ = m / (1 − β₁ᵗ)
//! v ← β₂ v + (1−β₂) g²         v̂ = v / (1 − β₂ᵗ)
//! θ ← θ − lr · m̂ / (√v̂ + ε)
//! ```
//!
//! with β₁ = 0.9, β₂ = 0.999, ε = 1e-8. From a fresh state a single step
//! moves θ by exactly `−lr·g/(|g|+ε)` — the bias correction cancels the
//! moment warm-up — and under a constant gradient the step magnitude
//! approaches `lr` regardless of the gradient's scale.

use crate::tensor::{Grads, Params};

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

/// Optimizer state bound to one [`Params`] container.
#[derive(Debug, Clone)]
pub struct Adam {
    lr: f64,
    t: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

/// Plain-data image of an [`Adam`], as stored in checkpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamSnapshot {
    pub lr: f64,
    pub t: u64,
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
}

impl Adam {
    /// Zeroed moments shaped after `params`.
    pub fn new(params: &Params, lr: f64) -> Self {
        assert!(lr > 0.0 && lr.is_finite(), "learning rate must be positive, got {lr}");
        let shapes: Vec<Vec<f64>> = params.ids().map(|id| vec![0.0; params.tensor(id).len()]).collect();
        Adam { lr, t: 0, m: shapes.clone(), v: shapes }
    }

    pub fn lr(&self) -> f64 {
        self.lr
    }

    /// Number of steps taken so far.
    pub fn steps_taken(&self) -> u64 {
        self.t
    }

    /// One update over every group. `grads` must be shaped like `params`
    /// (and like the `Params` this state was created from).
    pub fn step(&mut self, params: &mut Params, grads: &Grads) {
        assert_eq!(self.m.len(), params.len(), "optimizer bound to a different parameter layout");
        assert_eq!(grads.n_groups(), params.len(), "gradients shaped for a different parameter layout");
        self.t += 1;
        let bc1 = 1.0 - BETA1.powi(self.t as i32);
        let bc2 = 1.0 - BETA2.powi(self.t as i32);
        for id in params.ids() {
            let g = grads.group(id);
            let theta = params.tensor_mut(id).data_mut();
            assert_eq!(g.len(), theta.len(), "gradient group size mismatch");
            let m = &mut self.m[id.0];
            let v = &mut self.v[id.0];
            for k in 0..theta.len() {
                m[k] = BETA1 * m[k] + (1.0 - BETA1) * g[k];
                v[k] = BETA2 * v[k] + (1.0 - BETA2) * g[k] * g[k];
                let m_hat = m[k] / bc1;
                let v_hat = v[k] / bc2;
                theta[k] -= self.lr * m_hat / (v_hat.sqrt() + EPSILON);
            }
        }
    }

    pub fn snapshot(&self) -> AdamSnapshot {
        AdamSnapshot { lr: self.lr, t: self.t, m: self.m.clone(), v: self.v.clone() }
    }

    /// Rebuilds an optimizer from a snapshot, checking it fits `params`.
    pub fn restore(params: &Params, snap: AdamSnapshot) -> crate::error::Result<Self> {
        let mismatch = |reason: String| crate::error::NnError::CheckpointMismatch {
            name: "optimizer".to_string(),
            reason,
        };
        if snap.m.len() != params.len() || snap.v.len() != params.len() {
            return Err(mismatch(format!(
                "snapshot has {} moment groups, parameters have {}",
                snap.m.len(),
                params.len()
            )));
        }
        for id in params.ids() {
            let want = params.tensor(id).len();
            if snap.m[id.0].len() != want || snap.v[id.0].len() != want {
                return Err(mismatch(format!("moment group `{}` has the wrong size", params.name(id))));
            }
        }
        Ok(Adam { lr: snap.lr, t: snap.t, m: snap.m, v: snap.v })
    }
}
