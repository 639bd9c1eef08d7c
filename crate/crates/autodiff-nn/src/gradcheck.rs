//! Central finite-difference verification of the backward pass.
//!
//! For a scalar loss L(θ) the check compares the tape's gradient against
//!
//! ```text
//! (L(θ + εe_k) − L(θ − εe_k)) / 2ε
//! ```
//!
//! on a random sample of coordinates from every parameter group. A
//! coordinate passes when the difference is within `tolerance` relative to
//! the larger of the two magnitudes, or below a small absolute floor (the
//! floor soaks up coordinates whose true gradient is ≈ 0, where relative
//! error is all round-off). The result is a per-group report; nothing is
//! returned early, so a failing report names every bad group.
//!
//! [`Tamper`] plants a defect — one coordinate's computed gradient scaled by
//! a factor — after the backward pass, for testing that the check actually
//! catches wrong gradients rather than passing vacuously.

use crate::tape::{Tape, Var};
use crate::tensor::{Grads, ParamId, Params};
use rand::Rng;

/// Deliberate corruption of one computed gradient coordinate.
#[derive(Debug, Clone, Copy)]
pub struct Tamper {
    pub group: ParamId,
    pub index: usize,
    pub factor: f64,
}

/// Outcome for one parameter group.
#[derive(Debug, Clone)]
pub struct GroupReport {
    pub name: String,
    /// Coordinates actually compared.
    pub checked: usize,
    pub max_rel_err: f64,
    pub passed: bool,
}

/// Outcome of one [`GradCheck::run`].
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub groups: Vec<GroupReport>,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.groups.iter().all(|g| g.passed)
    }

    /// Names of the groups that failed, for diagnostics.
    pub fn failing_groups(&self) -> Vec<&str> {
        self.groups.iter().filter(|g| !g.passed).map(|g| g.name.as_str()).collect()
    }

    pub fn max_rel_err(&self) -> f64 {
        self.groups.iter().map(|g| g.max_rel_err).fold(0.0, f64::max)
    }
}

/// Configuration for a finite-difference run.
#[derive(Debug, Clone, Copy)]
pub struct GradCheck {
    /// Relative error allowed per coordinate.
    pub tolerance: f64,
    /// Perturbation size ε.
    pub step: f64,
    /// Coordinates sampled per group (smaller groups are checked in full).
    pub samples_per_group: usize,
    /// Differences below this pass outright; see the module docs.
    pub absolute_floor: f64,
    pub tamper: Option<Tamper>,
}

impl Default for GradCheck {
    fn default() -> Self {
        GradCheck {
            tolerance: 1e-4,
            step: 1e-5,
            samples_per_group: 24,
            absolute_floor: 1e-8,
            tamper: None,
        }
    }
}

impl GradCheck {
    /// Checks the gradient of `build`'s scalar output with respect to every
    /// group in `params`. The closure must be a pure function of `params` —
    /// it is re-run twice per sampled coordinate with a perturbed tensor.
    /// `params` is returned to its original bits afterwards.
    pub fn run<F>(&self, params: &mut Params, rng: &mut impl Rng, build: F) -> GradCheckReport
    where
        F: Fn(&Params, &mut Tape) -> Var,
    {
        assert!(self.tolerance > 0.0, "tolerance must be positive");
        assert!(self.step > 0.0, "step must be positive");

        let mut grads = Grads::zeros_like(params);
        let mut tape = Tape::new();
        let out = build(params, &mut tape);
        tape.backward(params, out, &mut grads).expect("gradcheck loss must be scalar");
        if let Some(t) = self.tamper {
            grads.group_mut(t.group)[t.index] *= t.factor;
        }

        let ids: Vec<ParamId> = params.ids().collect();
        let mut groups = Vec::with_capacity(ids.len());
        for id in ids {
            let len = params.tensor(id).len();
            let coords: Vec<usize> = if len <= self.samples_per_group {
                (0..len).collect()
            } else {
                // Sample distinct coordinates; collisions are re-rolled.
                let mut seen = std::collections::BTreeSet::new();
                while seen.len() < self.samples_per_group {
                    seen.insert(rng.gen_range(0..len));
                }
                seen.into_iter().collect()
            };

            let mut max_rel = 0.0f64;
            let mut passed = true;
            for &k in &coords {
                let original = params.tensor(id).data()[k];
                params.tensor_mut(id).data_mut()[k] = original + self.step;
                let plus = self.loss_of(params, &build);
                params.tensor_mut(id).data_mut()[k] = original - self.step;
                let minus = self.loss_of(params, &build);
                params.tensor_mut(id).data_mut()[k] = original;

                let fd = (plus - minus) / (2.0 * self.step);
                let g = grads.group(id)[k];
                let diff = (g - fd).abs();
                let scale = g.abs().max(fd.abs());
                let ok = diff <= self.tolerance * scale || diff <= self.absolute_floor;
                let rel = if scale > self.absolute_floor { diff / scale } else { 0.0 };
                max_rel = max_rel.max(rel);
                passed &= ok;
            }
            groups.push(GroupReport {
                name: params.name(id).to_string(),
                checked: coords.len(),
                max_rel_err: max_rel,
                passed,
            });
        }
        GradCheckReport { groups }
    }

    fn loss_of<F>(&self, params: &Params, build: &F) -> f64
    where
        F: Fn(&Params, &mut Tape) -> Var,
    {
        let mut tape = Tape::new();
        let out = build(params, &mut tape);
        tape.scalar(out)
    }
}
