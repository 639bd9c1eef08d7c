//! Reverse-mode automatic differentiation on a flat tape.
//!
//! Every forward operation appends one node holding its value (a column
//! vector), its not-yet-propagated adjoint, and enough structure to play the
//! chain rule backwards. Parents are always created before children, so the
//! node list *is* a topological order and [`Tape::backward`] is a single
//! reverse sweep that visits each node exactly once, propagating adjoints
//! only from nodes actually reached from the output.
//!
//! Parameters do not live on the tape. Operations that touch them
//! ([`Tape::row`], [`Tape::affine`]) carry a [`ParamId`] and read the tensor
//! out of the [`Params`] passed to every call; their adjoints accumulate in
//! an external [`Grads`]. The same `Params` must back the forward pass and
//! the corresponding `backward` — parameters may only change between tapes.
//!
//! All kernels are fixed-order scalar loops: for one build, identical inputs
//! give bit-identical values and gradients.

use crate::error::{NnError, Result};
use crate::tensor::{Grads, ParamId, Params};

/// Handle to one node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

enum Op {
    Constant,
    /// Embedding lookup: row `idx` of `table`.
    Row { table: ParamId, idx: usize },
    /// `y = W x + b` with `W: out×in`, `b: out×1`.
    Affine { w: ParamId, b: ParamId, x: Var },
    Add(Var, Var),
    /// Elementwise product.
    Mul(Var, Var),
    Sigmoid(Var),
    Tanh(Var),
    Relu(Var),
    /// Gated interpolation `y = z∘a + (1−z)∘b` (gate 1 selects `a`).
    Lerp { z: Var, a: Var, b: Var },
    Concat(Var, Var),
    LogSoftmax(Var),
    /// Scalar extraction `y = x[idx]`.
    Pick { x: Var, idx: usize },
    /// Negative entropy `Σ_k exp(lp_k)·lp_k` of a log-probability vector.
    NegEntropy { lp: Var },
    /// Scalar `Σ_i c_i·x_i` over scalar nodes.
    WeightedSum { terms: Vec<(f64, Var)> },
    /// Scalar `Σ_i (x_i − t_i)²` over scalar nodes and constant targets.
    SumSquaredResiduals { preds: Vec<Var>, targets: Vec<f64> },
}

struct Node {
    value: Vec<f64>,
    grad: Vec<f64>,
    op: Op,
}

/// Recorded forward computation; see the module docs.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

fn stable_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    /// Number of recorded nodes.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Vec<f64>, op: Op) -> Var {
        let grad = vec![0.0; value.len()];
        self.nodes.push(Node { value, grad, op });
        Var(self.nodes.len() - 1)
    }

    fn val(&self, v: Var) -> &[f64] {
        &self.nodes[v.0].value
    }

    /// Forward value of a node.
    pub fn value(&self, v: Var) -> &[f64] {
        self.val(v)
    }

    /// Forward value of a scalar node. Panics if the node is not length 1.
    pub fn scalar(&self, v: Var) -> f64 {
        let val = self.val(v);
        assert_eq!(val.len(), 1, "scalar() on a node of length {}", val.len());
        val[0]
    }

    /// Adjoint of a node, as filled in by the last [`Tape::backward`].
    pub fn grad(&self, v: Var) -> &[f64] {
        &self.nodes[v.0].grad
    }

    // ── Forward operations ──

    pub fn constant(&mut self, value: Vec<f64>) -> Var {
        assert!(!value.is_empty(), "constant: empty vector");
        self.push(value, Op::Constant)
    }

    pub fn row(&mut self, params: &Params, table: ParamId, idx: usize) -> Var {
        let t = params.tensor(table);
        assert!(
            idx < t.rows(),
            "row: index {idx} out of range for `{}` with {} rows",
            params.name(table),
            t.rows()
        );
        self.push(t.row(idx).to_vec(), Op::Row { table, idx })
    }

    pub fn affine(&mut self, params: &Params, w: ParamId, b: ParamId, x: Var) -> Var {
        let wt = params.tensor(w);
        let bt = params.tensor(b);
        let xv = self.val(x);
        assert_eq!(
            wt.cols(),
            xv.len(),
            "affine: `{}` has {} columns but the input has length {}",
            params.name(w),
            wt.cols(),
            xv.len()
        );
        assert_eq!(
            (bt.rows(), bt.cols()),
            (wt.rows(), 1),
            "affine: bias `{}` must be {}x1",
            params.name(b),
            wt.rows()
        );
        let mut y = wt.matvec(xv);
        for (out, bias) in y.iter_mut().zip(bt.data()) {
            *out += bias;
        }
        self.push(y, Op::Affine { w, b, x })
    }

    fn binary_elementwise(&mut self, a: Var, b: Var, what: &str, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let av = self.val(a);
        let bv = self.val(b);
        assert_eq!(av.len(), bv.len(), "{what}: lengths {} vs {}", av.len(), bv.len());
        av.iter().zip(bv).map(|(x, y)| f(*x, *y)).collect()
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let y = self.binary_elementwise(a, b, "add", |x, y| x + y);
        self.push(y, Op::Add(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let y = self.binary_elementwise(a, b, "mul", |x, y| x * y);
        self.push(y, Op::Mul(a, b))
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        let y: Vec<f64> = self.val(x).iter().map(|&v| stable_sigmoid(v)).collect();
        self.push(y, Op::Sigmoid(x))
    }

    pub fn tanh(&mut self, x: Var) -> Var {
        let y: Vec<f64> = self.val(x).iter().map(|v| v.tanh()).collect();
        self.push(y, Op::Tanh(x))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let y: Vec<f64> = self.val(x).iter().map(|v| v.max(0.0)).collect();
        self.push(y, Op::Relu(x))
    }

    /// `z∘a + (1−z)∘b`: the gate interpolates between `b` (gate 0) and `a`
    /// (gate 1), fused so no constant-ones node is needed.
    pub fn lerp(&mut self, z: Var, a: Var, b: Var) -> Var {
        let n = self.val(z).len();
        assert!(
            self.val(a).len() == n && self.val(b).len() == n,
            "lerp: lengths {} / {} / {}",
            n,
            self.val(a).len(),
            self.val(b).len()
        );
        let y: Vec<f64> = (0..n)
            .map(|i| {
                let zi = self.val(z)[i];
                zi * self.val(a)[i] + (1.0 - zi) * self.val(b)[i]
            })
            .collect();
        self.push(y, Op::Lerp { z, a, b })
    }

    pub fn concat(&mut self, a: Var, b: Var) -> Var {
        let mut y = self.val(a).to_vec();
        y.extend_from_slice(self.val(b));
        self.push(y, Op::Concat(a, b))
    }

    pub fn log_softmax(&mut self, x: Var) -> Var {
        let xv = self.val(x);
        let m = xv.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + xv.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        let y: Vec<f64> = xv.iter().map(|v| v - lse).collect();
        self.push(y, Op::LogSoftmax(x))
    }

    pub fn pick(&mut self, x: Var, idx: usize) -> Var {
        let xv = self.val(x);
        assert!(idx < xv.len(), "pick: index {idx} out of range for length {}", xv.len());
        let y = vec![xv[idx]];
        self.push(y, Op::Pick { x, idx })
    }

    /// `Σ_k π_k log π_k` from a log-probability vector (the output of
    /// [`Tape::log_softmax`]); minimized to spread the policy out.
    pub fn neg_entropy_of_log_probs(&mut self, lp: Var) -> Var {
        let y = vec![self.val(lp).iter().map(|&l| l.exp() * l).sum()];
        self.push(y, Op::NegEntropy { lp })
    }

    /// `Σ_i c_i·x_i` over scalar nodes with constant coefficients.
    pub fn weighted_sum(&mut self, terms: &[(f64, Var)]) -> Var {
        let mut acc = 0.0;
        for (c, v) in terms {
            let val = self.val(*v);
            assert_eq!(val.len(), 1, "weighted_sum: term of length {}", val.len());
            acc += c * val[0];
        }
        self.push(vec![acc], Op::WeightedSum { terms: terms.to_vec() })
    }

    /// `Σ_i (x_i − t_i)²` over scalar nodes and constant targets; gradients
    /// flow into the predictions only.
    pub fn sum_squared_residuals(&mut self, preds: &[Var], targets: &[f64]) -> Var {
        assert_eq!(
            preds.len(),
            targets.len(),
            "sum_squared_residuals: {} predictions vs {} targets",
            preds.len(),
            targets.len()
        );
        let mut acc = 0.0;
        for (p, t) in preds.iter().zip(targets) {
            let val = self.val(*p);
            assert_eq!(val.len(), 1, "sum_squared_residuals: prediction of length {}", val.len());
            let r = val[0] - t;
            acc += r * r;
        }
        self.push(vec![acc], Op::SumSquaredResiduals { preds: preds.to_vec(), targets: targets.to_vec() })
    }

    // ── Backward ──

    /// Reverse sweep from the scalar node `out`, accumulating parameter
    /// adjoints into `grads` (which is *not* zeroed here — batching sums
    /// naturally) and node adjoints retrievable via [`Tape::grad`]. `params`
    /// must be the container every forward call on this tape read from.
    pub fn backward(&mut self, params: &Params, out: Var, grads: &mut Grads) -> Result<()> {
        if self.val(out).len() != 1 {
            return Err(NnError::NonScalarOutput { len: self.val(out).len() });
        }
        for node in &mut self.nodes {
            node.grad.iter_mut().for_each(|g| *g = 0.0);
        }
        let mut touched = vec![false; self.nodes.len()];
        self.nodes[out.0].grad[0] = 1.0;
        touched[out.0] = true;

        for i in (0..=out.0).rev() {
            if !touched[i] {
                continue;
            }
            let (before, rest) = self.nodes.split_at_mut(i);
            let node = &rest[0];
            let g = &node.grad;
            let mut reach = |v: Var| touched[v.0] = true;
            match &node.op {
                Op::Constant => {}
                Op::Row { table, idx } => {
                    let t = params.tensor(*table);
                    let dst = grads.group_mut(*table);
                    let off = idx * t.cols();
                    for (k, gv) in g.iter().enumerate() {
                        dst[off + k] += gv;
                    }
                }
                Op::Affine { w, b, x } => {
                    let wt = params.tensor(*w);
                    let xv = &before[x.0].value;
                    {
                        let dw = grads.group_mut(*w);
                        for (r, gv) in g.iter().enumerate() {
                            if *gv == 0.0 {
                                continue;
                            }
                            let off = r * wt.cols();
                            for (c, xvc) in xv.iter().enumerate() {
                                dw[off + c] += gv * xvc;
                            }
                        }
                    }
                    {
                        let db = grads.group_mut(*b);
                        for (r, gv) in g.iter().enumerate() {
                            db[r] += gv;
                        }
                    }
                    let dx = wt.matvec_transposed(g);
                    for (dst, d) in before[x.0].grad.iter_mut().zip(&dx) {
                        *dst += d;
                    }
                    reach(*x);
                }
                Op::Add(a, b) => {
                    for (k, gv) in g.iter().enumerate() {
                        before[a.0].grad[k] += gv;
                    }
                    for (k, gv) in g.iter().enumerate() {
                        before[b.0].grad[k] += gv;
                    }
                    reach(*a);
                    reach(*b);
                }
                Op::Mul(a, b) => {
                    for k in 0..g.len() {
                        let (av, bv) = (before[a.0].value[k], before[b.0].value[k]);
                        before[a.0].grad[k] += g[k] * bv;
                        before[b.0].grad[k] += g[k] * av;
                    }
                    reach(*a);
                    reach(*b);
                }
                Op::Sigmoid(x) => {
                    for (k, gv) in g.iter().enumerate() {
                        let y = node.value[k];
                        before[x.0].grad[k] += gv * y * (1.0 - y);
                    }
                    reach(*x);
                }
                Op::Tanh(x) => {
                    for (k, gv) in g.iter().enumerate() {
                        let y = node.value[k];
                        before[x.0].grad[k] += gv * (1.0 - y * y);
                    }
                    reach(*x);
                }
                Op::Relu(x) => {
                    for (k, gv) in g.iter().enumerate() {
                        if before[x.0].value[k] > 0.0 {
                            before[x.0].grad[k] += gv;
                        }
                    }
                    reach(*x);
                }
                Op::Lerp { z, a, b } => {
                    for k in 0..g.len() {
                        let zv = before[z.0].value[k];
                        let av = before[a.0].value[k];
                        let bv = before[b.0].value[k];
                        before[z.0].grad[k] += g[k] * (av - bv);
                        before[a.0].grad[k] += g[k] * zv;
                        before[b.0].grad[k] += g[k] * (1.0 - zv);
                    }
                    reach(*z);
                    reach(*a);
                    reach(*b);
                }
                Op::Concat(a, b) => {
                    let la = before[a.0].value.len();
                    for k in 0..la {
                        before[a.0].grad[k] += g[k];
                    }
                    for k in 0..before[b.0].value.len() {
                        before[b.0].grad[k] += g[la + k];
                    }
                    reach(*a);
                    reach(*b);
                }
                Op::LogSoftmax(x) => {
                    let s: f64 = g.iter().sum();
                    for (k, gv) in g.iter().enumerate() {
                        let p = node.value[k].exp();
                        before[x.0].grad[k] += gv - p * s;
                    }
                    reach(*x);
                }
                Op::Pick { x, idx } => {
                    before[x.0].grad[*idx] += g[0];
                    reach(*x);
                }
                Op::NegEntropy { lp } => {
                    for (k, l) in before[lp.0].value.iter().enumerate() {
                        before[lp.0].grad[k] += g[0] * l.exp() * (l + 1.0);
                    }
                    reach(*lp);
                }
                Op::WeightedSum { terms } => {
                    for (c, v) in terms {
                        before[v.0].grad[0] += g[0] * c;
                    }
                    for (_, v) in terms {
                        touched[v.0] = true;
                    }
                }
                Op::SumSquaredResiduals { preds, targets } => {
                    for (p, t) in preds.iter().zip(targets) {
                        let r = before[p.0].value[0] - t;
                        before[p.0].grad[0] += g[0] * 2.0 * r;
                    }
                    for p in preds {
                        touched[p.0] = true;
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Tensor;

    fn empty_grads() -> (Params, Grads) {
        let p = Params::new();
        let g = Grads::zeros_like(&p);
        (p, g)
    }

    // ── Scalar calculus ──

    #[test]
    fn squaring_differentiates_to_twice_the_input() {
        let (p, mut g) = empty_grads();
        let mut tape = Tape::new();
        let x = tape.constant(vec![3.0]);
        let y = tape.mul(x, x);
        tape.backward(&p, y, &mut g).unwrap();
        assert_eq!(tape.scalar(y), 9.0);
        assert_eq!(tape.grad(x), &[6.0]);
    }

    #[test]
    fn negative_log_likelihood_gradient_is_probs_minus_onehot() {
        let (p, mut g) = empty_grads();
        let mut tape = Tape::new();
        let logits = tape.constant(vec![0.2, -1.0, 0.5]);
        let lp = tape.log_softmax(logits);
        let picked = tape.pick(lp, 1);
        let loss = tape.weighted_sum(&[(-1.0, picked)]);
        tape.backward(&p, loss, &mut g).unwrap();
        let z: f64 = [0.2f64, -1.0, 0.5].iter().map(|v| v.exp()).sum();
        let probs = [0.2f64.exp() / z, (-1.0f64).exp() / z, 0.5f64.exp() / z];
        let expect = [probs[0], probs[1] - 1.0, probs[2]];
        for (got, want) in tape.grad(logits).iter().zip(&expect) {
            assert!((got - want).abs() < 1e-14, "{got} vs {want}");
        }
    }

    #[test]
    fn log_softmax_values_normalize() {
        let (_, _) = empty_grads();
        let mut tape = Tape::new();
        let x = tape.constant(vec![100.0, 101.0, 99.0]);
        let lp = tape.log_softmax(x);
        let total: f64 = tape.value(lp).iter().map(|l| l.exp()).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_log_probs_have_negative_entropy_of_minus_log_n() {
        let mut tape = Tape::new();
        let x = tape.constant(vec![7.0; 4]);
        let lp = tape.log_softmax(x);
        let ne = tape.neg_entropy_of_log_probs(lp);
        assert!((tape.scalar(ne) - (-(4.0f64).ln())).abs() < 1e-14);
    }

    // ── Structured ops ──

    #[test]
    fn affine_routes_gradients_to_weights_bias_and_input() {
        let mut p = Params::new();
        let w = p.add("w", Tensor::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]));
        let b = p.add("b", Tensor::new(2, 1, vec![0.5, -0.5]));
        let mut g = Grads::zeros_like(&p);
        let mut tape = Tape::new();
        let x = tape.constant(vec![1.0, -1.0]);
        let y = tape.affine(&p, w, b, x);
        assert_eq!(tape.value(y), &[-0.5, -1.5]);
        // Loss = 1·y0 + 2·y1.
        let y0 = tape.pick(y, 0);
        let y1 = tape.pick(y, 1);
        let loss = tape.weighted_sum(&[(1.0, y0), (2.0, y1)]);
        tape.backward(&p, loss, &mut g).unwrap();
        assert_eq!(g.group(w), &[1.0, -1.0, 2.0, -2.0]); // gᵀ ⊗ x rows
        assert_eq!(g.group(b), &[1.0, 2.0]);
        assert_eq!(tape.grad(x), &[7.0, 10.0]); // Wᵀ·[1,2]
    }

    #[test]
    fn embedding_rows_come_back_verbatim_and_collect_gradients() {
        let mut p = Params::new();
        let t = p.add("table", Tensor::new(3, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]));
        let mut g = Grads::zeros_like(&p);
        let mut tape = Tape::new();
        let r = tape.row(&p, t, 2);
        assert_eq!(tape.value(r), &[5.0, 6.0]);
        let r0 = tape.pick(r, 0);
        let loss = tape.weighted_sum(&[(3.0, r0)]);
        tape.backward(&p, loss, &mut g).unwrap();
        assert_eq!(g.group(t), &[0.0, 0.0, 0.0, 0.0, 3.0, 0.0]);
    }

    #[test]
    fn gated_interpolation_matches_its_unfused_form() {
        let (p, mut g) = empty_grads();
        let mut tape = Tape::new();
        let z = tape.constant(vec![0.25, 0.75]);
        let a = tape.constant(vec![2.0, -1.0]);
        let b = tape.constant(vec![4.0, 1.0]);
        let y = tape.lerp(z, a, b);
        assert_eq!(tape.value(y), &[0.25 * 2.0 + 0.75 * 4.0, 0.75 * -1.0 + 0.25 * 1.0]);
        let y0 = tape.pick(y, 0);
        let y1 = tape.pick(y, 1);
        let loss = tape.weighted_sum(&[(1.0, y0), (1.0, y1)]);
        tape.backward(&p, loss, &mut g).unwrap();
        assert_eq!(tape.grad(z), &[2.0 - 4.0, -1.0 - 1.0]);
        assert_eq!(tape.grad(a), &[0.25, 0.75]);
        assert_eq!(tape.grad(b), &[0.75, 0.25]);
    }

    #[test]
    fn concat_splits_gradients_at_the_seam() {
        let (p, mut g) = empty_grads();
        let mut tape = Tape::new();
        let a = tape.constant(vec![1.0]);
        let b = tape.constant(vec![2.0, 3.0]);
        let y = tape.concat(a, b);
        assert_eq!(tape.value(y), &[1.0, 2.0, 3.0]);
        let y2 = tape.pick(y, 2);
        let loss = tape.weighted_sum(&[(5.0, y2)]);
        tape.backward(&p, loss, &mut g).unwrap();
        assert_eq!(tape.grad(a), &[0.0]);
        assert_eq!(tape.grad(b), &[0.0, 5.0]);
    }

    #[test]
    fn squared_residuals_pull_predictions_toward_targets() {
        let (p, mut g) = empty_grads();
        let mut tape = Tape::new();
        let v0 = tape.constant(vec![1.0]);
        let v1 = tape.constant(vec![-2.0]);
        let loss = tape.sum_squared_residuals(&[v0, v1], &[0.5, 0.0]);
        assert!((tape.scalar(loss) - (0.25 + 4.0)).abs() < 1e-15);
        tape.backward(&p, loss, &mut g).unwrap();
        assert_eq!(tape.grad(v0), &[1.0]);
        assert_eq!(tape.grad(v1), &[-4.0]);
    }

    // ── Backward mechanics ──

    #[test]
    fn vector_outputs_are_rejected_by_backward() {
        let (p, mut g) = empty_grads();
        let mut tape = Tape::new();
        let x = tape.constant(vec![1.0, 2.0]);
        match tape.backward(&p, x, &mut g) {
            Err(NnError::NonScalarOutput { len: 2 }) => {}
            other => panic!("expected non-scalar error, got {other:?}"),
        }
    }

    #[test]
    fn nodes_off_the_output_path_stay_untouched() {
        let (p, mut g) = empty_grads();
        let mut tape = Tape::new();
        let x = tape.constant(vec![2.0]);
        let bystander = tape.mul(x, x);
        let y = tape.weighted_sum(&[(1.0, x)]);
        tape.backward(&p, y, &mut g).unwrap();
        assert_eq!(tape.grad(bystander), &[0.0]);
        assert_eq!(tape.grad(x), &[1.0]);
    }

    #[test]
    fn repeated_backward_does_not_double_node_adjoints() {
        let (p, mut g) = empty_grads();
        let mut tape = Tape::new();
        let x = tape.constant(vec![3.0]);
        let y = tape.mul(x, x);
        tape.backward(&p, y, &mut g).unwrap();
        tape.backward(&p, y, &mut g).unwrap();
        assert_eq!(tape.grad(x), &[6.0]);
    }

    #[test]
    fn parameter_gradients_accumulate_across_backward_calls() {
        let mut p = Params::new();
        let t = p.add("table", Tensor::new(1, 1, vec![2.0]));
        let mut g = Grads::zeros_like(&p);
        for _ in 0..3 {
            let mut tape = Tape::new();
            let r = tape.row(&p, t, 0);
            let loss = tape.weighted_sum(&[(1.0, r)]);
            tape.backward(&p, loss, &mut g).unwrap();
        }
        assert_eq!(g.group(t), &[3.0]);
    }

    #[test]
    fn rectifier_blocks_gradient_on_the_dead_side() {
        let (p, mut g) = empty_grads();
        let mut tape = Tape::new();
        let x = tape.constant(vec![1.5, -1.5]);
        let y = tape.relu(x);
        assert_eq!(tape.value(y), &[1.5, 0.0]);
        let y0 = tape.pick(y, 0);
        let y1 = tape.pick(y, 1);
        let loss = tape.weighted_sum(&[(1.0, y0), (1.0, y1)]);
        tape.backward(&p, loss, &mut g).unwrap();
        assert_eq!(tape.grad(x), &[1.0, 0.0]);
    }

    #[test]
    fn saturating_nonlinearities_match_their_derivatives() {
        let (p, mut g) = empty_grads();
        let mut tape = Tape::new();
        let x = tape.constant(vec![0.3]);
        let s = tape.sigmoid(x);
        let t = tape.tanh(x);
        let s0 = tape.pick(s, 0);
        let t0 = tape.pick(t, 0);
        let loss = tape.weighted_sum(&[(1.0, s0), (1.0, t0)]);
        tape.backward(&p, loss, &mut g).unwrap();
        let sv = 1.0 / (1.0 + (-0.3f64).exp());
        let tv = 0.3f64.tanh();
        let want = sv * (1.0 - sv) + (1.0 - tv * tv);
        assert!((tape.grad(x)[0] - want).abs() < 1e-15);
    }

    #[test]
    fn identical_tapes_are_bit_identical() {
        let run = || {
            let mut p = Params::new();
            let w = p.add("w", Tensor::new(2, 2, vec![0.1, -0.2, 0.3, 0.4]));
            let b = p.add("b", Tensor::new(2, 1, vec![0.0, 0.1]));
            let mut g = Grads::zeros_like(&p);
            let mut tape = Tape::new();
            let x = tape.constant(vec![0.7, -1.3]);
            let h = tape.affine(&p, w, b, x);
            let h = tape.tanh(h);
            let lp = tape.log_softmax(h);
            let l = tape.pick(lp, 0);
            let loss = tape.weighted_sum(&[(-1.0, l)]);
            tape.backward(&p, loss, &mut g).unwrap();
            (tape.scalar(loss).to_bits(), g.group(w).iter().map(|v| v.to_bits()).collect::<Vec<_>>())
        };
        assert_eq!(run(), run());
    }
}
