//! Parameter storage: named, shaped groups of 64-bit floats.
//!
//! A [`Tensor`] is a dense row-major matrix (column vectors are `n × 1`).
//! [`Params`] owns an ordered list of named tensors — the trainable state of
//! a network — and hands out stable [`ParamId`]s. Gradients accumulate in a
//! [`Grads`] container parallel to the `Params` that produced it; keeping the
//! two apart means a tape can *read* parameters while an optimizer is the
//! only writer.

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Tensor {
    /// Panics if `data.len() != rows * cols`.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(
            data.len(),
            rows * cols,
            "tensor data length {} does not match shape {rows}x{cols}",
            data.len()
        );
        Tensor { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Tensor { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    /// Row `r` as a slice of length `cols`.
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// `y = W x` for a column vector `x` of length `cols`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "matvec: vector length {} vs {} columns", x.len(), self.cols);
        let mut y = vec![0.0; self.rows];
        for (r, out) in y.iter_mut().enumerate() {
            let row = self.row(r);
            let mut acc = 0.0;
            for (w, xv) in row.iter().zip(x) {
                acc += w * xv;
            }
            *out = acc;
        }
        y
    }

    /// `y = Wᵀ g` for a column vector `g` of length `rows`.
    pub fn matvec_transposed(&self, g: &[f64]) -> Vec<f64> {
        assert_eq!(g.len(), self.rows, "matvec_transposed: vector length {} vs {} rows", g.len(), self.rows);
        let mut y = vec![0.0; self.cols];
        for (r, gv) in g.iter().enumerate() {
            if *gv == 0.0 {
                continue;
            }
            let row = self.row(r);
            for (out, w) in y.iter_mut().zip(row) {
                *out += gv * w;
            }
        }
        y
    }
}

/// Stable handle to one named tensor inside a [`Params`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParamId(pub(crate) usize);

/// Ordered collection of named parameter tensors.
#[derive(Debug, Clone, Default)]
pub struct Params {
    names: Vec<String>,
    tensors: Vec<Tensor>,
}

impl Params {
    pub fn new() -> Self {
        Params::default()
    }

    /// Registers a tensor under `name`. Names must be unique — duplicates
    /// would make checkpoints and gradcheck reports ambiguous.
    pub fn add(&mut self, name: &str, tensor: Tensor) -> ParamId {
        assert!(
            !self.names.iter().any(|n| n == name),
            "duplicate parameter group name `{name}`"
        );
        self.names.push(name.to_string());
        self.tensors.push(tensor);
        ParamId(self.tensors.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn tensor(&self, id: ParamId) -> &Tensor {
        &self.tensors[id.0]
    }

    pub fn tensor_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.tensors[id.0]
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.tensors.len()).map(ParamId)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.names.iter().map(String::as_str).zip(self.tensors.iter())
    }

    /// Total number of scalar parameters across all groups.
    pub fn n_scalars(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    pub fn id_of(&self, name: &str) -> Option<ParamId> {
        self.names.iter().position(|n| n == name).map(ParamId)
    }
}

/// Gradient accumulators parallel to one [`Params`].
#[derive(Debug, Clone)]
pub struct Grads {
    store: Vec<Vec<f64>>,
}

impl Grads {
    /// Zero gradients shaped after `params`.
    pub fn zeros_like(params: &Params) -> Self {
        Grads { store: params.ids().map(|id| vec![0.0; params.tensor(id).len()]).collect() }
    }

    pub fn zero(&mut self) {
        for g in &mut self.store {
            g.iter_mut().for_each(|v| *v = 0.0);
        }
    }

    pub fn group(&self, id: ParamId) -> &[f64] {
        &self.store[id.0]
    }

    pub fn group_mut(&mut self, id: ParamId) -> &mut [f64] {
        &mut self.store[id.0]
    }

    pub fn n_groups(&self) -> usize {
        self.store.len()
    }

    /// Largest absolute entry over every group — the divergence sentinel.
    pub fn max_abs(&self) -> f64 {
        self.store.iter().flatten().fold(0.0f64, |m, g| m.max(g.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.store.iter().flatten().all(|g| g.is_finite())
    }
}
