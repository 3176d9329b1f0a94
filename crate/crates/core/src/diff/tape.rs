//! The recorded computation graph.
//!
//! Nodes are appended in forward order, so the vector itself is a valid
//! topological order and the backward pass is a single reverse sweep that
//! visits each node exactly once.

use super::store::{ParamId, ParameterStore};
use super::{DiffError, Real};

/// Handle to a node on a [`Tape`]. Only valid for the tape that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(usize);

/// Multiset aggregation mode for message passing.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum Aggregator {
    Sum,
    Max,
    SmoothMax { tau: f64 },
}

impl std::fmt::Display for Aggregator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Aggregator::Sum => write!(f, "sum"),
            Aggregator::Max => write!(f, "max"),
            Aggregator::SmoothMax { tau } => write!(f, "smooth-max({tau})"),
        }
    }
}

enum Op {
    /// Constant leaf; receives no gradient.
    Const,
    /// View of a named parameter; backward accumulates into the store.
    Param(ParamId),
    /// Forward copy that blocks gradient flow.
    Detach(NodeId),
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    MulElem(NodeId, NodeId),
    Scale(NodeId, Real),
    /// `w [r,c] * x [c] -> [r]`
    MatVec(NodeId, NodeId),
    Concat(Vec<NodeId>),
    Slice(NodeId, usize),
    /// Sum of same-shaped vectors, accumulated in value-sorted order so the
    /// result is independent of input order (exact permutation invariance).
    SumVectors(Vec<NodeId>),
    MaxVectors(Vec<NodeId>),
    SmoothMaxVectors(Vec<NodeId>, Real),
    Mish(NodeId),
    Sigmoid(NodeId),
    Softmax(NodeId),
    LogSumExp(NodeId),
    SumElems(NodeId),
    /// One half of the square, so the gradient is the value itself.
    HalfSquare(NodeId),
    /// Binary cross-entropy of a scalar prediction against a constant target,
    /// with the prediction clamped to [1e-7, 1-1e-7].
    Bce(NodeId, Real),
}

struct Node {
    shape: Vec<usize>,
    values: Vec<Real>,
    op: Op,
}

/// A recorded forward computation.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

const BCE_CLAMP: Real = 1e-7;

fn softplus(x: Real) -> Real {
    if x > 20.0 {
        x
    } else if x < -20.0 {
        x.exp()
    } else {
        x.exp().ln_1p()
    }
}

fn mish(x: Real) -> Real {
    x * softplus(x).tanh()
}

fn mish_grad(x: Real) -> Real {
    let sp = softplus(x);
    let t = sp.tanh();
    // d/dx softplus = sigmoid
    let sig = 1.0 / (1.0 + (-x).exp());
    t + x * (1.0 - t * t) * sig
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, shape: Vec<usize>, values: Vec<Real>, op: Op) -> NodeId {
        debug_assert_eq!(shape.iter().product::<usize>(), values.len());
        self.nodes.push(Node { shape, values, op });
        NodeId(self.nodes.len() - 1)
    }

    pub fn shape(&self, id: NodeId) -> &[usize] {
        &self.nodes[id.0].shape
    }

    pub fn values(&self, id: NodeId) -> &[Real] {
        &self.nodes[id.0].values
    }

    /// Value of a single-element node.
    pub fn scalar(&self, id: NodeId) -> Real {
        debug_assert_eq!(self.nodes[id.0].values.len(), 1);
        self.nodes[id.0].values[0]
    }

    pub fn constant(&mut self, shape: Vec<usize>, values: Vec<Real>) -> NodeId {
        self.push(shape, values, Op::Const)
    }

    pub fn constant_scalar(&mut self, value: Real) -> NodeId {
        self.push(vec![1], vec![value], Op::Const)
    }

    pub fn zeros(&mut self, dim: usize) -> NodeId {
        self.push(vec![dim], vec![0.0; dim], Op::Const)
    }

    /// Copies the current value of a stored parameter onto the tape.
    pub fn param(&mut self, store: &ParameterStore, id: ParamId) -> NodeId {
        let p = store.param(id);
        self.push(p.shape.to_vec(), p.values.clone(), Op::Param(id))
    }

    pub fn detach(&mut self, a: NodeId) -> NodeId {
        let vals = self.nodes[a.0].values.clone();
        let shape = self.nodes[a.0].shape.clone();
        self.push(shape, vals, Op::Detach(a))
    }

    fn binary_same_shape(
        &mut self,
        op_name: &'static str,
        a: NodeId,
        b: NodeId,
    ) -> Result<(), DiffError> {
        if self.nodes[a.0].shape != self.nodes[b.0].shape {
            return Err(DiffError::ShapeMismatch {
                op: op_name,
                detail: format!("{:?} vs {:?}", self.nodes[a.0].shape, self.nodes[b.0].shape),
            });
        }
        Ok(())
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, DiffError> {
        self.binary_same_shape("add", a, b)?;
        let vals: Vec<Real> = self.nodes[a.0]
            .values
            .iter()
            .zip(&self.nodes[b.0].values)
            .map(|(x, y)| x + y)
            .collect();
        Ok(self.push(self.nodes[a.0].shape.clone(), vals, Op::Add(a, b)))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, DiffError> {
        self.binary_same_shape("sub", a, b)?;
        let vals: Vec<Real> = self.nodes[a.0]
            .values
            .iter()
            .zip(&self.nodes[b.0].values)
            .map(|(x, y)| x - y)
            .collect();
        Ok(self.push(self.nodes[a.0].shape.clone(), vals, Op::Sub(a, b)))
    }

    pub fn mul_elem(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, DiffError> {
        self.binary_same_shape("mul_elem", a, b)?;
        let vals: Vec<Real> = self.nodes[a.0]
            .values
            .iter()
            .zip(&self.nodes[b.0].values)
            .map(|(x, y)| x * y)
            .collect();
        Ok(self.push(self.nodes[a.0].shape.clone(), vals, Op::MulElem(a, b)))
    }

    pub fn scale(&mut self, a: NodeId, c: Real) -> NodeId {
        let vals: Vec<Real> = self.nodes[a.0].values.iter().map(|x| x * c).collect();
        self.push(self.nodes[a.0].shape.clone(), vals, Op::Scale(a, c))
    }

    /// `w` must have shape `[rows, cols]` and `x` shape `[cols]`.
    pub fn matvec(&mut self, w: NodeId, x: NodeId) -> Result<NodeId, DiffError> {
        let (ws, xs) = (&self.nodes[w.0].shape, &self.nodes[x.0].shape);
        if ws.len() != 2 || xs.len() != 1 || ws[1] != xs[0] {
            return Err(DiffError::ShapeMismatch {
                op: "matvec",
                detail: format!("{ws:?} * {xs:?}"),
            });
        }
        let (rows, cols) = (ws[0], ws[1]);
        let wv = &self.nodes[w.0].values;
        let xv = &self.nodes[x.0].values;
        let mut out = vec![0.0; rows];
        for r in 0..rows {
            let row = &wv[r * cols..(r + 1) * cols];
            let mut acc = 0.0;
            for c in 0..cols {
                acc += row[c] * xv[c];
            }
            out[r] = acc;
        }
        Ok(self.push(vec![rows], out, Op::MatVec(w, x)))
    }

    pub fn concat(&mut self, parts: &[NodeId]) -> Result<NodeId, DiffError> {
        if parts.is_empty() {
            return Err(DiffError::EmptyInput("concat"));
        }
        let mut vals = Vec::new();
        for &p in parts {
            if self.nodes[p.0].shape.len() != 1 {
                return Err(DiffError::ShapeMismatch {
                    op: "concat",
                    detail: format!("{:?} is not a vector", self.nodes[p.0].shape),
                });
            }
            vals.extend_from_slice(&self.nodes[p.0].values);
        }
        let len = vals.len();
        Ok(self.push(vec![len], vals, Op::Concat(parts.to_vec())))
    }

    pub fn slice(&mut self, a: NodeId, offset: usize, len: usize) -> Result<NodeId, DiffError> {
        let n = self.nodes[a.0].values.len();
        if offset + len > n {
            return Err(DiffError::ShapeMismatch {
                op: "slice",
                detail: format!("[{offset}, {}) out of {n}", offset + len),
            });
        }
        let vals = self.nodes[a.0].values[offset..offset + len].to_vec();
        Ok(self.push(vec![len], vals, Op::Slice(a, offset)))
    }

    fn check_same_dims(&self, op: &'static str, parts: &[NodeId]) -> Result<usize, DiffError> {
        if parts.is_empty() {
            return Err(DiffError::EmptyInput(op));
        }
        let dim = self.nodes[parts[0].0].values.len();
        for &p in parts {
            let got = self.nodes[p.0].values.len();
            if got != dim {
                return Err(DiffError::DimensionMismatch { expected: dim, got });
            }
        }
        Ok(dim)
    }

    /// Order of accumulation is fixed by sorting the summand vectors, so any
    /// permutation of `parts` produces bitwise-identical output.
    pub fn sum_vectors(&mut self, parts: &[NodeId]) -> Result<NodeId, DiffError> {
        let dim = self.check_same_dims("sum_vectors", parts)?;
        let mut order: Vec<&NodeId> = parts.iter().collect();
        order.sort_by(|a, b| {
            let (va, vb) = (&self.nodes[a.0].values, &self.nodes[b.0].values);
            va.iter()
                .zip(vb.iter())
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let mut out = vec![0.0; dim];
        for p in order {
            for (o, v) in out.iter_mut().zip(&self.nodes[p.0].values) {
                *o += v;
            }
        }
        Ok(self.push(vec![dim], out, Op::SumVectors(parts.to_vec())))
    }

    pub fn max_vectors(&mut self, parts: &[NodeId]) -> Result<NodeId, DiffError> {
        let dim = self.check_same_dims("max_vectors", parts)?;
        let mut out = self.nodes[parts[0].0].values.clone();
        for &p in &parts[1..] {
            for (o, v) in out.iter_mut().zip(&self.nodes[p.0].values) {
                if *v > *o {
                    *o = *v;
                }
            }
        }
        Ok(self.push(vec![dim], out, Op::MaxVectors(parts.to_vec())))
    }

    pub fn smooth_max_vectors(&mut self, parts: &[NodeId], tau: Real) -> Result<NodeId, DiffError> {
        let dim = self.check_same_dims("smooth_max_vectors", parts)?;
        let mut out = vec![0.0; dim];
        for d in 0..dim {
            let mx = parts
                .iter()
                .map(|p| self.nodes[p.0].values[d])
                .fold(Real::NEG_INFINITY, Real::max);
            let s: Real = parts
                .iter()
                .map(|p| ((self.nodes[p.0].values[d] - mx) / tau).exp())
                .sum();
            out[d] = mx + tau * s.ln();
        }
        Ok(self.push(vec![dim], out, Op::SmoothMaxVectors(parts.to_vec(), tau)))
    }

    /// Multiset aggregation. An empty multiset yields the zero vector of the
    /// requested dimension.
    pub fn aggregate(
        &mut self,
        parts: &[NodeId],
        mode: Aggregator,
        dim: usize,
    ) -> Result<NodeId, DiffError> {
        if parts.is_empty() {
            return Ok(self.zeros(dim));
        }
        match mode {
            Aggregator::Sum => self.sum_vectors(parts),
            Aggregator::Max => self.max_vectors(parts),
            Aggregator::SmoothMax { tau } => self.smooth_max_vectors(parts, tau as Real),
        }
    }

    pub fn mish(&mut self, a: NodeId) -> NodeId {
        let vals: Vec<Real> = self.nodes[a.0].values.iter().map(|&x| mish(x)).collect();
        self.push(self.nodes[a.0].shape.clone(), vals, Op::Mish(a))
    }

    pub fn sigmoid(&mut self, a: NodeId) -> NodeId {
        let vals: Vec<Real> = self.nodes[a.0]
            .values
            .iter()
            .map(|&x| 1.0 / (1.0 + (-x).exp()))
            .collect();
        self.push(self.nodes[a.0].shape.clone(), vals, Op::Sigmoid(a))
    }

    /// Stable softmax over a non-empty vector of finite logits.
    pub fn softmax(&mut self, a: NodeId) -> Result<NodeId, DiffError> {
        let xs = &self.nodes[a.0].values;
        if xs.is_empty() {
            return Err(DiffError::EmptyInput("softmax"));
        }
        if xs.iter().any(|x| !x.is_finite()) {
            return Err(DiffError::NonFiniteInput("softmax"));
        }
        let mx = xs.iter().fold(Real::NEG_INFINITY, |m, &x| m.max(x));
        let exps: Vec<Real> = xs.iter().map(|&x| (x - mx).exp()).collect();
        let total: Real = exps.iter().sum();
        let vals: Vec<Real> = exps.iter().map(|e| e / total).collect();
        Ok(self.push(self.nodes[a.0].shape.clone(), vals, Op::Softmax(a)))
    }

    pub fn log_sum_exp(&mut self, a: NodeId) -> Result<NodeId, DiffError> {
        let xs = &self.nodes[a.0].values;
        if xs.is_empty() {
            return Err(DiffError::EmptyInput("log_sum_exp"));
        }
        if xs.iter().any(|x| !x.is_finite()) {
            return Err(DiffError::NonFiniteInput("log_sum_exp"));
        }
        let mx = xs.iter().fold(Real::NEG_INFINITY, |m, &x| m.max(x));
        let s: Real = xs.iter().map(|&x| (x - mx).exp()).sum();
        let v = mx + s.ln();
        Ok(self.push(vec![1], vec![v], Op::LogSumExp(a)))
    }

    pub fn sum_elems(&mut self, a: NodeId) -> NodeId {
        let v: Real = self.nodes[a.0].values.iter().sum();
        self.push(vec![1], vec![v], Op::SumElems(a))
    }

    /// `½·x²` of a scalar.
    pub fn half_square(&mut self, a: NodeId) -> NodeId {
        let vals: Vec<Real> = self.nodes[a.0].values.iter().map(|&x| 0.5 * x * x).collect();
        self.push(self.nodes[a.0].shape.clone(), vals, Op::HalfSquare(a))
    }

    /// Binary cross-entropy of a scalar prediction against a constant target.
    pub fn bce(&mut self, prediction: NodeId, target: Real) -> Result<NodeId, DiffError> {
        if self.nodes[prediction.0].values.len() != 1 {
            return Err(DiffError::ShapeMismatch {
                op: "bce",
                detail: format!("prediction shape {:?}", self.nodes[prediction.0].shape),
            });
        }
        let p = self.nodes[prediction.0].values[0].clamp(BCE_CLAMP, 1.0 - BCE_CLAMP);
        let v = -(target * p.ln() + (1.0 - target) * (1.0 - p).ln());
        Ok(self.push(vec![1], vec![v], Op::Bce(prediction, target)))
    }

    /// Accumulates `d(root)/d(param)` into the store for every parameter that
    /// participated in the recorded computation. Parameters the root does not
    /// reach keep their previous (zero-initialized) gradient.
    pub fn backward(&self, root: NodeId, store: &mut ParameterStore) -> Result<(), DiffError> {
        if self.nodes[root.0].values.len() != 1 {
            return Err(DiffError::NonScalarRoot(self.nodes[root.0].shape.clone()));
        }
        let mut grads: Vec<Option<Vec<Real>>> = (0..=root.0).map(|_| None).collect();
        grads[root.0] = Some(vec![1.0]);
        for id in (0..=root.0).rev() {
            let Some(g) = grads[id].take() else { continue };
            let node = &self.nodes[id];
            match &node.op {
                Op::Const | Op::Detach(_) => {}
                Op::Param(pid) => store.accumulate_grad(*pid, &g),
                Op::Add(a, b) => {
                    acc(&mut grads, *a, &g);
                    acc(&mut grads, *b, &g);
                }
                Op::Sub(a, b) => {
                    acc(&mut grads, *a, &g);
                    acc_scaled(&mut grads, *b, &g, -1.0);
                }
                Op::MulElem(a, b) => {
                    let bv = self.nodes[b.0].values.clone();
                    let av = self.nodes[a.0].values.clone();
                    acc_with(&mut grads, *a, g.iter().zip(&bv).map(|(x, y)| x * y));
                    acc_with(&mut grads, *b, g.iter().zip(&av).map(|(x, y)| x * y));
                }
                Op::Scale(a, c) => acc_scaled(&mut grads, *a, &g, *c),
                Op::MatVec(w, x) => {
                    let cols = self.nodes[w.0].shape[1];
                    let rows = self.nodes[w.0].shape[0];
                    let wv = &self.nodes[w.0].values;
                    let xv = &self.nodes[x.0].values;
                    // dW[r,c] += g[r] * x[c]
                    let gw = grads[w.0].get_or_insert_with(|| vec![0.0; rows * cols]);
                    for r in 0..rows {
                        let gr = g[r];
                        if gr != 0.0 {
                            let row = &mut gw[r * cols..(r + 1) * cols];
                            for c in 0..cols {
                                row[c] += gr * xv[c];
                            }
                        }
                    }
                    // dx[c] += sum_r g[r] * W[r,c]
                    let gx = grads[x.0].get_or_insert_with(|| vec![0.0; cols]);
                    for r in 0..rows {
                        let gr = g[r];
                        if gr != 0.0 {
                            let row = &wv[r * cols..(r + 1) * cols];
                            for c in 0..cols {
                                gx[c] += gr * row[c];
                            }
                        }
                    }
                }
                Op::Concat(parts) => {
                    let mut offset = 0;
                    for &p in parts {
                        let len = self.nodes[p.0].values.len();
                        acc(&mut grads, p, &g[offset..offset + len]);
                        offset += len;
                    }
                }
                Op::Slice(a, offset) => {
                    let n = self.nodes[a.0].values.len();
                    let ga = grads[a.0].get_or_insert_with(|| vec![0.0; n]);
                    for (i, gv) in g.iter().enumerate() {
                        ga[offset + i] += gv;
                    }
                }
                Op::SumVectors(parts) => {
                    for &p in parts {
                        acc(&mut grads, p, &g);
                    }
                }
                Op::MaxVectors(parts) => {
                    // Route each element's gradient to the first input that
                    // attains the maximum.
                    for d in 0..g.len() {
                        let mut winner = parts[0];
                        let mut best = self.nodes[parts[0].0].values[d];
                        for &p in &parts[1..] {
                            let v = self.nodes[p.0].values[d];
                            if v > best {
                                best = v;
                                winner = p;
                            }
                        }
                        let n = self.nodes[winner.0].values.len();
                        let gw = grads[winner.0].get_or_insert_with(|| vec![0.0; n]);
                        gw[d] += g[d];
                    }
                }
                Op::SmoothMaxVectors(parts, tau) => {
                    for d in 0..g.len() {
                        let mx = parts
                            .iter()
                            .map(|p| self.nodes[p.0].values[d])
                            .fold(Real::NEG_INFINITY, Real::max);
                        let total: Real = parts
                            .iter()
                            .map(|p| ((self.nodes[p.0].values[d] - mx) / tau).exp())
                            .sum();
                        for &p in parts {
                            let w = ((self.nodes[p.0].values[d] - mx) / tau).exp() / total;
                            let n = self.nodes[p.0].values.len();
                            let gp = grads[p.0].get_or_insert_with(|| vec![0.0; n]);
                            gp[d] += g[d] * w;
                        }
                    }
                }
                Op::Mish(a) => {
                    let av = &self.nodes[a.0].values;
                    acc_with(&mut grads, *a, g.iter().zip(av).map(|(gv, &x)| gv * mish_grad(x)));
                }
                Op::Sigmoid(a) => {
                    let sv = &node.values;
                    acc_with(&mut grads, *a, g.iter().zip(sv).map(|(gv, &s)| gv * s * (1.0 - s)));
                }
                Op::Softmax(a) => {
                    let p = &node.values;
                    let dot: Real = g.iter().zip(p).map(|(gv, pv)| gv * pv).sum();
                    acc_with(&mut grads, *a, g.iter().zip(p).map(|(gv, pv)| pv * (gv - dot)));
                }
                Op::LogSumExp(a) => {
                    let xs = &self.nodes[a.0].values;
                    let mx = xs.iter().fold(Real::NEG_INFINITY, |m, &x| m.max(x));
                    let total: Real = xs.iter().map(|&x| (x - mx).exp()).sum();
                    acc_with(
                        &mut grads,
                        *a,
                        xs.iter().map(|&x| g[0] * ((x - mx).exp() / total)),
                    );
                }
                Op::SumElems(a) => {
                    let n = self.nodes[a.0].values.len();
                    let ga = grads[a.0].get_or_insert_with(|| vec![0.0; n]);
                    for gv in ga.iter_mut() {
                        *gv += g[0];
                    }
                }
                Op::HalfSquare(a) => {
                    let av = &self.nodes[a.0].values;
                    acc_with(&mut grads, *a, g.iter().zip(av).map(|(gv, &x)| gv * x));
                }
                Op::Bce(a, target) => {
                    let p = self.nodes[a.0].values[0];
                    let d = if (BCE_CLAMP..=1.0 - BCE_CLAMP).contains(&p) {
                        (p - target) / (p * (1.0 - p))
                    } else {
                        0.0
                    };
                    acc_with(&mut grads, *a, std::iter::once(g[0] * d));
                }
            }
        }
        Ok(())
    }
}

fn acc(grads: &mut [Option<Vec<Real>>], target: NodeId, g: &[Real]) {
    let slot = grads[target.0].get_or_insert_with(|| vec![0.0; g.len()]);
    for (s, v) in slot.iter_mut().zip(g) {
        *s += v;
    }
}

fn acc_scaled(grads: &mut [Option<Vec<Real>>], target: NodeId, g: &[Real], c: Real) {
    let slot = grads[target.0].get_or_insert_with(|| vec![0.0; g.len()]);
    for (s, v) in slot.iter_mut().zip(g) {
        *s += v * c;
    }
}

fn acc_with(
    grads: &mut [Option<Vec<Real>>],
    target: NodeId,
    values: impl Iterator<Item = Real>,
) {
    let values: Vec<Real> = values.collect();
    let slot = grads[target.0].get_or_insert_with(|| vec![0.0; values.len()]);
    for (s, v) in slot.iter_mut().zip(values) {
        *s += v;
    }
}
