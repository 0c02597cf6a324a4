//! Recorded computation graph with reverse-mode differentiation.
//!
//! A [`Graph`] is built fresh for every forward pass. Each operation stores
//! its output value and enough context to run its adjoint; [`Graph::backward`]
//! walks the record in reverse and accumulates parameter gradients into the
//! owning [`ParamStore`].

use std::collections::HashMap;
use std::rc::Rc;

use super::mask::{AttentionMask, Segments};
use super::params::{ParamId, ParamStore};
use super::tensor::{Real, Tensor};
use crate::error::{Error, Result};

/// Handle to a value recorded in a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

pub const LAYER_NORM_EPS: f64 = 1e-5;

enum Op<T> {
    Constant,
    Param(ParamId),
    MatMul(Var, Var),
    Affine(Var, Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, T),
    Relu(Var),
    Tanh(Var),
    Exp(Var),
    Square(Var),
    Clamp(Var, T, T),
    Minimum(Var, Var),
    LayerNorm {
        x: Var,
        gain: Var,
        bias: Var,
        xhat: Vec<T>,
        inv_std: Vec<T>,
    },
    Softmax(Var),
    SegmentLogSoftmax(Var, Rc<Segments>),
    Attention {
        q: Var,
        k: Var,
        v: Var,
        mask: Rc<AttentionMask>,
        heads: usize,
        /// Per block, per head, an `L × L` probability matrix.
        probs: Vec<T>,
    },
    GatherRows {
        sources: Vec<Var>,
        picks: Rc<Vec<(usize, usize)>>,
    },
    Pick(Var, Rc<Vec<usize>>),
    SegmentRowDot {
        q: Var,
        k: Var,
        owner: Rc<Vec<usize>>,
    },
    SegmentSum(Var, Rc<Segments>),
    Sum(Var),
    Mean(Var),
}

struct Node<T> {
    value: Tensor<T>,
    op: Op<T>,
}

/// Computation record for one forward pass.
pub struct Graph<T: Real> {
    nodes: Vec<Node<T>>,
    param_vars: HashMap<ParamId, Var>,
}

impl<T: Real> Default for Graph<T> {
    fn default() -> Self {
        Self::new()
    }
}

fn shape_err(what: &str, a: &[usize], b: &[usize]) -> Error {
    Error::invalid(format!("{what}: incompatible shapes {a:?} and {b:?}"))
}

impl<T: Real> Graph<T> {
    pub fn new() -> Self {
        Self {
            nodes: Vec::new(),
            param_vars: HashMap::new(),
        }
    }

    fn push(&mut self, value: Tensor<T>, op: Op<T>) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        &self.nodes[v.0].value
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn constant(&mut self, t: Tensor<T>) -> Var {
        self.push(t, Op::Constant)
    }

    /// Leaf for a stored parameter; repeated calls return the same handle.
    pub fn param(&mut self, store: &ParamStore<T>, id: ParamId) -> Var {
        if let Some(&v) = self.param_vars.get(&id) {
            return v;
        }
        let v = self.push(store.get(id).value.clone(), Op::Param(id));
        self.param_vars.insert(id, v);
        v
    }

    fn dims(&self, v: Var) -> (usize, usize) {
        let t = self.value(v);
        (t.rows(), t.cols())
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (m, k) = self.dims(a);
        let (k2, n) = self.dims(b);
        if k != k2 {
            return Err(shape_err("matmul", self.value(a).shape(), self.value(b).shape()));
        }
        let mut out = Tensor::zeros(&[m, n]);
        T::gemm_raw(
            m,
            k,
            n,
            T::one(),
            self.value(a).data(),
            k as isize,
            1,
            self.value(b).data(),
            n as isize,
            1,
            T::zero(),
            out.data_mut(),
            n as isize,
            1,
        );
        Ok(self.push(out, Op::MatMul(a, b)))
    }

    /// `x · W + b` with `b` broadcast over rows.
    pub fn affine(&mut self, x: Var, w: Var, b: Var) -> Result<Var> {
        let (m, k) = self.dims(x);
        let (k2, n) = self.dims(w);
        if k != k2 || self.value(b).len() != n {
            return Err(shape_err("affine", self.value(x).shape(), self.value(w).shape()));
        }
        let bias = self.value(b).data();
        let mut data = Vec::with_capacity(m * n);
        for _ in 0..m {
            data.extend_from_slice(bias);
        }
        let mut out = Tensor::matrix(m, n, data)?;
        T::gemm_raw(
            m,
            k,
            n,
            T::one(),
            self.value(x).data(),
            k as isize,
            1,
            self.value(w).data(),
            n as isize,
            1,
            T::one(),
            out.data_mut(),
            n as isize,
            1,
        );
        Ok(self.push(out, Op::Affine(x, w, b)))
    }

    fn zip(&mut self, a: Var, b: Var, what: &str, f: impl Fn(T, T) -> T, op: Op<T>) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape() != tb.shape() {
            return Err(shape_err(what, ta.shape(), tb.shape()));
        }
        let data = ta.data().iter().zip(tb.data()).map(|(&x, &y)| f(x, y)).collect();
        let out = Tensor::new(ta.shape(), data)?;
        Ok(self.push(out, op))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip(a, b, "add", |x, y| x + y, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip(a, b, "sub", |x, y| x - y, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip(a, b, "mul", |x, y| x * y, Op::Mul(a, b))
    }

    pub fn minimum(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip(a, b, "minimum", |x, y| if x <= y { x } else { y }, Op::Minimum(a, b))
    }

    fn map(&mut self, x: Var, f: impl Fn(T) -> T, op: Op<T>) -> Var {
        let t = self.value(x);
        let out = Tensor::new(t.shape(), t.data().iter().map(|&v| f(v)).collect())
            .expect("same shape");
        self.push(out, op)
    }

    pub fn scale(&mut self, x: Var, s: f64) -> Var {
        let s = T::of(s);
        self.map(x, |v| v * s, Op::Scale(x, s))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        self.map(x, |v| if v > T::zero() { v } else { T::zero() }, Op::Relu(x))
    }

    pub fn tanh(&mut self, x: Var) -> Var {
        self.map(x, |v| v.tanh(), Op::Tanh(x))
    }

    pub fn exp(&mut self, x: Var) -> Var {
        self.map(x, |v| v.exp(), Op::Exp(x))
    }

    pub fn square(&mut self, x: Var) -> Var {
        self.map(x, |v| v * v, Op::Square(x))
    }

    pub fn clamp(&mut self, x: Var, lo: f64, hi: f64) -> Var {
        let (lo, hi) = (T::of(lo), T::of(hi));
        self.map(x, |v| v.max(lo).min(hi), Op::Clamp(x, lo, hi))
    }

    /// Per-row normalisation with learnable gain and bias.
    pub fn layer_norm(&mut self, x: Var, gain: Var, bias: Var) -> Result<Var> {
        let (m, n) = self.dims(x);
        if self.value(gain).len() != n || self.value(bias).len() != n {
            return Err(shape_err("layer_norm", self.value(x).shape(), self.value(gain).shape()));
        }
        let eps = T::of(LAYER_NORM_EPS);
        let nf = T::of(n as f64);
        let xs = self.value(x).data();
        let g = self.value(gain).data();
        let b = self.value(bias).data();
        let mut xhat = Vec::with_capacity(m * n);
        let mut inv_std = Vec::with_capacity(m);
        let mut out = Vec::with_capacity(m * n);
        for r in 0..m {
            let row = &xs[r * n..(r + 1) * n];
            let mean = row.iter().copied().sum::<T>() / nf;
            let var = row.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / nf;
            let is = T::one() / (var + eps).sqrt();
            inv_std.push(is);
            for c in 0..n {
                let h = (row[c] - mean) * is;
                xhat.push(h);
                out.push(h * g[c] + b[c]);
            }
        }
        let out = Tensor::matrix(m, n, out)?;
        Ok(self.push(
            out,
            Op::LayerNorm {
                x,
                gain,
                bias,
                xhat,
                inv_std,
            },
        ))
    }

    /// Row-wise softmax with the row maximum subtracted.
    pub fn softmax(&mut self, x: Var) -> Result<Var> {
        let (m, n) = self.dims(x);
        let xs = self.value(x).data();
        let mut out = vec![T::zero(); m * n];
        for r in 0..m {
            softmax_into(&xs[r * n..(r + 1) * n], &mut out[r * n..(r + 1) * n]);
        }
        let out = Tensor::matrix(m, n, out)?;
        Ok(self.push(out, Op::Softmax(x)))
    }

    /// Log-softmax over ragged segments of the flattened input.
    pub fn segment_log_softmax(&mut self, x: Var, seg: Rc<Segments>) -> Result<Var> {
        let t = self.value(x);
        if seg.total() != t.len() {
            return Err(Error::invalid(format!(
                "segments cover {} values, tensor has {}",
                seg.total(),
                t.len()
            )));
        }
        let xs = t.data();
        let mut out = vec![T::zero(); xs.len()];
        for r in seg.ranges() {
            if r.is_empty() {
                return Err(Error::invalid("log-softmax over an empty segment"));
            }
            let row = &xs[r.clone()];
            let max = row.iter().copied().fold(T::neg_infinity(), T::max);
            let lse = row.iter().map(|&v| (v - max).exp()).sum::<T>().ln() + max;
            for (o, &v) in out[r].iter_mut().zip(row) {
                *o = v - lse;
            }
        }
        let out = Tensor::new(t.shape(), out)?;
        Ok(self.push(out, Op::SegmentLogSoftmax(x, seg)))
    }

    /// Multi-head scaled dot-product attention.
    ///
    /// `q`, `k`, `v` are `(tokens, d)`; head `h` uses columns
    /// `h*d/heads..(h+1)*d/heads`. Scores are scaled by `1/sqrt(d/heads)` and
    /// masked entries get zero weight.
    pub fn attention(&mut self, q: Var, k: Var, v: Var, mask: Rc<AttentionMask>, heads: usize) -> Result<Var> {
        let (tq, d) = self.dims(q);
        if self.value(k).shape() != self.value(q).shape() || self.value(v).shape() != self.value(q).shape() {
            return Err(shape_err("attention", self.value(q).shape(), self.value(k).shape()));
        }
        if mask.tokens() != tq {
            return Err(Error::invalid(format!("mask covers {} tokens, input has {tq}", mask.tokens())));
        }
        if heads == 0 || d % heads != 0 {
            return Err(Error::invalid(format!("{d} features not divisible into {heads} heads")));
        }
        let dh = d / heads;
        let scale = T::one() / T::of(dh as f64).sqrt();
        let (qs, ks, vs) = (self.value(q).data(), self.value(k).data(), self.value(v).data());
        let dense = mask.refinement();
        let mut out = vec![T::zero(); tq * d];
        let mut probs = Vec::new();
        let mut scores = Vec::new();
        for block in mask.blocks().ranges() {
            let l = block.len();
            for h in 0..heads {
                let col = h * dh;
                for i in block.clone() {
                    scores.clear();
                    let qi = &qs[i * d + col..i * d + col + dh];
                    for j in block.clone() {
                        if dense.is_some_and(|a| !a[i * tq + j]) {
                            scores.push(T::neg_infinity());
                            continue;
                        }
                        let kj = &ks[j * d + col..j * d + col + dh];
                        scores.push(dot(qi, kj) * scale);
                    }
                    if scores.iter().all(|s| *s == T::neg_infinity()) {
                        return Err(Error::invalid(format!("attention row {i} is fully masked")));
                    }
                    let start = probs.len();
                    probs.resize(start + l, T::zero());
                    softmax_into(&scores, &mut probs[start..]);
                    let oi = &mut out[i * d + col..i * d + col + dh];
                    for (jj, j) in block.clone().enumerate() {
                        let p = probs[start + jj];
                        if p == T::zero() {
                            continue;
                        }
                        let vj = &vs[j * d + col..j * d + col + dh];
                        for (o, &x) in oi.iter_mut().zip(vj) {
                            *o += p * x;
                        }
                    }
                }
            }
        }
        let out = Tensor::matrix(tq, d, out)?;
        Ok(self.push(
            out,
            Op::Attention {
                q,
                k,
                v,
                mask,
                heads,
                probs,
            },
        ))
    }

    /// Builds a matrix whose row `r` is row `picks[r].1` of `sources[picks[r].0]`.
    pub fn gather_rows(&mut self, sources: &[Var], picks: Rc<Vec<(usize, usize)>>) -> Result<Var> {
        let cols = match sources.first() {
            Some(&s) => self.value(s).cols(),
            None => return Err(Error::invalid("gather_rows needs a source")),
        };
        if sources.iter().any(|&s| self.value(s).cols() != cols) {
            return Err(Error::invalid("gather_rows sources differ in width"));
        }
        let mut data = Vec::with_capacity(picks.len() * cols);
        for &(s, r) in picks.iter() {
            let src = self
                .value(*sources.get(s).ok_or_else(|| Error::invalid("gather source out of range"))?);
            if r >= src.rows() {
                return Err(Error::invalid(format!("gather row {r} out of range")));
            }
            data.extend_from_slice(src.row(r));
        }
        let out = Tensor::matrix(picks.len(), cols, data)?;
        Ok(self.push(
            out,
            Op::GatherRows {
                sources: sources.to_vec(),
                picks,
            },
        ))
    }

    /// Gathers flat elements into a column vector.
    pub fn pick(&mut self, x: Var, idx: Rc<Vec<usize>>) -> Result<Var> {
        let xs = self.value(x).data();
        let data = idx
            .iter()
            .map(|&i| xs.get(i).copied().ok_or_else(|| Error::invalid(format!("pick index {i} out of range"))))
            .collect::<Result<Vec<T>>>()?;
        Ok(self.push(Tensor::column(data), Op::Pick(x, idx)))
    }

    /// `out[n] = q[owner[n]] · k[n]` as a column vector.
    pub fn segment_row_dot(&mut self, q: Var, k: Var, owner: Rc<Vec<usize>>) -> Result<Var> {
        let (bq, dq) = self.dims(q);
        let (nk, dk) = self.dims(k);
        if dq != dk || owner.len() != nk || owner.iter().any(|&o| o >= bq) {
            return Err(shape_err("segment_row_dot", self.value(q).shape(), self.value(k).shape()));
        }
        let (qt, kt) = (self.value(q), self.value(k));
        let data = (0..nk).map(|n| dot(qt.row(owner[n]), kt.row(n))).collect();
        Ok(self.push(Tensor::column(data), Op::SegmentRowDot { q, k, owner }))
    }

    /// Sums each ragged segment of the flattened input into a column vector.
    pub fn segment_sum(&mut self, x: Var, seg: Rc<Segments>) -> Result<Var> {
        let xs = self.value(x).data();
        if seg.total() != xs.len() {
            return Err(Error::invalid("segment_sum coverage mismatch"));
        }
        let data = seg.ranges().map(|r| xs[r].iter().copied().sum()).collect();
        Ok(self.push(Tensor::column(data), Op::SegmentSum(x, seg)))
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let s = self.value(x).data().iter().copied().sum();
        self.push(Tensor::scalar(s), Op::Sum(x))
    }

    pub fn mean(&mut self, x: Var) -> Var {
        let t = self.value(x);
        let s = t.data().iter().copied().sum::<T>() / T::of(t.len().max(1) as f64);
        self.push(Tensor::scalar(s), Op::Mean(x))
    }

    /// Accumulates `∂loss/∂p` into every parameter reachable from `loss`.
    pub fn backward(&self, loss: Var, store: &mut ParamStore<T>) -> Result<()> {
        if self.value(loss).len() != 1 {
            return Err(Error::invalid(format!(
                "backward needs a scalar, got shape {:?}",
                self.value(loss).shape()
            )));
        }
        let mut grads: Vec<Option<Vec<T>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(vec![T::one()]);
        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            self.adjoint(node, &g, &mut grads, store);
        }
        Ok(())
    }

    fn acc<'a>(&self, grads: &'a mut [Option<Vec<T>>], v: Var) -> &'a mut [T] {
        let n = self.nodes[v.0].value.len();
        grads[v.0].get_or_insert_with(|| vec![T::zero(); n])
    }

    fn adjoint(&self, node: &Node<T>, g: &[T], grads: &mut [Option<Vec<T>>], store: &mut ParamStore<T>) {
        let val = |v: Var| self.nodes[v.0].value.data();
        match &node.op {
            Op::Constant => {}
            Op::Param(id) => {
                for (p, &d) in store.get_mut(*id).gradient.data_mut().iter_mut().zip(g) {
                    *p += d;
                }
            }
            Op::MatMul(a, b) => {
                self.matmul_adjoint(*a, *b, g, grads);
            }
            Op::Affine(x, w, b) => {
                self.matmul_adjoint(*x, *w, g, grads);
                let n = self.nodes[w.0].value.cols();
                let db = self.acc(grads, *b);
                for row in g.chunks(n) {
                    for (d, &v) in db.iter_mut().zip(row) {
                        *d += v;
                    }
                }
            }
            Op::Add(a, b) => {
                add_into(self.acc(grads, *a), g, T::one());
                add_into(self.acc(grads, *b), g, T::one());
            }
            Op::Sub(a, b) => {
                add_into(self.acc(grads, *a), g, T::one());
                add_into(self.acc(grads, *b), g, -T::one());
            }
            Op::Mul(a, b) => {
                let (av, bv) = (val(*a).to_vec(), val(*b).to_vec());
                for ((d, &gi), &y) in self.acc(grads, *a).iter_mut().zip(g).zip(&bv) {
                    *d += gi * y;
                }
                for ((d, &gi), &x) in self.acc(grads, *b).iter_mut().zip(g).zip(&av) {
                    *d += gi * x;
                }
            }
            Op::Minimum(a, b) => {
                let pick_a: Vec<bool> = val(*a).iter().zip(val(*b)).map(|(x, y)| x <= y).collect();
                for ((d, &gi), &s) in self.acc(grads, *a).iter_mut().zip(g).zip(&pick_a) {
                    if s {
                        *d += gi;
                    }
                }
                for ((d, &gi), &s) in self.acc(grads, *b).iter_mut().zip(g).zip(&pick_a) {
                    if !s {
                        *d += gi;
                    }
                }
            }
            Op::Scale(x, s) => add_into(self.acc(grads, *x), g, *s),
            Op::Relu(x) => {
                let xv = val(*x);
                for ((d, &gi), &v) in self.acc(grads, *x).iter_mut().zip(g).zip(xv) {
                    if v > T::zero() {
                        *d += gi;
                    }
                }
            }
            Op::Tanh(x) => {
                for ((d, &gi), &y) in self.acc(grads, *x).iter_mut().zip(g).zip(node.value.data()) {
                    *d += gi * (T::one() - y * y);
                }
            }
            Op::Exp(x) => {
                for ((d, &gi), &y) in self.acc(grads, *x).iter_mut().zip(g).zip(node.value.data()) {
                    *d += gi * y;
                }
            }
            Op::Square(x) => {
                let two = T::of(2.0);
                let xv = val(*x);
                for ((d, &gi), &v) in self.acc(grads, *x).iter_mut().zip(g).zip(xv) {
                    *d += two * gi * v;
                }
            }
            Op::Clamp(x, lo, hi) => {
                let xv = val(*x);
                for ((d, &gi), &v) in self.acc(grads, *x).iter_mut().zip(g).zip(xv) {
                    if v >= *lo && v <= *hi {
                        *d += gi;
                    }
                }
            }
            Op::LayerNorm {
                x,
                gain,
                bias,
                xhat,
                inv_std,
            } => {
                let n = self.nodes[x.0].value.cols();
                let nf = T::of(n as f64);
                let gv = val(*gain).to_vec();
                {
                    let dg = self.acc(grads, *gain);
                    for (row_g, row_h) in g.chunks(n).zip(xhat.chunks(n)) {
                        for c in 0..n {
                            dg[c] += row_g[c] * row_h[c];
                        }
                    }
                }
                {
                    let db = self.acc(grads, *bias);
                    for row_g in g.chunks(n) {
                        add_into(db, row_g, T::one());
                    }
                }
                let dx = self.acc(grads, *x);
                let mut dh = vec![T::zero(); n];
                for (r, (row_g, row_h)) in g.chunks(n).zip(xhat.chunks(n)).enumerate() {
                    let mut mean_dh = T::zero();
                    let mut mean_dh_h = T::zero();
                    for c in 0..n {
                        dh[c] = row_g[c] * gv[c];
                        mean_dh += dh[c];
                        mean_dh_h += dh[c] * row_h[c];
                    }
                    mean_dh /= nf;
                    mean_dh_h /= nf;
                    let is = inv_std[r];
                    for c in 0..n {
                        dx[r * n + c] += is * (dh[c] - mean_dh - row_h[c] * mean_dh_h);
                    }
                }
            }
            Op::Softmax(x) => {
                let n = node.value.cols();
                let dx = self.acc(grads, *x);
                for (r, (row_g, row_y)) in g.chunks(n).zip(node.value.data().chunks(n)).enumerate() {
                    let s: T = row_g.iter().zip(row_y).map(|(&a, &b)| a * b).sum();
                    for c in 0..n {
                        dx[r * n + c] += row_y[c] * (row_g[c] - s);
                    }
                }
            }
            Op::SegmentLogSoftmax(x, seg) => {
                let y = node.value.data();
                let dx = self.acc(grads, *x);
                for r in seg.ranges() {
                    let s: T = g[r.clone()].iter().copied().sum();
                    for i in r {
                        dx[i] += g[i] - y[i].exp() * s;
                    }
                }
            }
            Op::Attention {
                q,
                k,
                v,
                mask,
                heads,
                probs,
            } => self.attention_adjoint(*q, *k, *v, mask, *heads, probs, g, grads),
            Op::GatherRows { sources, picks } => {
                let cols = node.value.cols();
                for (r, &(s, row)) in picks.iter().enumerate() {
                    let dst = self.acc(grads, sources[s]);
                    add_into(&mut dst[row * cols..(row + 1) * cols], &g[r * cols..(r + 1) * cols], T::one());
                }
            }
            Op::Pick(x, idx) => {
                let dx = self.acc(grads, *x);
                for (&i, &gi) in idx.iter().zip(g) {
                    dx[i] += gi;
                }
            }
            Op::SegmentRowDot { q, k, owner } => {
                let d = self.nodes[q.0].value.cols();
                let (qv, kv) = (val(*q).to_vec(), val(*k).to_vec());
                {
                    let dq = self.acc(grads, *q);
                    for (n, &o) in owner.iter().enumerate() {
                        add_into(&mut dq[o * d..(o + 1) * d], &kv[n * d..(n + 1) * d], g[n]);
                    }
                }
                let dk = self.acc(grads, *k);
                for (n, &o) in owner.iter().enumerate() {
                    add_into(&mut dk[n * d..(n + 1) * d], &qv[o * d..(o + 1) * d], g[n]);
                }
            }
            Op::SegmentSum(x, seg) => {
                let dx = self.acc(grads, *x);
                for (s, r) in seg.ranges().enumerate() {
                    for i in r {
                        dx[i] += g[s];
                    }
                }
            }
            Op::Sum(x) => {
                let dx = self.acc(grads, *x);
                dx.iter_mut().for_each(|d| *d += g[0]);
            }
            Op::Mean(x) => {
                let dx = self.acc(grads, *x);
                let s = g[0] / T::of(dx.len().max(1) as f64);
                dx.iter_mut().for_each(|d| *d += s);
            }
        }
    }

    fn matmul_adjoint(&self, a: Var, b: Var, g: &[T], grads: &mut [Option<Vec<T>>]) {
        let (m, k) = self.dims(a);
        let n = self.nodes[b.0].value.cols();
        let av = &self.nodes[a.0].value;
        let bv = &self.nodes[b.0].value;
        // dA (m×k) += dC (m×n) · Bᵀ (n×k)
        {
            let da = self.acc(grads, a);
            T::gemm_raw(m, n, k, T::one(), g, n as isize, 1, bv.data(), 1, n as isize, T::one(), da, k as isize, 1);
        }
        // dB (k×n) += Aᵀ (k×m) · dC (m×n)
        let db = self.acc(grads, b);
        T::gemm_raw(k, m, n, T::one(), av.data(), 1, k as isize, g, n as isize, 1, T::one(), db, n as isize, 1);
    }

    #[allow(clippy::too_many_arguments)]
    fn attention_adjoint(
        &self,
        q: Var,
        k: Var,
        v: Var,
        mask: &AttentionMask,
        heads: usize,
        probs: &[T],
        g: &[T],
        grads: &mut [Option<Vec<T>>],
    ) {
        let (t, d) = self.dims(q);
        let dh = d / heads;
        let scale = T::one() / T::of(dh as f64).sqrt();
        let (qs, ks, vs) = (
            self.nodes[q.0].value.data(),
            self.nodes[k.0].value.data(),
            self.nodes[v.0].value.data(),
        );
        let mut dq = vec![T::zero(); t * d];
        let mut dk = vec![T::zero(); t * d];
        let mut dv = vec![T::zero(); t * d];
        let mut dp = Vec::new();
        let mut offset = 0;
        for block in mask.blocks().ranges() {
            let l = block.len();
            let b0 = block.start;
            for h in 0..heads {
                let col = h * dh;
                for (ii, i) in block.clone().enumerate() {
                    let p = &probs[offset + ii * l..offset + (ii + 1) * l];
                    let gi = &g[i * d + col..i * d + col + dh];
                    dp.clear();
                    for (jj, &pj) in p.iter().enumerate() {
                        let j = b0 + jj;
                        let vj = &vs[j * d + col..j * d + col + dh];
                        dp.push(dot(gi, vj));
                        if pj != T::zero() {
                            add_into(&mut dv[j * d + col..j * d + col + dh], gi, pj);
                        }
                    }
                    let s: T = p.iter().zip(&dp).map(|(&a, &b)| a * b).sum();
                    for (jj, &pj) in p.iter().enumerate() {
                        let ds = pj * (dp[jj] - s) * scale;
                        if ds == T::zero() {
                            continue;
                        }
                        let j = b0 + jj;
                        add_into(&mut dq[i * d + col..i * d + col + dh], &ks[j * d + col..j * d + col + dh], ds);
                        add_into(&mut dk[j * d + col..j * d + col + dh], &qs[i * d + col..i * d + col + dh], ds);
                    }
                }
                offset += l * l;
            }
        }
        add_into(self.acc(grads, q), &dq, T::one());
        add_into(self.acc(grads, k), &dk, T::one());
        add_into(self.acc(grads, v), &dv, T::one());
    }
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

fn add_into<T: Real>(dst: &mut [T], src: &[T], s: T) {
    for (d, &v) in dst.iter_mut().zip(src) {
        *d += s * v;
    }
}

pub(crate) fn softmax_into<T: Real>(x: &[T], out: &mut [T]) {
    let max = x.iter().copied().fold(T::neg_infinity(), T::max);
    let mut total = T::zero();
    for (o, &v) in out.iter_mut().zip(x) {
        *o = if v == T::neg_infinity() { T::zero() } else { (v - max).exp() };
        total += *o;
    }
    for o in out.iter_mut() {
        *o /= total;
    }
}
