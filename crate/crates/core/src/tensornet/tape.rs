//! Reverse-mode automatic differentiation over vector-valued nodes.
//!
//! Every node holds a flat vector; scalars are vectors of length one.
//! Parameters enter the graph by reference to a [`ParamStore`] entry, so
//! [`Tape::backward`] can return gradients keyed by parameter.

use rand::Rng;

use super::params::{Grads, ParamId, ParamStore};
use crate::error::{Error, Result};
use crate::scalar::{sigmoid, Scalar};

/// Lower and upper clamp applied to probabilities inside [`Tape::bce`].
pub const PROB_CLAMP: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Debug)]
enum Op<T> {
    Input,
    Param(ParamId),
    Row(ParamId, usize),
    MatVec(ParamId, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, T),
    Mask(Var, Vec<T>),
    Sigmoid(Var),
    Tanh(Var),
    Concat(Vec<Var>),
    Slice(Var, usize),
    Dot(Var, Var),
    Sum(Var),
    Softmax(Var),
    Bce(Var, T),
    CrossEntropy(Var, usize),
}

#[derive(Debug)]
struct Node<T> {
    value: Vec<T>,
    op: Op<T>,
}

pub struct Tape<'s, T: Scalar> {
    store: &'s ParamStore<T>,
    nodes: Vec<Node<T>>,
}

fn shape_err(op: &str, a: usize, b: usize) -> Error {
    Error::Shape(format!("{op}: lengths {a} and {b} differ"))
}

impl<'s, T: Scalar> Tape<'s, T> {
    pub fn new(store: &'s ParamStore<T>) -> Self {
        Tape {
            store,
            nodes: Vec::new(),
        }
    }

    pub fn store(&self) -> &'s ParamStore<T> {
        self.store
    }

    fn push(&mut self, value: Vec<T>, op: Op<T>) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &[T] {
        &self.nodes[v.0].value
    }

    /// First element of a node, for scalar nodes.
    pub fn scalar(&self, v: Var) -> T {
        self.nodes[v.0].value[0]
    }

    pub fn len(&self, v: Var) -> usize {
        self.nodes[v.0].value.len()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// A constant; receives no gradient.
    pub fn input(&mut self, value: Vec<T>) -> Var {
        self.push(value, Op::Input)
    }

    /// A whole parameter, flattened.
    pub fn param(&mut self, id: ParamId) -> Var {
        let value = self.store.value(id).data().to_vec();
        self.push(value, Op::Param(id))
    }

    /// Row `r` of a matrix parameter.
    pub fn row(&mut self, id: ParamId, r: usize) -> Result<Var> {
        let t = self.store.value(id);
        if r >= t.rows() {
            return Err(Error::Shape(format!(
                "row {r} of `{}` with {} rows",
                self.store.name(id),
                t.rows()
            )));
        }
        let value = t.row(r).to_vec();
        Ok(self.push(value, Op::Row(id, r)))
    }

    /// `W x` for a matrix parameter `W`.
    pub fn matvec(&mut self, id: ParamId, x: Var) -> Result<Var> {
        let w = self.store.value(id);
        let (rows, cols) = (w.rows(), w.cols());
        let xv = &self.nodes[x.0].value;
        if xv.len() != cols {
            return Err(Error::Shape(format!(
                "`{}` has {cols} columns, input has {}",
                self.store.name(id),
                xv.len()
            )));
        }
        let wd = w.data();
        let value = (0..rows)
            .map(|i| {
                wd[i * cols..(i + 1) * cols]
                    .iter()
                    .zip(xv)
                    .fold(T::zero(), |acc, (&a, &b)| acc + a * b)
            })
            .collect();
        Ok(self.push(value, Op::MatVec(id, x)))
    }

    fn zip_with(&mut self, op: &str, a: Var, b: Var, f: impl Fn(T, T) -> T, node: Op<T>) -> Result<Var> {
        let (av, bv) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        if av.len() != bv.len() {
            return Err(shape_err(op, av.len(), bv.len()));
        }
        let value = av.iter().zip(bv).map(|(&x, &y)| f(x, y)).collect();
        Ok(self.push(value, node))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip_with("add", a, b, |x, y| x + y, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip_with("sub", a, b, |x, y| x - y, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip_with("mul", a, b, |x, y| x * y, Op::Mul(a, b))
    }

    pub fn scale(&mut self, a: Var, c: T) -> Var {
        let value = self.nodes[a.0].value.iter().map(|&x| x * c).collect();
        self.push(value, Op::Scale(a, c))
    }

    /// Elementwise product with a constant vector.
    pub fn mask(&mut self, a: Var, mask: Vec<T>) -> Result<Var> {
        let av = &self.nodes[a.0].value;
        if av.len() != mask.len() {
            return Err(shape_err("mask", av.len(), mask.len()));
        }
        let value = av.iter().zip(&mask).map(|(&x, &m)| x * m).collect();
        Ok(self.push(value, Op::Mask(a, mask)))
    }

    /// Inverted dropout on `a` when `rate > 0`; identity otherwise.
    pub fn dropout<R: Rng>(&mut self, a: Var, rate: f64, rng: &mut R) -> Result<Var> {
        if rate == 0.0 {
            return Ok(a);
        }
        let mask = super::dropout::dropout_mask(self.len(a), rate, rng)?;
        self.mask(a, mask)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let value = self.nodes[a.0].value.iter().map(|&x| sigmoid(x)).collect();
        self.push(value, Op::Sigmoid(a))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let value = self.nodes[a.0].value.iter().map(|&x| x.tanh()).collect();
        self.push(value, Op::Tanh(a))
    }

    pub fn concat(&mut self, parts: &[Var]) -> Var {
        let value = parts
            .iter()
            .flat_map(|p| self.nodes[p.0].value.iter().copied())
            .collect();
        self.push(value, Op::Concat(parts.to_vec()))
    }

    pub fn slice(&mut self, a: Var, start: usize, len: usize) -> Result<Var> {
        let av = &self.nodes[a.0].value;
        if start + len > av.len() {
            return Err(Error::Shape(format!(
                "slice {start}..{} of length {}",
                start + len,
                av.len()
            )));
        }
        let value = av[start..start + len].to_vec();
        Ok(self.push(value, Op::Slice(a, start)))
    }

    pub fn dot(&mut self, a: Var, b: Var) -> Result<Var> {
        let (av, bv) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        if av.len() != bv.len() {
            return Err(shape_err("dot", av.len(), bv.len()));
        }
        let value = av.iter().zip(bv).fold(T::zero(), |acc, (&x, &y)| acc + x * y);
        Ok(self.push(vec![value], Op::Dot(a, b)))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let value = self.nodes[a.0].value.iter().copied().sum();
        self.push(vec![value], Op::Sum(a))
    }

    /// Mean of scalar nodes.
    pub fn mean(&mut self, parts: &[Var]) -> Var {
        let stacked = self.concat(parts);
        let total = self.sum(stacked);
        self.scale(total, T::one() / T::lit(parts.len().max(1) as f64))
    }

    /// Softmax with max subtraction.
    pub fn softmax(&mut self, a: Var) -> Var {
        let value = softmax_values(&self.nodes[a.0].value);
        self.push(value, Op::Softmax(a))
    }

    /// Binary cross-entropy of a scalar probability against `target`, with the
    /// probability clamped to `[PROB_CLAMP, 1 - PROB_CLAMP]`.
    pub fn bce(&mut self, p: Var, target: T) -> Var {
        let pc = clamp_prob(self.scalar(p));
        let value = -(target * pc.ln() + (T::one() - target) * (T::one() - pc).ln());
        self.push(vec![value], Op::Bce(p, target))
    }

    /// `-log softmax(logits)[target]`.
    pub fn cross_entropy(&mut self, logits: Var, target: usize) -> Result<Var> {
        let lv = &self.nodes[logits.0].value;
        if target >= lv.len() {
            return Err(Error::Shape(format!("target {target} of {} classes", lv.len())));
        }
        let max = lv.iter().copied().fold(T::neg_infinity(), T::max);
        let lse = lv.iter().map(|&x| (x - max).exp()).sum::<T>().ln() + max;
        let value = lse - lv[target];
        Ok(self.push(vec![value], Op::CrossEntropy(logits, target)))
    }

    /// Gradients of the scalar node `loss` with respect to every trainable
    /// parameter. Non-trainable parameters receive nothing.
    pub fn backward(&self, loss: Var) -> Grads<T> {
        let mut grads = Grads::zeros(self.store);
        let mut adj: Vec<Option<Vec<T>>> = (0..=loss.0).map(|_| None).collect();
        adj[loss.0] = Some(vec![T::one(); self.nodes[loss.0].value.len()]);

        fn acc<T: Scalar>(adj: &mut [Option<Vec<T>>], v: Var, len: usize) -> &mut Vec<T> {
            adj[v.0].get_or_insert_with(|| vec![T::zero(); len])
        }

        for i in (0..=loss.0).rev() {
            let Some(g) = adj[i].take() else { continue };
            let node = &self.nodes[i];
            match &node.op {
                Op::Input => {}
                Op::Param(id) => grads.add(*id, |dst| {
                    for (d, &x) in dst.iter_mut().zip(&g) {
                        *d = *d + x;
                    }
                }),
                Op::Row(id, r) => grads.add(*id, |dst| {
                    let cols = g.len();
                    for (d, &x) in dst[r * cols..(r + 1) * cols].iter_mut().zip(&g) {
                        *d = *d + x;
                    }
                }),
                Op::MatVec(id, x) => {
                    let w = self.store.value(*id);
                    let cols = w.cols();
                    let xv = &self.nodes[x.0].value;
                    grads.add(*id, |dst| {
                        for (r, &gr) in g.iter().enumerate() {
                            for (d, &xc) in dst[r * cols..(r + 1) * cols].iter_mut().zip(xv) {
                                *d = *d + gr * xc;
                            }
                        }
                    });
                    let wd = w.data();
                    let dx = acc(&mut adj, *x, cols);
                    for (r, &gr) in g.iter().enumerate() {
                        for (d, &wv) in dx.iter_mut().zip(&wd[r * cols..(r + 1) * cols]) {
                            *d = *d + wv * gr;
                        }
                    }
                }
                Op::Add(a, b) => {
                    for v in [a, b] {
                        let d = acc(&mut adj, *v, g.len());
                        for (d, &x) in d.iter_mut().zip(&g) {
                            *d = *d + x;
                        }
                    }
                }
                Op::Sub(a, b) => {
                    let da = acc(&mut adj, *a, g.len());
                    for (d, &x) in da.iter_mut().zip(&g) {
                        *d = *d + x;
                    }
                    let db = acc(&mut adj, *b, g.len());
                    for (d, &x) in db.iter_mut().zip(&g) {
                        *d = *d - x;
                    }
                }
                Op::Mul(a, b) => {
                    let (av, bv) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
                    let ga: Vec<T> = g.iter().zip(bv).map(|(&x, &y)| x * y).collect();
                    let gb: Vec<T> = g.iter().zip(av).map(|(&x, &y)| x * y).collect();
                    for (v, gv) in [(a, ga), (b, gb)] {
                        let d = acc(&mut adj, *v, gv.len());
                        for (d, x) in d.iter_mut().zip(gv) {
                            *d = *d + x;
                        }
                    }
                }
                Op::Scale(a, c) => {
                    let d = acc(&mut adj, *a, g.len());
                    for (d, &x) in d.iter_mut().zip(&g) {
                        *d = *d + x * *c;
                    }
                }
                Op::Mask(a, m) => {
                    let d = acc(&mut adj, *a, g.len());
                    for ((d, &x), &mv) in d.iter_mut().zip(&g).zip(m) {
                        *d = *d + x * mv;
                    }
                }
                Op::Sigmoid(a) => {
                    let d = acc(&mut adj, *a, g.len());
                    for ((d, &x), &y) in d.iter_mut().zip(&g).zip(&node.value) {
                        *d = *d + x * y * (T::one() - y);
                    }
                }
                Op::Tanh(a) => {
                    let d = acc(&mut adj, *a, g.len());
                    for ((d, &x), &y) in d.iter_mut().zip(&g).zip(&node.value) {
                        *d = *d + x * (T::one() - y * y);
                    }
                }
                Op::Concat(parts) => {
                    let mut offset = 0;
                    for p in parts {
                        let len = self.nodes[p.0].value.len();
                        let d = acc(&mut adj, *p, len);
                        for (d, &x) in d.iter_mut().zip(&g[offset..offset + len]) {
                            *d = *d + x;
                        }
                        offset += len;
                    }
                }
                Op::Slice(a, start) => {
                    let len = self.nodes[a.0].value.len();
                    let d = acc(&mut adj, *a, len);
                    for (d, &x) in d[*start..*start + g.len()].iter_mut().zip(&g) {
                        *d = *d + x;
                    }
                }
                Op::Dot(a, b) => {
                    let (av, bv) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
                    let ga: Vec<T> = bv.iter().map(|&y| y * g[0]).collect();
                    let gb: Vec<T> = av.iter().map(|&y| y * g[0]).collect();
                    for (v, gv) in [(a, ga), (b, gb)] {
                        let d = acc(&mut adj, *v, gv.len());
                        for (d, x) in d.iter_mut().zip(gv) {
                            *d = *d + x;
                        }
                    }
                }
                Op::Sum(a) => {
                    let len = self.nodes[a.0].value.len();
                    let d = acc(&mut adj, *a, len);
                    for d in d.iter_mut() {
                        *d = *d + g[0];
                    }
                }
                Op::Softmax(a) => {
                    let y = &node.value;
                    let gy: T = g.iter().zip(y).map(|(&x, &p)| x * p).sum();
                    let d = acc(&mut adj, *a, y.len());
                    for ((d, &x), &p) in d.iter_mut().zip(&g).zip(y) {
                        *d = *d + p * (x - gy);
                    }
                }
                Op::Bce(p, target) => {
                    let pc = clamp_prob(self.nodes[p.0].value[0]);
                    let dp = (pc - *target) / (pc * (T::one() - pc));
                    let d = acc(&mut adj, *p, 1);
                    d[0] = d[0] + g[0] * dp;
                }
                Op::CrossEntropy(logits, target) => {
                    let probs = softmax_values(&self.nodes[logits.0].value);
                    let d = acc(&mut adj, *logits, probs.len());
                    for (k, (d, p)) in d.iter_mut().zip(probs).enumerate() {
                        let onehot = if k == *target { T::one() } else { T::zero() };
                        *d = *d + g[0] * (p - onehot);
                    }
                }
            }
        }
        grads
    }
}

fn clamp_prob<T: Scalar>(p: T) -> T {
    let lo = T::lit(PROB_CLAMP);
    p.max(lo).min(T::one() - lo)
}

pub(crate) fn softmax_values<T: Scalar>(x: &[T]) -> Vec<T> {
    let max = x.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = x.iter().map(|&v| (v - max).exp()).collect();
    let total: T = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / total).collect()
}
