use std::collections::HashMap;

use rand::Rng;

use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(pub(crate) usize);

#[derive(Clone, Debug, PartialEq)]
pub struct Param<T> {
    pub name: String,
    pub value: Tensor<T>,
    pub trainable: bool,
    /// RMSProp running average of squared gradients.
    pub accum: Tensor<T>,
}

/// Named parameters in insertion order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamStore<T> {
    params: Vec<Param<T>>,
    index: HashMap<String, ParamId>,
}

impl<T: Scalar> ParamStore<T> {
    pub fn new() -> Self {
        ParamStore {
            params: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn add(&mut self, name: &str, value: Tensor<T>, trainable: bool) -> Result<ParamId> {
        if self.index.contains_key(name) {
            return Err(Error::InvalidArgument(format!("duplicate parameter `{name}`")));
        }
        let id = ParamId(self.params.len());
        let accum = Tensor::zeros(value.shape().to_vec());
        self.params.push(Param {
            name: name.to_string(),
            value,
            trainable,
            accum,
        });
        self.index.insert(name.to_string(), id);
        Ok(id)
    }

    pub(crate) fn push_raw(&mut self, p: Param<T>) -> Result<ParamId> {
        if p.accum.shape() != p.value.shape() {
            return Err(Error::Shape(format!("accumulator shape of `{}`", p.name)));
        }
        let id = self.add(&p.name, p.value, p.trainable)?;
        self.params[id.0].accum = p.accum;
        Ok(id)
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.index.get(name).copied()
    }

    pub fn require(&self, name: &str) -> Result<ParamId> {
        self.id(name)
            .ok_or_else(|| Error::Checkpoint(format!("missing parameter `{name}`")))
    }

    pub fn get(&self, id: ParamId) -> &Param<T> {
        &self.params[id.0]
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.params[id.0].name
    }

    pub fn value(&self, id: ParamId) -> &Tensor<T> {
        &self.params[id.0].value
    }

    pub fn value_mut(&mut self, id: ParamId) -> &mut Tensor<T> {
        &mut self.params[id.0].value
    }

    pub fn is_trainable(&self, id: ParamId) -> bool {
        self.params[id.0].trainable
    }

    pub fn set_trainable(&mut self, id: ParamId, trainable: bool) {
        self.params[id.0].trainable = trainable;
    }

    /// Sets the flag on every parameter whose name starts with `prefix`.
    pub fn set_trainable_prefix(&mut self, prefix: &str, trainable: bool) {
        for p in self.params.iter_mut().filter(|p| p.name.starts_with(prefix)) {
            p.trainable = trainable;
        }
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.params.len()).map(ParamId)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Param<T>> {
        self.params.iter()
    }

    pub fn reset_accumulators(&mut self) {
        for p in &mut self.params {
            p.accum = Tensor::zeros(p.value.shape().to_vec());
        }
    }

    /// Copies the values (not flags or accumulators) of every parameter in
    /// `other` with a matching name and shape.
    pub fn copy_values_from(&mut self, other: &ParamStore<T>) -> Result<()> {
        for p in &other.params {
            if let Some(id) = self.id(&p.name) {
                let dst = &mut self.params[id.0].value;
                if dst.shape() != p.value.shape() {
                    return Err(Error::Checkpoint(format!(
                        "`{}` has shape {:?}, expected {:?}",
                        p.name,
                        p.value.shape(),
                        dst.shape()
                    )));
                }
                *dst = p.value.clone();
            }
        }
        Ok(())
    }
}

/// Gradient buffers aligned with a [`ParamStore`]; `None` for frozen
/// parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Grads<T> {
    slots: Vec<Option<Tensor<T>>>,
}

impl<T: Scalar> Grads<T> {
    pub fn zeros(store: &ParamStore<T>) -> Self {
        Grads {
            slots: store
                .params
                .iter()
                .map(|p| p.trainable.then(|| Tensor::zeros(p.value.shape().to_vec())))
                .collect(),
        }
    }

    pub fn get(&self, id: ParamId) -> Option<&Tensor<T>> {
        self.slots.get(id.0).and_then(|s| s.as_ref())
    }

    pub(crate) fn add(&mut self, id: ParamId, f: impl FnOnce(&mut [T])) {
        if let Some(Some(t)) = self.slots.get_mut(id.0) {
            f(t.data_mut());
        }
    }

    /// `self += scale * other`, slot by slot.
    pub fn accumulate(&mut self, other: &Grads<T>, scale: T) {
        for (dst, src) in self.slots.iter_mut().zip(&other.slots) {
            if let (Some(d), Some(s)) = (dst, src) {
                for (a, &b) in d.data_mut().iter_mut().zip(s.data()) {
                    *a = *a + scale * b;
                }
            }
        }
    }

    pub fn scale(&mut self, c: T) {
        for t in self.slots.iter_mut().flatten() {
            for v in t.data_mut() {
                *v = *v * c;
            }
        }
    }

    pub fn global_norm(&self) -> T {
        self.slots
            .iter()
            .flatten()
            .map(|t| t.sq_norm())
            .sum::<T>()
            .sqrt()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &Tensor<T>)> {
        self.slots
            .iter()
            .enumerate()
            .filter_map(|(i, s)| s.as_ref().map(|t| (ParamId(i), t)))
    }
}

/// Rescales `grads` so their global L2 norm is at most `max_norm`. Returns
/// the norm before clipping.
pub fn clip_grad_norm<T: Scalar>(grads: &mut Grads<T>, max_norm: T) -> T {
    let norm = grads.global_norm();
    if norm > max_norm {
        grads.scale(max_norm / norm);
    }
    norm
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RmsProp {
    pub lr: f64,
    pub decay: f64,
    pub eps: f64,
}

impl Default for RmsProp {
    fn default() -> Self {
        RmsProp {
            lr: 0.01,
            decay: 0.95,
            eps: 1e-8,
        }
    }
}

pub fn rmsprop_update<T: Scalar>(store: &mut ParamStore<T>, grads: &Grads<T>, opt: RmsProp) {
    let (lr, decay, eps) = (T::lit(opt.lr), T::lit(opt.decay), T::lit(opt.eps));
    for (p, g) in store.params.iter_mut().zip(&grads.slots) {
        let Some(g) = g else { continue };
        if !p.trainable {
            continue;
        }
        let values = p.value.data_mut();
        let accum = p.accum.data_mut();
        for ((v, a), &gi) in values.iter_mut().zip(accum.iter_mut()).zip(g.data()) {
            *a = decay * *a + (T::one() - decay) * gi * gi;
            *v = *v - lr * gi / (*a + eps).sqrt();
        }
    }
}

/// Fills every trainable parameter i.i.d. from `U(lo, hi)`.
pub fn init_uniform<T: Scalar, R: Rng>(store: &mut ParamStore<T>, lo: f64, hi: f64, rng: &mut R) -> Result<()> {
    if !(lo < hi) {
        return Err(Error::InvalidArgument(format!("init range [{lo}, {hi}] is empty")));
    }
    for p in store.params.iter_mut().filter(|p| p.trainable) {
        for v in p.value.data_mut() {
            *v = T::lit(rng.gen_range(lo..hi));
        }
    }
    Ok(())
}

/// [`init_uniform`] restricted to trainable parameters whose name starts
/// with `prefix`.
pub fn init_uniform_prefix<T: Scalar, R: Rng>(
    store: &mut ParamStore<T>,
    prefix: &str,
    lo: f64,
    hi: f64,
    rng: &mut R,
) -> Result<()> {
    if !(lo < hi) {
        return Err(Error::InvalidArgument(format!("init range [{lo}, {hi}] is empty")));
    }
    for p in store.params.iter_mut().filter(|p| p.trainable && p.name.starts_with(prefix)) {
        for v in p.value.data_mut() {
            *v = T::lit(rng.gen_range(lo..hi));
        }
    }
    Ok(())
}
