use std::collections::BTreeMap;

use super::Tensor;
use crate::error::{Error, Result};

/// Named parameter tensors, keyed by layer name.
///
/// `params` are trainable (each carries a gradient slot); `buffers` hold
/// non-trainable state such as batch-norm running statistics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamStore {
    params: BTreeMap<String, Vec<Tensor>>,
    buffers: BTreeMap<String, Vec<Tensor>>,
    pub rng_seed: u64,
}

impl ParamStore {
    pub fn new(rng_seed: u64) -> Self {
        ParamStore {
            rng_seed,
            ..Default::default()
        }
    }

    pub fn insert(&mut self, layer: &str, mut tensors: Vec<Tensor>) {
        for t in &mut tensors {
            t.zero_grad();
        }
        self.params.insert(layer.to_owned(), tensors);
    }

    pub fn insert_buffers(&mut self, layer: &str, tensors: Vec<Tensor>) {
        self.buffers.insert(layer.to_owned(), tensors);
    }

    pub fn get(&self, layer: &str) -> Result<&[Tensor]> {
        self.params
            .get(layer)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::Config(format!("no parameters for layer {layer}")))
    }

    pub fn get_mut(&mut self, layer: &str) -> Result<&mut [Tensor]> {
        self.params
            .get_mut(layer)
            .map(Vec::as_mut_slice)
            .ok_or_else(|| Error::Config(format!("no parameters for layer {layer}")))
    }

    /// Trainable tensors and buffers of one layer, borrowed together.
    pub fn with_buffers(&mut self, layer: &str) -> Result<(&[Tensor], &mut [Tensor])> {
        let p = self
            .params
            .get(layer)
            .ok_or_else(|| Error::Config(format!("no parameters for layer {layer}")))?;
        let b = self
            .buffers
            .get_mut(layer)
            .ok_or_else(|| Error::Config(format!("no buffers for layer {layer}")))?;
        Ok((p, b))
    }

    pub fn buffers(&self, layer: &str) -> Result<&[Tensor]> {
        self.buffers
            .get(layer)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::Config(format!("no buffers for layer {layer}")))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[Tensor])> {
        self.params.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Vec<Tensor>)> {
        self.params.iter_mut().map(|(k, v)| (k.as_str(), v))
    }

    pub fn iter_buffers(&self) -> impl Iterator<Item = (&str, &[Tensor])> {
        self.buffers.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn iter_buffers_mut(&mut self) -> impl Iterator<Item = (&str, &mut Vec<Tensor>)> {
        self.buffers.iter_mut().map(|(k, v)| (k.as_str(), v))
    }

    pub fn zero_grad(&mut self) {
        for t in self.params.values_mut().flatten() {
            t.zero_grad();
        }
    }

    /// Number of trainable scalars in the given layers.
    pub fn count<'a>(&self, layers: impl IntoIterator<Item = &'a str>) -> usize {
        layers
            .into_iter()
            .filter_map(|l| self.params.get(l))
            .flatten()
            .map(Tensor::numel)
            .sum()
    }

    pub fn total_count(&self) -> usize {
        self.params.values().flatten().map(Tensor::numel).sum()
    }
}
