//! Dense `f64` tensors with reverse-mode differentiation for the fixed
//! predictor topology.
//!
//! Activations are rank-4, channels-last: `[batch, freq, time, channels]`.
//! Layer kernels live in their own modules as forward/backward function
//! pairs; [`Graph`] records a forward pass and replays it backwards.

pub mod activation;
pub mod batchnorm;
pub mod checkpoint;
pub mod conv;
pub mod graph;
pub mod layer;
pub mod loss;
pub mod lstm;
pub mod optim;
pub mod params;
pub mod reshape;
pub mod schedule;
#[allow(clippy::module_inception)]
mod tensor;

pub use graph::{Graph, Mode, NodeId};
pub use layer::{Activation, LayerKind, LayerSpec};
pub use optim::Adam;
pub use params::ParamStore;
pub use schedule::LrSchedule;
pub use tensor::Tensor;

/// Number of samples per deterministic reduction chunk. Parameter gradients
/// are accumulated per chunk and the chunk partials summed in order, so the
/// result is identical for any rayon worker count.
pub(crate) const REDUCE_CHUNK: usize = 16;

/// Sums per-chunk partial vectors in chunk order.
pub(crate) fn ordered_sum(parts: Vec<Vec<f64>>, len: usize) -> Vec<f64> {
    let mut acc = vec![0.0; len];
    for p in parts {
        for (a, v) in acc.iter_mut().zip(p) {
            *a += v;
        }
    }
    acc
}
