//! The CNN-LSTM slot-ahead predictor.
//!
//! ```text
//! x (48,14,2) ── Conv2D_1 ─ BN ─ LReLU ── e1 (4,14,8) ── FrequencyFlatten (1,14,32)
//!  │                                  │        ── TimeFlip ── LSTM (1,14,16)
//!  │                                  └─ Conv2D_S2 ─ BN ─ LReLU ── sB
//!  └─ Conv2D_S1 ── sA                  TConv2D_1 ─ BN ─ LReLU (4,14,8) + sB
//!                                      TConv2D_2 (48,14,2) + sA ── Conv2D_2 ── out
//! ```
//!
//! Batch-norm layers are bookkept separately from the seven layers of the
//! architecture table so that the table's parameter count stays exact.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::normalize::{norm_scale, stack, unstack};
use crate::cmatrix::CMatrix;
use crate::error::{Error, Result};
use crate::rng::{stream, Domain};
use crate::tensor::checkpoint::Checkpoint;
use crate::tensor::conv::kernel_shape;
use crate::tensor::{Adam, Graph, LayerKind, LayerSpec, Mode, NodeId, ParamStore, Tensor};

pub const N_SUBCARRIERS: usize = 48;
pub const SLOT_SYMBOLS: usize = 14;
pub const TABLE_PARAMS: usize = 5806;

pub const BN_ENCODER: &str = "BN_1";
pub const BN_SKIP: &str = "BN_S2";
pub const BN_DECODER: &str = "BN_T1";

/// Where the reversed time order introduced before the LSTM is undone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Unflip {
    /// LSTM step `k` feeds output column `k`.
    Never,
    /// The LSTM output sequence is reversed before the decoder.
    BeforeDecoder,
    /// The decoder runs in LSTM step order and the network output is reversed.
    #[default]
    AfterOutput,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Variant {
    pub time_flip: bool,
    pub unflip: Unflip,
    pub batch_norm: bool,
}

impl Default for Variant {
    fn default() -> Self {
        Variant {
            time_flip: true,
            unflip: Unflip::AfterOutput,
            batch_norm: true,
        }
    }
}

/// The seven layers of the architecture table, in table order.
pub fn table_layers() -> Vec<LayerSpec> {
    vec![
        LayerSpec::conv2d("Conv2D_1", 8, (6, 3), (12, 1), [0, 0, 1, 1]),
        LayerSpec::conv2d_same("Conv2D_S1", 2, (1, 3)),
        LayerSpec::conv2d_same("Conv2D_S2", 8, (1, 3)),
        LayerSpec::lstm("LSTM", 16),
        LayerSpec::tconv2d("TConv2D_1", 8, (4, 3), (1, 1), [0, 0, 1, 1]),
        LayerSpec::tconv2d("TConv2D_2", 2, (12, 3), (12, 1), [0, 0, 1, 1]),
        LayerSpec::conv2d_same("Conv2D_2", 2, (3, 3)),
    ]
}

/// Input extents `(freq, time, channels)` seen by each table layer.
pub fn table_inputs() -> Vec<[usize; 3]> {
    vec![
        [48, 14, 2],
        [48, 14, 2],
        [4, 14, 8],
        [1, 14, 32],
        [1, 14, 16],
        [4, 14, 8],
        [48, 14, 2],
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictorModel {
    pub layers: Vec<LayerSpec>,
    pub variant: Variant,
    pub params: ParamStore,
    pub trained: bool,
}

fn glorot<R: Rng>(shape: &[usize], fan_in: f64, fan_out: f64, rng: &mut R) -> Tensor {
    let limit = (6.0 / (fan_in + fan_out)).sqrt();
    Tensor::from_fn(shape, |_| rng.random_range(-limit..limit))
}

impl PredictorModel {
    pub fn new(variant: Variant, seed: u64) -> Self {
        let layers = table_layers();
        let mut params = ParamStore::new(seed);
        for (i, (spec, [_, _, c_in])) in layers.iter().zip(table_inputs()).enumerate() {
            let mut rng = stream(seed, Domain::Init, &[i as u64]);
            let out = spec.filters_or_units;
            match spec.kind {
                LayerKind::Conv2D | LayerKind::TConv2D => {
                    // strided layers only touch 1/stride of the taps on their upsampled side
                    let (kf, kt) = spec.kernel;
                    let taps = (kf * kt) as f64;
                    let stride = (spec.stride.0 * spec.stride.1) as f64;
                    let (fi, fo) = if spec.kind == LayerKind::Conv2D {
                        (taps * c_in as f64, taps * out as f64 / stride)
                    } else {
                        (taps * c_in as f64 / stride, taps * out as f64)
                    };
                    let w = glorot(&kernel_shape(spec, c_in), fi, fo, &mut rng);
                    params.insert(&spec.name, vec![w, Tensor::zeros(&[out])]);
                }
                LayerKind::Lstm => {
                    let w_x = glorot(&[c_in, 4 * out], c_in as f64, 4.0 * out as f64, &mut rng);
                    let w_h = glorot(&[out, 4 * out], out as f64, 4.0 * out as f64, &mut rng);
                    let bias = Tensor::from_fn(&[4 * out], |j| if (out..2 * out).contains(&j) { 1.0 } else { 0.0 });
                    params.insert(&spec.name, vec![w_x, w_h, bias]);
                }
                _ => unreachable!("table layers are convolutions or the LSTM"),
            }
        }
        if variant.batch_norm {
            for name in [BN_ENCODER, BN_SKIP, BN_DECODER] {
                params.insert(name, vec![Tensor::filled(&[8], 1.0), Tensor::zeros(&[8])]);
                params.insert_buffers(name, vec![Tensor::zeros(&[8]), Tensor::filled(&[8], 1.0)]);
            }
        }
        PredictorModel {
            layers,
            variant,
            params,
            trained: false,
        }
    }

    pub fn layer(&self, name: &str) -> &LayerSpec {
        self.layers.iter().find(|l| l.name == name).expect("table layer")
    }

    /// Trainable parameters in the seven table layers.
    pub fn table_param_count(&self) -> usize {
        self.params.count(self.layers.iter().map(|l| l.name.as_str()))
    }

    /// Records the forward pass of a stacked `(B, 48, 14, 2)` batch.
    pub fn record(&mut self, graph: &mut Graph, x: Tensor) -> Result<NodeId> {
        let shape = x.shape();
        if shape.len() != 4 || shape[1..] != [N_SUBCARRIERS, SLOT_SYMBOLS, 2] {
            return Err(Error::Usage(format!("predictor input must be (B, 48, 14, 2), got {shape:?}")));
        }
        let spec = |name: &str| self.layers.iter().find(|l| l.name == name).cloned().expect("table layer");
        let (c1, s1, s2, t1, t2, c2) = (
            spec("Conv2D_1"),
            spec("Conv2D_S1"),
            spec("Conv2D_S2"),
            spec("TConv2D_1"),
            spec("TConv2D_2"),
            spec("Conv2D_2"),
        );
        let bn = self.variant.batch_norm;
        let params = &mut self.params;
        let norm_act = |g: &mut Graph, params: &mut ParamStore, layer: &str, v: NodeId| -> Result<NodeId> {
            let v = if bn { g.batch_norm(params, layer, v)? } else { v };
            Ok(g.leaky_relu(v, crate::tensor::activation::DEFAULT_SLOPE))
        };

        let x = graph.input(x);
        let e1 = graph.conv2d(params, &c1, x)?;
        let e1 = norm_act(graph, params, BN_ENCODER, e1)?;
        let mut seq = graph.frequency_flatten(e1)?;
        if self.variant.time_flip {
            seq = graph.time_flip(seq)?;
        }
        let mut h = graph.lstm(params, "LSTM", seq)?;
        if self.variant.time_flip && self.variant.unflip == Unflip::BeforeDecoder {
            h = graph.time_flip(h)?;
        }
        let skip_a = graph.conv2d(params, &s1, x)?;
        let skip_b = graph.conv2d(params, &s2, e1)?;
        let skip_b = norm_act(graph, params, BN_SKIP, skip_b)?;
        let d1 = graph.conv2d(params, &t1, h)?;
        let d1 = norm_act(graph, params, BN_DECODER, d1)?;
        let d1 = graph.add(d1, skip_b)?;
        let d2 = graph.conv2d(params, &t2, d1)?;
        let d2 = graph.add(d2, skip_a)?;
        let mut out = graph.conv2d(params, &c2, d2)?;
        if self.variant.time_flip && self.variant.unflip == Unflip::AfterOutput {
            out = graph.time_flip(out)?;
        }
        Ok(out)
    }

    /// Inference on normalized stacked inputs; batch norm uses running
    /// statistics and the stored parameters are left untouched.
    pub fn forward_stacked(&self, x: Tensor) -> Result<Tensor> {
        let mut scratch = self.clone();
        let mut g = Graph::new(Mode::Infer);
        let out = scratch.record(&mut g, x)?;
        Ok(g.value(out).clone())
    }

    /// Predicts the next slot's CFR for each estimate.
    pub fn predict_batch(&self, estimates: &[&CMatrix]) -> Result<Vec<CMatrix>> {
        for e in estimates {
            if (e.rows(), e.cols()) != (N_SUBCARRIERS, SLOT_SYMBOLS) {
                return Err(Error::Usage(format!(
                    "estimate must be 48 x 14, got {} x {}",
                    e.rows(),
                    e.cols()
                )));
            }
        }
        let scales: Vec<f64> = estimates.iter().map(|e| norm_scale(e)).collect();
        let out = self.forward_stacked(stack(estimates, &scales))?;
        Ok(scales.iter().enumerate().map(|(b, &s)| unstack(&out, b, s)).collect())
    }

    pub fn predict(&self, estimate: &CMatrix) -> Result<CMatrix> {
        Ok(self.predict_batch(&[estimate])?.remove(0))
    }

    pub fn to_checkpoint(&self, adam: &Adam, epoch: usize) -> Checkpoint {
        Checkpoint {
            architecture: self.layers.clone(),
            variant: serde_json::to_value(&self.variant).expect("variant serializes"),
            params: self.params.clone(),
            adam: adam.clone(),
            epoch,
            trained: self.trained,
        }
    }

    /// Rebuilds a model, refusing checkpoints whose architecture, variant or
    /// tensor shapes differ from what this build assembles.
    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        if ckpt.architecture != table_layers() {
            return Err(Error::ArchitectureMismatch(
                "checkpoint layer stack differs from the built model".into(),
            ));
        }
        let variant: Variant = serde_json::from_value(ckpt.variant.clone())
            .map_err(|e| Error::ArchitectureMismatch(format!("unreadable model variant: {e}")))?;
        let mut model = PredictorModel::new(variant, ckpt.params.rng_seed);
        let shapes = |p: &ParamStore| -> Vec<(String, Vec<Vec<usize>>)> {
            p.iter()
                .chain(p.iter_buffers())
                .map(|(n, ts)| (n.to_owned(), ts.iter().map(|t| t.shape().to_vec()).collect()))
                .collect()
        };
        if shapes(&model.params) != shapes(&ckpt.params) {
            return Err(Error::ArchitectureMismatch(
                "checkpoint tensors do not match the model's parameter shapes".into(),
            ));
        }
        model.params = ckpt.params.clone();
        model.params.zero_grad();
        model.trained = ckpt.trained;
        Ok(model)
    }
}
