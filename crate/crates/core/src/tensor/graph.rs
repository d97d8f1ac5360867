//! Tape for reverse-mode differentiation of the predictor topology.
//!
//! Each call appends a node holding its output value; [`Graph::backward`]
//! walks the tape in reverse, routing gradients to node inputs (summing at
//! fan-out points such as skip connections) and accumulating parameter
//! gradients into the [`ParamStore`] grad slots.

use super::activation::{leaky_relu, leaky_relu_backward};
use super::batchnorm::{batchnorm_backward, batchnorm_forward, BnCache, BnMode, BnState};
use super::conv::{conv2d_backward, conv2d_forward, tconv2d_backward, tconv2d_forward};
use super::lstm::{lstm_backward, lstm_forward, LstmCache, LstmParams};
use super::reshape::{frequency_flatten, frequency_unflatten, time_flip};
use super::{LayerKind, LayerSpec, ParamStore, Tensor};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(usize);

#[derive(Debug)]
enum Op {
    Input,
    Conv2d(LayerSpec),
    TConv2d(LayerSpec),
    Lstm(String, LstmCache),
    BatchNorm(String, BnCache),
    LeakyRelu(f64),
    FrequencyFlatten(usize),
    TimeFlip,
    Add,
}

#[derive(Debug)]
struct Node {
    op: Op,
    inputs: Vec<usize>,
    value: Tensor,
}

#[derive(Debug)]
pub struct Graph {
    nodes: Vec<Node>,
    mode: Mode,
    bn_momentum: f64,
}

/// Gradients with respect to every node of a recorded graph.
#[derive(Debug)]
pub struct NodeGrads(Vec<Option<Tensor>>);

impl NodeGrads {
    pub fn get(&self, id: NodeId) -> Option<&Tensor> {
        self.0[id.0].as_ref()
    }
}

impl Graph {
    pub fn new(mode: Mode) -> Self {
        Graph {
            nodes: Vec::new(),
            mode,
            bn_momentum: 0.1,
        }
    }

    pub fn with_bn_momentum(mut self, momentum: f64) -> Self {
        self.bn_momentum = momentum;
        self
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    fn push(&mut self, op: Op, inputs: Vec<usize>, value: Tensor) -> NodeId {
        self.nodes.push(Node { op, inputs, value });
        NodeId(self.nodes.len() - 1)
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.0].value
    }

    pub fn input(&mut self, value: Tensor) -> NodeId {
        self.push(Op::Input, vec![], value)
    }

    pub fn conv2d(&mut self, params: &ParamStore, spec: &LayerSpec, x: NodeId) -> Result<NodeId> {
        let p = params.get(&spec.name)?;
        let value = match spec.kind {
            LayerKind::Conv2D => conv2d_forward(self.value(x), spec, &p[0], &p[1])?,
            LayerKind::TConv2D => tconv2d_forward(self.value(x), spec, &p[0], &p[1])?,
            k => return Err(Error::Config(format!("layer {} of kind {k:?} is not a convolution", spec.name))),
        };
        let op = if spec.kind == LayerKind::Conv2D {
            Op::Conv2d(spec.clone())
        } else {
            Op::TConv2d(spec.clone())
        };
        let id = self.push(op, vec![x.0], value);
        match spec.activation {
            super::Activation::None => Ok(id),
            super::Activation::LeakyRelu => Ok(self.leaky_relu(id, super::activation::DEFAULT_SLOPE)),
        }
    }

    pub fn lstm(&mut self, params: &ParamStore, layer: &str, x: NodeId) -> Result<NodeId> {
        let p = params.get(layer)?;
        let lp = LstmParams {
            w_x: &p[0],
            w_h: &p[1],
            bias: &p[2],
        };
        let (value, cache) = lstm_forward(self.value(x), &lp)?;
        Ok(self.push(Op::Lstm(layer.to_owned(), cache), vec![x.0], value))
    }

    /// Batch normalization; in train mode this also updates running statistics.
    pub fn batch_norm(&mut self, params: &mut ParamStore, layer: &str, x: NodeId) -> Result<NodeId> {
        let (p, buf) = params.with_buffers(layer)?;
        let [mean, var] = buf else {
            return Err(Error::Config(format!("batch norm {layer} needs running mean and variance")));
        };
        let st = BnState {
            scale: &p[0],
            shift: &p[1],
            running_mean: mean,
            running_var: var,
            momentum: self.bn_momentum,
        };
        let mode = match self.mode {
            Mode::Train => BnMode::Train,
            Mode::Infer => BnMode::Infer,
        };
        let (value, cache) = batchnorm_forward(&self.nodes[x.0].value, st, mode)?;
        Ok(self.push(Op::BatchNorm(layer.to_owned(), cache), vec![x.0], value))
    }

    pub fn leaky_relu(&mut self, x: NodeId, slope: f64) -> NodeId {
        let value = leaky_relu(self.value(x), slope);
        self.push(Op::LeakyRelu(slope), vec![x.0], value)
    }

    pub fn frequency_flatten(&mut self, x: NodeId) -> Result<NodeId> {
        let freq = self.value(x).dims4()?[1];
        let value = frequency_flatten(self.value(x))?;
        Ok(self.push(Op::FrequencyFlatten(freq), vec![x.0], value))
    }

    pub fn time_flip(&mut self, x: NodeId) -> Result<NodeId> {
        let value = time_flip(self.value(x))?;
        Ok(self.push(Op::TimeFlip, vec![x.0], value))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        if self.value(a).shape() != self.value(b).shape() {
            return Err(Error::Config(format!(
                "cannot add shapes {:?} and {:?}",
                self.value(a).shape(),
                self.value(b).shape()
            )));
        }
        let mut value = self.value(a).clone();
        value.add_assign(self.value(b));
        Ok(self.push(Op::Add, vec![a.0, b.0], value))
    }

    /// Backpropagates `seed` (d loss / d output) from `output`.
    pub fn backward(&self, output: NodeId, seed: Tensor, params: &mut ParamStore) -> Result<NodeGrads> {
        if seed.shape() != self.value(output).shape() {
            return Err(Error::Usage(format!(
                "seed gradient shape {:?} does not match output {:?}",
                seed.shape(),
                self.value(output).shape()
            )));
        }
        let mut grads: Vec<Option<Tensor>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[output.0] = Some(seed);
        for idx in (0..=output.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            let input = |k: usize| -> Result<&Tensor> {
                node.inputs
                    .get(k)
                    .map(|&i| &self.nodes[i].value)
                    .ok_or_else(|| Error::Internal("missing saved forward activation".into()))
            };
            let routed: Vec<Tensor> = match &node.op {
                Op::Input => {
                    grads[idx] = Some(g);
                    continue;
                }
                Op::Conv2d(spec) | Op::TConv2d(spec) => {
                    let p = params.get(&spec.name)?;
                    let cg = if spec.kind == LayerKind::Conv2D {
                        conv2d_backward(&g, input(0)?, spec, &p[0])?
                    } else {
                        tconv2d_backward(&g, input(0)?, spec, &p[0])?
                    };
                    let p = params.get_mut(&spec.name)?;
                    accumulate(&mut p[0], &cg.weight);
                    accumulate(&mut p[1], &cg.bias);
                    vec![cg.input]
                }
                Op::Lstm(layer, cache) => {
                    let p = params.get(layer)?;
                    let lp = LstmParams {
                        w_x: &p[0],
                        w_h: &p[1],
                        bias: &p[2],
                    };
                    let lg = lstm_backward(&g, input(0)?, &node.value, cache, &lp)?;
                    let p = params.get_mut(layer)?;
                    accumulate(&mut p[0], &lg.w_x);
                    accumulate(&mut p[1], &lg.w_h);
                    accumulate(&mut p[2], &lg.bias);
                    vec![lg.input]
                }
                Op::BatchNorm(layer, cache) => {
                    let bg = batchnorm_backward(&g, cache, &params.get(layer)?[0])?;
                    let p = params.get_mut(layer)?;
                    accumulate(&mut p[0], &bg.scale);
                    accumulate(&mut p[1], &bg.shift);
                    vec![bg.input]
                }
                Op::LeakyRelu(slope) => vec![leaky_relu_backward(&g, input(0)?, *slope)],
                Op::FrequencyFlatten(freq) => vec![frequency_unflatten(&g, *freq)?],
                Op::TimeFlip => vec![time_flip(&g)?],
                Op::Add => vec![g.clone(), g],
            };
            for (&src, gi) in node.inputs.iter().zip(routed) {
                match &mut grads[src] {
                    Some(acc) => acc.add_assign(&gi),
                    slot @ None => *slot = Some(gi),
                }
            }
        }
        Ok(NodeGrads(grads))
    }
}

fn accumulate(param: &mut Tensor, grad: &Tensor) {
    for (a, b) in param.grad_mut().iter_mut().zip(grad.data()) {
        *a += b;
    }
}
