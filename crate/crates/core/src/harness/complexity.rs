//! Multiplication and parameter counts per layer.
//!
//! * Conv2D: `L_f' L_t' N W_f W_t C` over the output extents.
//! * TConv2D: the same product over the input extents.
//! * LSTM: `L_t U (4N + 4U + 3)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::predictor::model::{table_inputs, PredictorModel};
use crate::tensor::{LayerKind, LayerSpec};

/// A layer with the `(freq, time, channels)` extents of its input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchLayer {
    pub spec: LayerSpec,
    pub input: [usize; 3],
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerCost {
    pub name: String,
    pub kind: LayerKind,
    pub macs: u64,
    pub params: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplexityReport {
    pub layers: Vec<LayerCost>,
    pub total_macs: u64,
    pub trainable_params: u64,
}

pub fn layer_cost(layer: &ArchLayer) -> Result<LayerCost> {
    let s = &layer.spec;
    s.validate()?;
    let [lf, lt, c] = layer.input.map(|v| v as u64);
    let (kf, kt) = (s.kernel.0 as u64, s.kernel.1 as u64);
    let n = s.filters_or_units as u64;
    let macs = match s.kind {
        LayerKind::Conv2D => {
            let (of, ot) = s.output_extent(layer.input[0], layer.input[1])?;
            of as u64 * ot as u64 * n * kf * kt * c
        }
        LayerKind::TConv2D => lf * lt * c * kf * kt * n,
        LayerKind::Lstm => lt * n * (4 * c + 4 * n + 3),
        k => {
            return Err(Error::Config(format!(
                "layer {} of kind {k:?} has no multiplication count",
                s.name
            )))
        }
    };
    Ok(LayerCost {
        name: s.name.clone(),
        kind: s.kind,
        macs,
        params: s.param_count(layer.input[2]) as u64,
    })
}

pub fn complexity_report(layers: &[ArchLayer]) -> Result<ComplexityReport> {
    let layers: Vec<LayerCost> = layers.iter().map(layer_cost).collect::<Result<_>>()?;
    Ok(ComplexityReport {
        total_macs: layers.iter().map(|l| l.macs).sum(),
        trainable_params: layers.iter().map(|l| l.params).sum(),
        layers,
    })
}

pub fn model_architecture(model: &PredictorModel) -> Vec<ArchLayer> {
    model
        .layers
        .iter()
        .zip(table_inputs())
        .map(|(spec, input)| ArchLayer {
            spec: spec.clone(),
            input,
        })
        .collect()
}

pub fn default_architecture() -> Vec<ArchLayer> {
    crate::predictor::model::table_layers()
        .into_iter()
        .zip(table_inputs())
        .map(|(spec, input)| ArchLayer { spec, input })
        .collect()
}

pub fn model_complexity(model: &PredictorModel) -> Result<ComplexityReport> {
    complexity_report(&model_architecture(model))
}
