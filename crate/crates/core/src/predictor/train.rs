use serde::{Deserialize, Serialize};

use super::dataset::{batch_tensors, SampleSource, TrainingSample};
use super::model::{PredictorModel, Variant};
use crate::cmatrix::nmse;
use crate::error::{Error, Result};
use crate::rng::Domain;
use crate::sim::ChannelConfig;
use crate::tensor::loss::mse_loss;
use crate::tensor::{Adam, Graph, LrSchedule, Mode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub validation_size: usize,
    pub eb_n0_grid_db: Vec<f64>,
    pub lr_schedule: LrSchedule,
    pub l2: f64,
    pub early_stop_patience_cycles: usize,
    pub max_epochs: usize,
    pub data_mod_order: usize,
    pub bn_momentum: f64,
    /// Reuse the epoch-0 batches for every epoch.
    pub freeze_dataset: bool,
    pub seed: u64,
    pub channel: ChannelConfig,
    pub variant: Variant,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 1024,
            validation_size: 1024,
            eb_n0_grid_db: (0..=10).map(f64::from).collect(),
            lr_schedule: LrSchedule::default(),
            l2: 1e-6,
            early_stop_patience_cycles: 3,
            max_epochs: 1000,
            data_mod_order: 16,
            bn_momentum: 0.1,
            freeze_dataset: false,
            seed: 1,
            channel: ChannelConfig::default(),
            variant: Variant::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.validation_size == 0 {
            return Err(Error::Config("batch_size and validation_size must be positive".into()));
        }
        if self.eb_n0_grid_db.is_empty() || self.eb_n0_grid_db.iter().any(|v| v.is_nan()) {
            return Err(Error::Config("eb_n0_grid_db must list at least one value".into()));
        }
        if !(self.l2 >= 0.0) || !self.l2.is_finite() {
            return Err(Error::Config("l2 must be a non-negative number".into()));
        }
        if !(0.0..=1.0).contains(&self.bn_momentum) {
            return Err(Error::Config("bn_momentum must lie in [0, 1]".into()));
        }
        if ![4, 16, 64].contains(&self.data_mod_order) {
            return Err(Error::Config(format!(
                "data_mod_order must be 4, 16 or 64, got {}",
                self.data_mod_order
            )));
        }
        self.lr_schedule.validate()?;
        self.channel.validate()
    }

    pub fn patience_epochs(&self) -> usize {
        self.early_stop_patience_cycles * self.lr_schedule.annealing_period_epochs
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
    pub val_nmse: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters at the best validation epoch.
    pub model: PredictorModel,
    pub adam: Adam,
    pub history: Vec<EpochLog>,
    pub best_epoch: usize,
    pub best_val_nmse: f64,
    pub stopped_early: bool,
}

/// Mean per-sample loss of `model` in inference mode.
pub fn validation_loss(model: &PredictorModel, samples: &[TrainingSample]) -> Result<f64> {
    let (x, y) = batch_tensors(samples);
    let out = model.forward_stacked(x)?;
    Ok(mse_loss(&out, &y)?.0)
}

/// One Adam step per epoch on a freshly synthesized batch; early stopping
/// on a second fresh batch evaluated in inference mode.
pub fn train(
    mut model: PredictorModel,
    mut adam: Adam,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochLog),
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let source = SampleSource::new(&cfg.channel, cfg.data_mod_order)?;
    let batch = |domain: Domain, epoch: usize, n: usize| source.dataset(&cfg.eb_n0_grid_db, cfg.seed, domain, epoch, n);
    let frozen = if cfg.freeze_dataset {
        Some((
            batch(Domain::TrainBatch, 0, cfg.batch_size)?,
            batch(Domain::ValidationBatch, 0, cfg.validation_size)?,
        ))
    } else {
        None
    };

    let mut history = Vec::new();
    let mut best = (model.clone(), usize::MAX, f64::INFINITY);
    let mut last_finite = f64::NAN;
    let mut since_best = 0;
    let mut stopped_early = false;
    for epoch in 0..cfg.max_epochs {
        let lr = cfg.lr_schedule.lr_at_epoch(epoch);
        let fresh;
        let (train_set, val_set) = match &frozen {
            Some((t, v)) => (t, v),
            None => {
                fresh = (
                    batch(Domain::TrainBatch, epoch, cfg.batch_size)?,
                    batch(Domain::ValidationBatch, epoch, cfg.validation_size)?,
                );
                (&fresh.0, &fresh.1)
            }
        };
        let (x, y) = batch_tensors(train_set);
        let mut graph = Graph::new(Mode::Train).with_bn_momentum(cfg.bn_momentum);
        let out = model.record(&mut graph, x)?;
        let (loss, grad) = mse_loss(graph.value(out), &y)?;
        if !loss.is_finite() {
            return Err(Error::NonFinite {
                epoch,
                lr,
                last_finite_loss: last_finite,
            });
        }
        last_finite = loss;
        model.params.zero_grad();
        graph.backward(out, grad, &mut model.params)?;
        drop(graph);
        adam.step(&mut model.params, lr, cfg.l2);

        let val = validation_loss(&model, val_set)?;
        if !val.is_finite() {
            return Err(Error::NonFinite {
                epoch,
                lr,
                last_finite_loss: last_finite,
            });
        }
        let log = EpochLog {
            epoch,
            lr,
            train_loss: loss,
            val_nmse: val,
        };
        on_epoch(&log);
        history.push(log);
        if val < best.2 {
            best = (model.clone(), epoch, val);
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience_epochs() {
                stopped_early = true;
                break;
            }
        }
    }
    let (mut best_model, best_epoch, best_val_nmse) = best;
    best_model.trained = true;
    Ok(TrainOutcome {
        model: best_model,
        adam,
        history,
        best_epoch,
        best_val_nmse,
        stopped_early,
    })
}

/// Mean per-sample NMSE (against the true next-slot CFR) of the model's
/// predictions and of the persistence baseline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictionQuality {
    pub nmse_pred: f64,
    pub nmse_persist: f64,
}

impl PredictionQuality {
    pub fn gain_db(&self) -> f64 {
        10.0 * (self.nmse_persist / self.nmse_pred).log10()
    }
}

pub fn prediction_quality(model: &PredictorModel, samples: &[TrainingSample]) -> Result<PredictionQuality> {
    let mut pred = 0.0;
    let mut persist = 0.0;
    for chunk in samples.chunks(256) {
        let inputs: Vec<_> = chunk.iter().map(|s| &s.input).collect();
        for (p, s) in model.predict_batch(&inputs)?.iter().zip(chunk) {
            pred += nmse(p, &s.target);
            persist += nmse(&s.input, &s.target);
        }
    }
    let n = samples.len() as f64;
    Ok(PredictionQuality {
        nmse_pred: pred / n,
        nmse_persist: persist / n,
    })
}
