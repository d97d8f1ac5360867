//! Monte Carlo comparison of the pilot-full (estimation) system and the
//! pilot-removal (prediction) system on shared channel and noise draws.
//!
//! Per iteration, the estimation branch sends two pilot-carrying slots and
//! equalizes each with its interpolated pilot LS estimate. The prediction
//! branch's first slot is identical to the estimation branch's first slot;
//! its data-aided re-estimate feeds the predictor (or is reused unchanged
//! when no model is given), and the prediction equalizes the pilot-free
//! second slot.

use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::{wilson, Interval, Z95};
use super::throughput::{throughput_estimation_with, throughput_prediction_with};
use crate::channel::{noise_variance, TdlProfile};
use crate::cmatrix::nmse;
use crate::error::{Error, Result};
use crate::phy::estimate::{data_aided_ls, interpolate_slot, ls_pilot_estimate, ChannelEstimate, EstimateSource};
use crate::phy::es_n0_db;
use crate::phy::link::SlotLink;
use crate::predictor::PredictorModel;
use crate::rng::{stream, Domain};
use crate::sim::{ChannelConfig, ChannelDraw, SlotBurst, CODE_RATE};

/// Iterations simulated between stopping-rule checks.
const ITER_CHUNK: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub eb_n0_db: f64,
    pub data_mod_order: usize,
    pub code_rate: f64,
    pub channel: ChannelConfig,
    pub max_iterations: usize,
    /// Iterations always run before the block-error stopping rule applies.
    pub min_iterations: usize,
    pub min_block_errors: u64,
    pub ldpc_max_iters: usize,
    /// Equalize with the true CFR in both branches.
    pub genie_csi: bool,
    pub checkpoint: Option<PathBuf>,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            eb_n0_db: 10.0,
            data_mod_order: 16,
            code_rate: CODE_RATE,
            channel: ChannelConfig::default(),
            max_iterations: 100_000,
            min_iterations: 0,
            min_block_errors: 100,
            ldpc_max_iters: crate::phy::ldpc::DEFAULT_MAX_ITERS,
            genie_csi: false,
            checkpoint: None,
            seed: 1,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be at least 1".into()));
        }
        if !(self.code_rate > 0.0 && self.code_rate <= 1.0) {
            return Err(Error::Config(format!("code_rate must lie in (0, 1], got {}", self.code_rate)));
        }
        if (self.code_rate - CODE_RATE).abs() > 1e-12 {
            return Err(Error::Config("only rate-3/4 LDPC codes are available".into()));
        }
        if ![4, 16, 64].contains(&self.data_mod_order) {
            return Err(Error::Config(format!(
                "data_mod_order must be 4, 16 or 64, got {}",
                self.data_mod_order
            )));
        }
        if self.eb_n0_db.is_nan() {
            return Err(Error::Config("eb_n0_db must be a number".into()));
        }
        self.channel.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub label: String,
    pub profile: String,
    pub ue_speed_kmh: f64,
    pub data_mod_order: usize,
    pub predictor: String,
    pub eb_n0_db: f64,
    pub ber_uncoded_est: f64,
    pub ber_uncoded_est_lo: f64,
    pub ber_uncoded_est_hi: f64,
    pub ber_uncoded_pred: f64,
    pub ber_uncoded_pred_lo: f64,
    pub ber_uncoded_pred_hi: f64,
    pub bler_e: f64,
    pub bler_e_lo: f64,
    pub bler_e_hi: f64,
    pub bler_p: f64,
    pub bler_p_lo: f64,
    pub bler_p_hi: f64,
    pub tp_e_bps: f64,
    pub tp_p_bps: f64,
    pub nmse_pred_db: f64,
    pub nmse_persist_db: f64,
    pub nmse_est_db: f64,
    pub iterations_run: usize,
    pub block_errors_e: u64,
    pub block_errors_p: u64,
    #[serde(skip)]
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Tally {
    bits_e: u64,
    bit_err_e: u64,
    bits_p: u64,
    bit_err_p: u64,
    blocks_e: u64,
    block_err_e: u64,
    blocks_p: u64,
    block_err_p: u64,
    nmse_pred: f64,
    nmse_persist: f64,
    nmse_est: f64,
    nmse_est_n: u64,
}

impl Tally {
    fn add(&mut self, o: &Tally) {
        self.bits_e += o.bits_e;
        self.bit_err_e += o.bit_err_e;
        self.bits_p += o.bits_p;
        self.bit_err_p += o.bit_err_p;
        self.blocks_e += o.blocks_e;
        self.block_err_e += o.block_err_e;
        self.blocks_p += o.blocks_p;
        self.block_err_p += o.block_err_p;
        self.nmse_pred += o.nmse_pred;
        self.nmse_persist += o.nmse_persist;
        self.nmse_est += o.nmse_est;
        self.nmse_est_n += o.nmse_est_n;
    }
}

struct Links {
    pilot: SlotLink,
    free: SlotLink,
    profile: TdlProfile,
}

fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

fn iteration(cfg: &ScenarioConfig, links: &Links, model: Option<&PredictorModel>, index: usize) -> Result<Tally> {
    let mut rng = stream(cfg.seed, Domain::MonteCarlo, &[index as u64]);
    let g = &cfg.channel.grid;
    let draw = ChannelDraw::new(&cfg.channel, &links.profile, &mut rng);
    let n0 = noise_variance(es_n0_db(cfg.eb_n0_db, links.pilot.qam.bits_per_symbol(), cfg.code_rate));
    let pilot_layout = g.slot(true);
    let free_layout = g.slot(false);
    let truth = [draw.slot_cfr(0, g.slot_length), draw.slot_cfr(1, g.slot_length)];
    let mut t = Tally::default();

    let mut first = None;
    for (slot, h) in truth.iter().enumerate() {
        let burst = SlotBurst::new(&links.pilot, &pilot_layout, &mut rng)?;
        let y = draw.receive_slot(&burst.x, slot, n0);
        let est = if cfg.genie_csi {
            ChannelEstimate::dense(h.clone(), EstimateSource::Genie)
        } else {
            interpolate_slot(&ls_pilot_estimate(&y, &burst.x, &pilot_layout)?)?
        };
        let rx = links.pilot.receive(&y, &est, &pilot_layout, n0)?;
        t.bits_e += rx.hard_bits.len() as u64;
        t.bit_err_e += rx.bit_errors(&burst.tx) as u64;
        t.blocks_e += 1;
        t.block_err_e += u64::from(!rx.block_ok(&burst.tx));
        t.nmse_est += nmse(&est.entries, h);
        t.nmse_est_n += 1;
        if slot == 0 {
            first = Some((burst, y, rx));
        }
    }

    let (burst0, y0, rx0) = first.expect("two slots simulated");
    let reference = data_aided_ls(&y0, &burst0.x, &pilot_layout, &rx0.hard_bits, &links.pilot.qam)?;
    let predicted = if cfg.genie_csi {
        ChannelEstimate::dense(truth[1].clone(), EstimateSource::Genie)
    } else {
        match model {
            Some(m) => ChannelEstimate::dense(m.predict(&reference.entries)?, EstimateSource::Predicted),
            None => ChannelEstimate::dense(reference.entries.clone(), EstimateSource::Predicted),
        }
    };
    t.nmse_pred = nmse(&predicted.entries, &truth[1]);
    t.nmse_persist = nmse(&reference.entries, &truth[1]);
    let burst1 = SlotBurst::new(&links.free, &free_layout, &mut rng)?;
    let y1 = draw.receive_slot(&burst1.x, 1, n0);
    let rx1 = links.free.receive(&y1, &predicted, &free_layout, n0)?;
    t.bits_p = rx1.hard_bits.len() as u64;
    t.bit_err_p = rx1.bit_errors(&burst1.tx) as u64;
    t.blocks_p = 1;
    t.block_err_p = u64::from(!rx1.block_ok(&burst1.tx));
    Ok(t)
}

/// Runs one operating point. `model` overrides `cfg.checkpoint`; with
/// neither, the prediction branch reuses the slot-0 estimate.
pub fn run_scenario_with(cfg: &ScenarioConfig, model: Option<&PredictorModel>) -> Result<MetricsRecord> {
    cfg.validate()?;
    let loaded;
    let model = match (model, &cfg.checkpoint) {
        (Some(m), _) => Some(m),
        (None, Some(path)) => {
            loaded = PredictorModel::from_checkpoint(&crate::tensor::checkpoint::Checkpoint::load(path)?)?;
            Some(&loaded)
        }
        (None, None) => None,
    };
    let start = Instant::now();
    let g = &cfg.channel.grid;
    let mut pilot = SlotLink::new(cfg.data_mod_order, g.slot(true).data_capacity())?;
    let mut free = SlotLink::new(cfg.data_mod_order, g.slot(false).data_capacity())?;
    pilot.max_iters = cfg.ldpc_max_iters;
    free.max_iters = cfg.ldpc_max_iters;
    let links = Links {
        pilot,
        free,
        profile: cfg.channel.load_profile()?,
    };

    let mut total = Tally::default();
    let mut done = 0;
    'outer: while done < cfg.max_iterations {
        let end = (done + ITER_CHUNK).min(cfg.max_iterations);
        let tallies: Vec<Tally> = (done..end)
            .into_par_iter()
            .map(|i| iteration(cfg, &links, model, i))
            .collect::<Result<_>>()?;
        for t in &tallies {
            total.add(t);
            done += 1;
            if done >= cfg.min_iterations
                && total.block_err_e >= cfg.min_block_errors
                && total.block_err_p >= cfg.min_block_errors
            {
                break 'outer;
            }
        }
    }

    let rate = |k: u64, n: u64| if n == 0 { 0.0 } else { k as f64 / n as f64 };
    let ci = |k: u64, n: u64| wilson(k, n, Z95);
    let (ber_e, ber_p) = (rate(total.bit_err_e, total.bits_e), rate(total.bit_err_p, total.bits_p));
    let (bler_e, bler_p) = (rate(total.block_err_e, total.blocks_e), rate(total.block_err_p, total.blocks_p));
    let (ie, ip): (Interval, Interval) = (ci(total.bit_err_e, total.bits_e), ci(total.bit_err_p, total.bits_p));
    let (be, bp) = (ci(total.block_err_e, total.blocks_e), ci(total.block_err_p, total.blocks_p));
    let m = links.pilot.qam.bits_per_symbol();
    let n = done as f64;
    Ok(MetricsRecord {
        label: String::new(),
        profile: cfg.channel.profile.clone(),
        ue_speed_kmh: cfg.channel.ue_speed_kmh,
        data_mod_order: cfg.data_mod_order,
        predictor: if cfg.genie_csi {
            "genie".into()
        } else if model.is_some() {
            "model".into()
        } else {
            "persistence".into()
        },
        eb_n0_db: cfg.eb_n0_db,
        ber_uncoded_est: ber_e,
        ber_uncoded_est_lo: ie.lo,
        ber_uncoded_est_hi: ie.hi,
        ber_uncoded_pred: ber_p,
        ber_uncoded_pred_lo: ip.lo,
        ber_uncoded_pred_hi: ip.hi,
        bler_e,
        bler_e_lo: be.lo,
        bler_e_hi: be.hi,
        bler_p,
        bler_p_lo: bp.lo,
        bler_p_hi: bp.hi,
        tp_e_bps: throughput_estimation_with(bler_e, m, cfg.code_rate, g, cfg.channel.slot_duration_s),
        tp_p_bps: throughput_prediction_with(bler_e, bler_p, m, cfg.code_rate, g, cfg.channel.slot_duration_s),
        nmse_pred_db: db(total.nmse_pred / n),
        nmse_persist_db: db(total.nmse_persist / n),
        nmse_est_db: db(total.nmse_est / total.nmse_est_n as f64),
        iterations_run: done,
        block_errors_e: total.block_err_e,
        block_errors_p: total.block_err_p,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

pub fn run_scenario(cfg: &ScenarioConfig) -> Result<MetricsRecord> {
    run_scenario_with(cfg, None)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepPoint {
    EbN0(f64),
    UeSpeed(f64),
    ModOrder(usize),
    /// Test profile and the label of the model evaluated on it.
    Channel { test: String, train: String },
}

impl SweepPoint {
    pub fn apply(&self, base: &ScenarioConfig) -> ScenarioConfig {
        let mut cfg = base.clone();
        match self {
            SweepPoint::EbN0(v) => cfg.eb_n0_db = *v,
            SweepPoint::UeSpeed(v) => cfg.channel.ue_speed_kmh = *v,
            SweepPoint::ModOrder(m) => cfg.data_mod_order = *m,
            SweepPoint::Channel { test, .. } => cfg.channel.profile = test.clone(),
        }
        cfg
    }

    pub fn label(&self) -> String {
        match self {
            SweepPoint::EbN0(v) => format!("ebn0={v}"),
            SweepPoint::UeSpeed(v) => format!("speed={v}"),
            SweepPoint::ModOrder(m) => format!("M={m}"),
            SweepPoint::Channel { test, train } => format!("{test} ({train})"),
        }
    }
}

/// One record per point, all sharing `base.seed` so points see the same
/// channel, noise and data streams where their configurations allow.
pub fn sweep<'m>(
    base: &ScenarioConfig,
    points: &[SweepPoint],
    mut model_for: impl FnMut(&SweepPoint) -> Option<&'m PredictorModel>,
) -> Result<Vec<MetricsRecord>> {
    if points.is_empty() {
        return Err(Error::Usage("sweep needs at least one value".into()));
    }
    points
        .iter()
        .map(|p| {
            let mut rec = run_scenario_with(&p.apply(base), model_for(p))?;
            rec.label = p.label();
            Ok(rec)
        })
        .collect()
}
