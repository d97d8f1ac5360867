//! Synthetic (estimate of slot n, true CFR of slot n+1) pairs produced by the
//! full transmit chain and the slot-0 receive chain.

use rand::Rng;
use rayon::prelude::*;

use super::normalize::{norm_scale, stack};
use crate::channel::{noise_variance, TdlProfile};
use crate::cmatrix::CMatrix;
use crate::error::Result;
use crate::phy::es_n0_db;
use crate::phy::link::SlotLink;
use crate::rng::{stream, Domain};
use crate::sim::{ChannelConfig, ChannelDraw, SlotBurst, CODE_RATE};
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSample {
    /// Data-aided LS estimate of the pilot-carrying slot.
    pub input: CMatrix,
    /// True CFR of the following slot.
    pub target: CMatrix,
    pub norm_scale: f64,
    pub eb_n0_db: f64,
}

/// Everything needed to synthesize samples for one link configuration.
#[derive(Debug, Clone)]
pub struct SampleSource {
    pub channel: ChannelConfig,
    pub profile: TdlProfile,
    pub link: SlotLink,
}

impl SampleSource {
    pub fn new(channel: &ChannelConfig, mod_order: usize) -> Result<Self> {
        channel.validate()?;
        let layout = channel.grid.slot(true);
        Ok(SampleSource {
            channel: channel.clone(),
            profile: channel.load_profile()?,
            link: SlotLink::new(mod_order, layout.data_capacity())?,
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, eb_n0_db: f64, rng: &mut R) -> Result<TrainingSample> {
        let layout = self.channel.grid.slot(true);
        let draw = ChannelDraw::new(&self.channel, &self.profile, rng);
        let burst = SlotBurst::new(&self.link, &layout, rng)?;
        let n0 = noise_variance(es_n0_db(eb_n0_db, self.link.qam.bits_per_symbol(), CODE_RATE));
        let y = draw.receive_slot(&burst.x, 0, n0);
        let rx = self.link.estimate_pilot_slot(&y, &burst.x, &layout, n0)?;
        let input = rx.data_aided.entries;
        Ok(TrainingSample {
            norm_scale: norm_scale(&input),
            target: draw.slot_cfr(1, self.channel.grid.slot_length),
            input,
            eb_n0_db,
        })
    }

    /// `n` samples with Eb/N0 drawn uniformly from `grid`. Sample `i` uses
    /// its own stream keyed by `(seed, domain, epoch, i)`.
    pub fn dataset(&self, grid: &[f64], seed: u64, domain: Domain, epoch: usize, n: usize) -> Result<Vec<TrainingSample>> {
        (0..n)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream(seed, domain, &[epoch as u64, i as u64]);
                let eb = grid[rng.random_range(0..grid.len())];
                self.sample(eb, &mut rng)
            })
            .collect()
    }

    /// `n` samples at one Eb/N0.
    pub fn dataset_at(&self, eb_n0_db: f64, seed: u64, domain: Domain, epoch: usize, n: usize) -> Result<Vec<TrainingSample>> {
        self.dataset(&[eb_n0_db], seed, domain, epoch, n)
    }
}

/// Stacked, normalized input and target tensors for a batch.
pub fn batch_tensors(samples: &[TrainingSample]) -> (Tensor, Tensor) {
    let scales: Vec<f64> = samples.iter().map(|s| s.norm_scale).collect();
    let inputs: Vec<&CMatrix> = samples.iter().map(|s| &s.input).collect();
    let targets: Vec<&CMatrix> = samples.iter().map(|s| &s.target).collect();
    (stack(&inputs, &scales), stack(&targets, &scales))
}
