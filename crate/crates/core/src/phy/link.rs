//! Per-slot transmit and receive chains: one codeword fills one slot.

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;

use super::estimate::{data_aided_ls, equalize, interpolate_slot, ls_pilot_estimate, ChannelEstimate, Equalized};
use super::grid::SlotLayout;
use super::interleave::Interleaver;
use super::ldpc::{self, Decoded, LdpcCode};
use super::qam::QamConstellation;
use crate::cmatrix::CMatrix;
use crate::error::Result;

pub const INTERLEAVER_SEED: u64 = 0x1eaf;

/// Coding and modulation for slots with a fixed number of data REs.
#[derive(Debug, Clone)]
pub struct SlotLink {
    pub code: Arc<LdpcCode>,
    pub interleaver: Interleaver,
    pub qam: QamConstellation,
    pub max_iters: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlotTx {
    pub info: Vec<u8>,
    /// Interleaved coded bits, in mapping order.
    pub coded: Vec<u8>,
    pub symbols: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlotRx {
    /// Hard decisions on the coded bits before decoding, in mapping order.
    pub hard_bits: Vec<u8>,
    pub equalized: Equalized,
    pub decoded: Decoded,
}

impl SlotRx {
    pub fn bit_errors(&self, tx: &SlotTx) -> usize {
        count_diff(&self.hard_bits, &tx.coded)
    }

    pub fn info_errors(&self, tx: &SlotTx) -> usize {
        count_diff(&self.decoded.info_bits, &tx.info)
    }

    /// A block is good when decoding converged to the sent information.
    pub fn block_ok(&self, tx: &SlotTx) -> bool {
        self.decoded.parity_ok && self.info_errors(tx) == 0
    }
}

fn count_diff(a: &[u8], b: &[u8]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

impl SlotLink {
    pub fn new(order: usize, data_res: usize) -> Result<Self> {
        let qam = QamConstellation::new(order)?;
        let n = data_res * qam.bits_per_symbol();
        Ok(SlotLink {
            code: ldpc::code_for_length(n)?,
            interleaver: Interleaver::new(n, INTERLEAVER_SEED),
            qam,
            max_iters: ldpc::DEFAULT_MAX_ITERS,
        })
    }

    pub fn transmit_info(&self, info: Vec<u8>) -> Result<SlotTx> {
        let coded = self.interleaver.interleave(&self.code.encode(&info)?)?;
        let symbols = self.qam.map(&coded)?;
        Ok(SlotTx { info, coded, symbols })
    }

    pub fn transmit<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<SlotTx> {
        let info = (0..self.code.k()).map(|_| rng.random_range(0..2u8)).collect();
        self.transmit_info(info)
    }

    /// Equalize the data REs of `y` with `est`, demap, deinterleave, decode.
    pub fn receive(&self, y: &CMatrix, est: &ChannelEstimate, layout: &SlotLayout, noise_var: f64) -> Result<SlotRx> {
        let equalized = equalize(y, est, &layout.data_positions())?;
        // A floor keeps noiseless links finite; it only scales the LLRs.
        let llrs = self.qam.soft_demap(&equalized.symbols, &equalized.gains, noise_var.max(1e-12));
        let hard_bits = llrs.iter().map(|&l| u8::from(l < 0.0)).collect();
        let decoded = self.code.decode(&self.interleaver.deinterleave(&llrs)?, self.max_iters)?;
        Ok(SlotRx {
            hard_bits,
            equalized,
            decoded,
        })
    }
}

/// Slot-0 receive chain of the pilot-removal system: pilot LS,
/// interpolation, equalization and data-aided LS over the whole slot.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotSlotRx {
    pub interpolated: ChannelEstimate,
    pub data_aided: ChannelEstimate,
    pub hard_bits: Vec<u8>,
    pub equalized: Equalized,
}

impl SlotLink {
    /// Runs the estimation cascade on a pilot-carrying slot. `x` only needs
    /// valid pilot entries. Decoding is left to [`SlotLink::decode`].
    pub fn estimate_pilot_slot(&self, y: &CMatrix, x: &CMatrix, layout: &SlotLayout, noise_var: f64) -> Result<PilotSlotRx> {
        let interpolated = interpolate_slot(&ls_pilot_estimate(y, x, layout)?)?;
        let equalized = equalize(y, &interpolated, &layout.data_positions())?;
        let llrs = self.qam.soft_demap(&equalized.symbols, &equalized.gains, noise_var.max(1e-12));
        let hard_bits: Vec<u8> = llrs.iter().map(|&l| u8::from(l < 0.0)).collect();
        let data_aided = data_aided_ls(y, x, layout, &hard_bits, &self.qam)?;
        Ok(PilotSlotRx {
            interpolated,
            data_aided,
            hard_bits,
            equalized,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phy::estimate::EstimateSource;
    use crate::phy::grid::GridLayout;
    use rand::SeedableRng;

    #[test]
    fn noiseless_flat_channel_is_identity() {
        let layout = GridLayout::default();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for order in [4, 16, 64] {
            for slot in layout.pilot_removal() {
                let link = SlotLink::new(order, slot.data_capacity()).unwrap();
                let tx = link.transmit(&mut rng).unwrap();
                let y = slot.assemble(&tx.symbols, &vec![Complex64::new(1.0, 0.0); slot.pilot_capacity()]).unwrap();
                let est = ChannelEstimate::dense(
                    CMatrix::from_fn(48, 14, |_, _| Complex64::new(1.0, 0.0)),
                    EstimateSource::Genie,
                );
                let rx = link.receive(&y, &est, &slot, 0.0).unwrap();
                assert_eq!(rx.bit_errors(&tx), 0);
                assert!(rx.block_ok(&tx), "{order}-QAM");
            }
        }
    }
}
