pub mod estimate;
pub mod grid;
pub mod interleave;
pub mod ldpc;
pub mod link;
pub mod qam;

pub use estimate::{
    data_aided_ls, equalize, interpolate_slot, ls_pilot_estimate, ChannelEstimate, Equalized, EstimateSource,
    ERASURE_THRESHOLD,
};
pub use grid::{GridLayout, ResourceGrid, SlotLayout};
pub use interleave::{deinterleave, interleave, Interleaver};
pub use ldpc::{LdpcCode, ParityCheck};
pub use qam::QamConstellation;

/// Es/N0 in dB for a given Eb/N0, modulation bits `m` and code rate.
pub fn es_n0_db(eb_n0_db: f64, bits_per_symbol: usize, code_rate: f64) -> f64 {
    eb_n0_db + 10.0 * (bits_per_symbol as f64 * code_rate).log10()
}
