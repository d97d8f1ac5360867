//! Link throughput of the pilot-full and pilot-removal systems.

use crate::phy::grid::GridLayout;

/// `m * Rc * N_SC * (N_sym_slot - |I_pi|) / T_slot * (1 - BLER_e)`.
pub fn throughput_estimation_with(bler_e: f64, bits_per_symbol: usize, code_rate: f64, grid: &GridLayout, slot_s: f64) -> f64 {
    let res = grid.n_subcarriers * (grid.slot_length - grid.pilot_indices.len());
    bits_per_symbol as f64 * code_rate * res as f64 / slot_s * (1.0 - bler_e)
}

/// Average of the pilot slot (estimation) and the pilot-free slot, which
/// carries `N_SC * N_sym_slot` data REs.
pub fn throughput_prediction_with(
    bler_e: f64,
    bler_p: f64,
    bits_per_symbol: usize,
    code_rate: f64,
    grid: &GridLayout,
    slot_s: f64,
) -> f64 {
    let full = bits_per_symbol as f64 * code_rate * (grid.n_subcarriers * grid.slot_length) as f64 / slot_s;
    (throughput_estimation_with(bler_e, bits_per_symbol, code_rate, grid, slot_s) + full * (1.0 - bler_p)) / 2.0
}

pub fn throughput_estimation(bler_e: f64, bits_per_symbol: usize, code_rate: f64) -> f64 {
    throughput_estimation_with(bler_e, bits_per_symbol, code_rate, &GridLayout::default(), 1e-3)
}

pub fn throughput_prediction(bler_e: f64, bler_p: f64, bits_per_symbol: usize, code_rate: f64) -> f64 {
    throughput_prediction_with(bler_e, bler_p, bits_per_symbol, code_rate, &GridLayout::default(), 1e-3)
}
