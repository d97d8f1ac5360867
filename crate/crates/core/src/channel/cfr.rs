use std::f64::consts::PI;

use num_complex::Complex64;

use super::{CfoProcess, FadingState, TdlProfile};
use crate::cmatrix::CMatrix;

/// Channel frequency response over (subcarrier x OFDM symbol).
#[derive(Debug, Clone, PartialEq)]
pub struct CfrMatrix {
    pub entries: CMatrix,
    pub subcarrier_spacing_hz: f64,
    pub symbol_times_s: Vec<f64>,
}

/// Centre instants of `n_sym` OFDM symbols of equal duration in slots of
/// `slot_s` seconds holding `per_slot` symbols, starting at `start_s`.
pub fn symbol_times(n_sym: usize, per_slot: usize, slot_s: f64, start_s: f64) -> Vec<f64> {
    let dur = slot_s / per_slot as f64;
    (0..n_sym).map(|l| start_s + (l as f64 + 0.5) * dur).collect()
}

/// `H[k][l] = exp(j 2 pi eps t_l) * sum_n h_n(t_l) exp(-j 2 pi k df tau_n)`.
///
/// The channel is held constant over each symbol and evaluated at the given
/// (strictly increasing) symbol instants; the fading state advances to the
/// last instant.
pub fn cfr_matrix(
    state: &mut FadingState,
    profile: &TdlProfile,
    cfo: &CfoProcess,
    n_sc: usize,
    subcarrier_spacing_hz: f64,
    symbol_times: &[f64],
) -> CfrMatrix {
    assert!(
        symbol_times.windows(2).all(|w| w[1] > w[0]),
        "symbol times must be strictly increasing"
    );
    // per-tap subcarrier phasors exp(-j 2 pi k df tau_n)
    let phasors: Vec<Vec<Complex64>> = profile
        .taps
        .iter()
        .map(|tap| {
            (0..n_sc)
                .map(|k| Complex64::from_polar(1.0, -2.0 * PI * k as f64 * subcarrier_spacing_hz * tap.delay_s))
                .collect()
        })
        .collect();
    let mut entries = CMatrix::zeros(n_sc, symbol_times.len());
    for (l, &t) in symbol_times.iter().enumerate() {
        let gains = state.evolve_taps(t);
        let rot = Complex64::from_polar(1.0, 2.0 * PI * cfo.epsilon_d_hz * t);
        for k in 0..n_sc {
            let h: Complex64 = gains.iter().zip(&phasors).map(|(g, ph)| g * ph[k]).sum();
            entries.set(k, l, h * rot);
        }
    }
    CfrMatrix {
        entries,
        subcarrier_spacing_hz,
        symbol_times_s: symbol_times.to_vec(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    fn one() -> Complex64 {
        Complex64::new(1.0, 0.0)
    }

    #[test]
    fn flat_single_tap() {
        let p = TdlProfile::rayleigh("flat", &[(0.0, 1.0)]);
        let mut st = FadingState::constant(&[one()]);
        let times = symbol_times(14, 14, 1e-3, 0.0);
        let h = cfr_matrix(&mut st, &p, &CfoProcess::none(), 48, 15e3, &times);
        assert!(h.entries.data().iter().all(|v| (v - one()).norm() < 1e-12));
    }

    #[test]
    fn two_ray_null() {
        // equal taps with df * tau = 1/2: nulls on odd subcarriers, 2 on even
        let tau = 0.5 / 15e3;
        let p = TdlProfile::rayleigh("two-ray", &[(0.0, 1.0), (tau, 1.0)]);
        let mut st = FadingState::constant(&[one(), one()]);
        let h = cfr_matrix(&mut st, &p, &CfoProcess::none(), 8, 15e3, &[0.0]);
        for k in 0..8 {
            let expect = if k % 2 == 0 { 2.0 } else { 0.0 };
            assert!((h.entries.get(k, 0).norm() - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn cfo_phase_ramp() {
        let p = TdlProfile::rayleigh("flat", &[(0.0, 1.0)]);
        let mut st = FadingState::constant(&[Complex64::from_polar(0.8, 0.3)]);
        let eps = 66.0;
        let times = symbol_times(28, 14, 1e-3, 0.0);
        let h = cfr_matrix(&mut st, &p, &CfoProcess::fixed(eps), 4, 15e3, &times);
        let mag = h.entries.get(0, 0).norm();
        for l in 1..28 {
            assert!((h.entries.get(2, l).norm() - mag).abs() < 1e-12);
            let dphi = (h.entries.get(2, l) / h.entries.get(2, l - 1)).arg();
            let expect = 2.0 * PI * eps * (times[l] - times[l - 1]);
            assert!((dphi - expect).abs() < 1e-12);
        }
    }
}
