use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;

use super::TdlProfile;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Sinusoids per diffuse tap in the sum-of-sinusoids generator.
pub const SINUSOIDS_PER_TAP: usize = 32;
/// LoS component Doppler as a fraction of the maximum Doppler (fixed arrival angle).
pub const LOS_DOPPLER_FRACTION: f64 = 0.7;

/// Maximum Doppler frequency for a terminal moving at `v_ue_kmh`.
pub fn doppler_from_speed(v_ue_kmh: f64, fc_hz: f64) -> f64 {
    v_ue_kmh / 3.6 * fc_hz / SPEED_OF_LIGHT
}

#[derive(Debug, Clone)]
struct TapProcess {
    /// Amplitude of each diffuse sinusoid, `sqrt(p_diffuse / N)`.
    amplitude: f64,
    /// Angular Doppler frequency of each sinusoid (rad/s).
    omegas: Vec<f64>,
    phases: Vec<f64>,
    los_amplitude: f64,
    los_phase: f64,
}

/// Per-tap sum-of-sinusoids state for one channel realization.
///
/// Diffuse components use arrival angles drawn uniformly within `N` equal
/// sectors, so the ensemble autocorrelation is exactly `J0(2 pi f_d tau)`.
#[derive(Debug, Clone)]
pub struct FadingState {
    taps: Vec<TapProcess>,
    pub doppler_hz: f64,
    pub rician_k_db: Option<f64>,
    pub time_s: f64,
}

impl FadingState {
    pub fn new<R: Rng + ?Sized>(profile: &TdlProfile, doppler_hz: f64, rng: &mut R) -> Self {
        assert!(doppler_hz >= 0.0, "Doppler must be non-negative");
        let n = SINUSOIDS_PER_TAP;
        let mut rician_k_db = None;
        let taps = profile
            .taps
            .iter()
            .map(|tap| {
                let (p_diffuse, p_los) = match tap.rician_k_db {
                    Some(k_db) if tap.is_los => {
                        rician_k_db = Some(k_db);
                        let k = 10f64.powf(k_db / 10.0);
                        (tap.power / (k + 1.0), tap.power * k / (k + 1.0))
                    }
                    _ => (tap.power, 0.0),
                };
                let omegas = (0..n)
                    .map(|i| {
                        let alpha = 2.0 * PI * (i as f64 + rng.random::<f64>()) / n as f64;
                        2.0 * PI * doppler_hz * alpha.cos()
                    })
                    .collect();
                let phases = (0..n).map(|_| rng.random_range(-PI..PI)).collect();
                TapProcess {
                    amplitude: (p_diffuse / n as f64).sqrt(),
                    omegas,
                    phases,
                    los_amplitude: p_los.sqrt(),
                    los_phase: rng.random_range(-PI..PI),
                }
            })
            .collect();
        FadingState {
            taps,
            doppler_hz,
            rician_k_db,
            time_s: 0.0,
        }
    }

    /// A static channel with the given tap gains.
    pub fn constant(gains: &[Complex64]) -> Self {
        FadingState {
            taps: gains
                .iter()
                .map(|g| TapProcess {
                    amplitude: 0.0,
                    omegas: Vec::new(),
                    phases: Vec::new(),
                    los_amplitude: g.norm(),
                    los_phase: g.arg(),
                })
                .collect(),
            doppler_hz: 0.0,
            rician_k_db: None,
            time_s: 0.0,
        }
    }

    pub fn num_taps(&self) -> usize {
        self.taps.len()
    }

    /// Tap gains at time `t` without advancing the state.
    pub fn gains_at(&self, t: f64) -> Vec<Complex64> {
        let los_omega = 2.0 * PI * LOS_DOPPLER_FRACTION * self.doppler_hz;
        self.taps
            .iter()
            .map(|tap| {
                let mut h = Complex64::new(0.0, 0.0);
                for (w, ph) in tap.omegas.iter().zip(&tap.phases) {
                    h += Complex64::from_polar(1.0, w * t + ph);
                }
                h *= tap.amplitude;
                if tap.los_amplitude > 0.0 {
                    h += Complex64::from_polar(tap.los_amplitude, los_omega * t + tap.los_phase);
                }
                h
            })
            .collect()
    }

    /// Advances to time `t` (which must not go backwards) and returns `h_n(t)`.
    pub fn evolve_taps(&mut self, t: f64) -> Vec<Complex64> {
        assert!(t >= self.time_s, "fading time must move forward ({t} < {})", self.time_s);
        self.time_s = t;
        self.gains_at(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::load_profile;
    use crate::rng::{stream, Domain};

    #[test]
    fn doppler_values() {
        assert_eq!(doppler_from_speed(0.0, 2e9), 0.0);
        assert!((doppler_from_speed(5.0, 2e9) - 9.2657).abs() < 1e-3);
        assert!((doppler_from_speed(50.0, 2e9) - 92.657).abs() < 1e-2);
    }

    #[test]
    fn static_channel_is_constant() {
        let p = load_profile("NTN-TDL-A").unwrap();
        let mut st = FadingState::new(&p, 0.0, &mut stream(1, Domain::Test, &[]));
        let a = st.evolve_taps(0.0);
        let b = st.evolve_taps(0.5);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn mean_tap_power_matches_profile() {
        let p = load_profile("NTN-TDL-C").unwrap();
        let n = 100_000;
        let mut acc = vec![0.0; p.taps.len()];
        for i in 0..n {
            let st = FadingState::new(&p, 92.7, &mut stream(2, Domain::Test, &[i as u64]));
            for (a, h) in acc.iter_mut().zip(st.gains_at(0.0123)) {
                *a += h.norm_sqr();
            }
        }
        for (a, tap) in acc.iter().zip(&p.taps) {
            let mean = a / n as f64;
            assert!((mean / tap.power - 1.0).abs() < 0.02, "{mean} vs {}", tap.power);
        }
    }

    #[test]
    #[should_panic]
    fn time_cannot_go_backwards() {
        let p = load_profile("NTN-TDL-A").unwrap();
        let mut st = FadingState::new(&p, 10.0, &mut stream(1, Domain::Test, &[]));
        st.evolve_taps(1.0);
        st.evolve_taps(0.5);
    }
}
