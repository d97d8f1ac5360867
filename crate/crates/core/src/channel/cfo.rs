use rand::Rng;
use rand_distr::{Distribution, Normal};

/// Standard deviation of the residual CFO such that `|eps| <= ppm * fc`
/// holds with probability 0.997 (three-sigma rule).
pub fn residual_cfo_sigma(fc_hz: f64, ppm: f64) -> f64 {
    ppm * 1e-6 * fc_hz / 3.0
}

/// Residual frequency synchronization error for one burst.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CfoProcess {
    pub sigma_d_hz: f64,
    pub epsilon_d_hz: f64,
}

impl CfoProcess {
    pub fn none() -> Self {
        CfoProcess {
            sigma_d_hz: 0.0,
            epsilon_d_hz: 0.0,
        }
    }

    pub fn fixed(epsilon_d_hz: f64) -> Self {
        CfoProcess {
            sigma_d_hz: 0.0,
            epsilon_d_hz,
        }
    }

    /// Draws `eps ~ N(0, sigma)`.
    pub fn draw<R: Rng + ?Sized>(sigma_d_hz: f64, rng: &mut R) -> Self {
        let epsilon_d_hz = if sigma_d_hz > 0.0 {
            Normal::new(0.0, sigma_d_hz).expect("positive sigma").sample(rng)
        } else {
            0.0
        };
        CfoProcess {
            sigma_d_hz,
            epsilon_d_hz,
        }
    }
}
