//! Two-slot uplink bursts: channel, residual CFO and noise realizations, and
//! the transmit side of both the pilot-full and pilot-removal systems.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{
    awgn, cfr_matrix, doppler_from_speed, load_profile, residual_cfo_sigma, symbol_times, CfoProcess,
    FadingState, TdlProfile,
};
use crate::cmatrix::CMatrix;
use crate::error::{Error, Result};
use crate::phy::grid::{random_pilots, GridLayout, SlotLayout};
use crate::phy::link::{SlotLink, SlotTx};

pub const CODE_RATE: f64 = 0.75;

/// Propagation and numerology shared by training and evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelConfig {
    pub profile: String,
    pub ue_speed_kmh: f64,
    pub carrier_hz: f64,
    /// Residual CFO bound in ppm of the carrier, met with probability 0.997.
    pub cfo_ppm: f64,
    pub subcarrier_spacing_hz: f64,
    pub slot_duration_s: f64,
    pub grid: GridLayout,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        ChannelConfig {
            profile: "NTN-TDL-C".into(),
            ue_speed_kmh: 5.0,
            carrier_hz: 2e9,
            cfo_ppm: 0.1,
            subcarrier_spacing_hz: 15e3,
            slot_duration_s: 1e-3,
            grid: GridLayout::default(),
        }
    }
}

impl ChannelConfig {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        let positive = [
            ("ue_speed_kmh", self.ue_speed_kmh, true),
            ("carrier_hz", self.carrier_hz, false),
            ("cfo_ppm", self.cfo_ppm, true),
            ("subcarrier_spacing_hz", self.subcarrier_spacing_hz, false),
            ("slot_duration_s", self.slot_duration_s, false),
        ];
        for (name, v, zero_ok) in positive {
            if !v.is_finite() || v < 0.0 || (!zero_ok && v == 0.0) {
                return Err(Error::Config(format!("channel.{name} must be a positive number, got {v}")));
            }
        }
        load_profile(&self.profile).map(|_| ())
    }

    pub fn load_profile(&self) -> Result<TdlProfile> {
        load_profile(&self.profile)
    }

    pub fn doppler_hz(&self) -> f64 {
        doppler_from_speed(self.ue_speed_kmh, self.carrier_hz)
    }

    pub fn cfo_sigma_hz(&self) -> f64 {
        residual_cfo_sigma(self.carrier_hz, self.cfo_ppm)
    }
}

/// One burst's propagation: true CFR over both slots and unit-variance
/// noise, shared by every system simulated on the burst.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelDraw {
    pub cfr: CMatrix,
    pub noise: CMatrix,
    pub cfo: CfoProcess,
}

impl ChannelDraw {
    pub fn new<R: Rng + ?Sized>(cfg: &ChannelConfig, profile: &TdlProfile, rng: &mut R) -> Self {
        let g = &cfg.grid;
        let n_sym = 2 * g.slot_length;
        let mut fading = FadingState::new(profile, cfg.doppler_hz(), rng);
        let cfo = CfoProcess::draw(cfg.cfo_sigma_hz(), rng);
        let times = symbol_times(n_sym, g.slot_length, cfg.slot_duration_s, 0.0);
        let cfr = cfr_matrix(&mut fading, profile, &cfo, g.n_subcarriers, cfg.subcarrier_spacing_hz, &times).entries;
        let noise = awgn(&CMatrix::zeros(g.n_subcarriers, n_sym), 0.0, rng);
        ChannelDraw { cfr, noise, cfo }
    }

    pub fn slot_cfr(&self, slot: usize, slot_len: usize) -> CMatrix {
        self.cfr.columns(slot * slot_len, slot_len)
    }

    /// `Y = H . X + sqrt(N0) W` for one slot.
    pub fn receive_slot(&self, x: &CMatrix, slot: usize, noise_var: f64) -> CMatrix {
        let len = x.cols();
        let h = self.slot_cfr(slot, len);
        let w = self.noise.columns(slot * len, len);
        let mut y = h.hadamard(x);
        let s = noise_var.sqrt();
        for (a, b) in y.data_mut().iter_mut().zip(w.data()) {
            *a += b * s;
        }
        y
    }
}

/// Transmit side of one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotBurst {
    pub layout: SlotLayout,
    pub tx: SlotTx,
    pub x: CMatrix,
}

impl SlotBurst {
    pub fn new<R: Rng + ?Sized>(link: &SlotLink, layout: &SlotLayout, rng: &mut R) -> Result<Self> {
        let tx = link.transmit(rng)?;
        let pilots: Vec<Complex64> = random_pilots(layout.pilot_capacity(), rng);
        let x = layout.assemble(&tx.symbols, &pilots)?;
        Ok(SlotBurst {
            layout: layout.clone(),
            tx,
            x,
        })
    }
}
