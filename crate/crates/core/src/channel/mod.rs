//! Time-varying tapped-delay-line channels for the NTN uplink.
//!
//! Tap gains follow a sum-of-sinusoids Jakes model; a LoS tap adds a
//! deterministic rotating component. The residual carrier frequency offset
//! left after Doppler pre-compensation enters as a common phase ramp.

mod cfo;
mod cfr;
mod fading;
mod noise;
mod profile;

pub use cfo::{residual_cfo_sigma, CfoProcess};
pub use cfr::{cfr_matrix, symbol_times, CfrMatrix};
pub use fading::{doppler_from_speed, FadingState, LOS_DOPPLER_FRACTION, SINUSOIDS_PER_TAP, SPEED_OF_LIGHT};
pub use noise::{awgn, noise_variance};
pub use profile::{load_profile, load_profile_from, TdlProfile, TdlTap, DEFAULT_DELAY_SPREAD_S};
