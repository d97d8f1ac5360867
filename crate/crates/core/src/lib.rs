//! Link-level simulator for uplink OFDM over non-terrestrial (LEO) links in
//! which every other slot carries no pilots and the channel of the pilot-free
//! slot is predicted by a small convolutional-recurrent network.
//!
//! The crate is organised bottom-up:
//!
//! * [`tensor`]: dense `f64` tensors, the layer kernels used by the predictor,
//!   a small reverse-mode tape, losses, Adam and the learning-rate schedule.
//! * [`channel`]: tapped-delay-line fading, residual CFO, CFR matrices, AWGN.
//! * [`phy`]: LDPC coding, interleaving, QAM, resource grids, LS estimation,
//!   interpolation, equalization and data-aided re-estimation.
//! * [`sim`]: one channel draw per burst and slot assembly shared by
//!   training and evaluation.
//! * [`predictor`]: the CNN-LSTM model, dataset synthesis and training.
//! * [`harness`]: Monte Carlo evaluation, throughput, sweeps and the
//!   multiplication/parameter counter.

pub mod channel;
pub mod cmatrix;
pub mod error;
pub mod harness;
pub mod phy;
pub mod predictor;
pub mod rng;
pub mod sim;
pub mod tensor;

pub use error::{Error, Result};
pub use cmatrix::{nmse, CMatrix};
pub use num_complex::Complex64;
