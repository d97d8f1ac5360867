//! Generic rate-3/4 LDPC codes sized to one slot of data REs.
//!
//! Shipped codes live in `assets/ldpc/` and were produced by
//! [`construct::peg_staircase`] with [`PEG_SEED`] and information column
//! weight [`INFO_COLUMN_WEIGHT`] (`chanpred gen-ldpc` regenerates them).
//! Other lengths are constructed on first use with the same recipe.

pub mod alist;
pub mod code;
pub mod construct;

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

pub use alist::ParityCheck;
pub use code::{Decoded, LdpcCode, DEFAULT_MAX_ITERS, MIN_SUM_FACTOR};

use crate::error::{Error, Result};

pub const PEG_SEED: u64 = 2023;
pub const INFO_COLUMN_WEIGHT: usize = 3;
pub const RATE_NUM: usize = 3;
pub const RATE_DEN: usize = 4;

const SHIPPED: &[(usize, &str)] = &[
    (1152, include_str!("../../../assets/ldpc/n1152_k864.alist")),
    (1344, include_str!("../../../assets/ldpc/n1344_k1008.alist")),
    (2304, include_str!("../../../assets/ldpc/n2304_k1728.alist")),
    (2688, include_str!("../../../assets/ldpc/n2688_k2016.alist")),
    (3456, include_str!("../../../assets/ldpc/n3456_k2592.alist")),
    (4032, include_str!("../../../assets/ldpc/n4032_k3024.alist")),
];

pub fn dimension(n: usize) -> Result<usize> {
    if n == 0 || (n * RATE_NUM) % RATE_DEN != 0 {
        return Err(Error::Config(format!("codeword length {n} does not support rate 3/4")));
    }
    Ok(n * RATE_NUM / RATE_DEN)
}

/// Builds the parity-check matrix for length `n` from scratch.
pub fn generate(n: usize) -> Result<ParityCheck> {
    construct::peg_staircase(n, dimension(n)?, INFO_COLUMN_WEIGHT, PEG_SEED)
}

pub fn shipped_alist(n: usize) -> Option<&'static str> {
    SHIPPED.iter().find(|(len, _)| *len == n).map(|(_, text)| *text)
}

pub fn shipped_lengths() -> impl Iterator<Item = usize> {
    SHIPPED.iter().map(|(n, _)| *n)
}

/// Shared rate-3/4 code of length `n`, loaded once per process.
pub fn code_for_length(n: usize) -> Result<Arc<LdpcCode>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<LdpcCode>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(c) = cache.lock().expect("ldpc cache").get(&n) {
        return Ok(c.clone());
    }
    let code = match shipped_alist(n) {
        Some(text) => LdpcCode::from_alist(text)?,
        None => LdpcCode::new(generate(n)?)?,
    };
    if code.k() != dimension(n)? {
        return Err(Error::Config(format!("code of length {n} has dimension {}", code.k())));
    }
    let code = Arc::new(code);
    cache.lock().expect("ldpc cache").insert(n, code.clone());
    Ok(code)
}
