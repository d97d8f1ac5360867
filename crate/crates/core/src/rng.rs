//! Seed derivation for independent, reproducible random streams.
//!
//! Every Monte Carlo iteration, training sample and fading realization draws
//! from its own ChaCha stream keyed by `(master seed, domain, indices...)`, so
//! results do not depend on worker count or scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream domains. Distinct domains never share a stream for the same indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Domain {
    Init = 1,
    TrainBatch = 2,
    ValidationBatch = 3,
    MonteCarlo = 4,
    Interleaver = 5,
    Test = 6,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a master seed, a domain tag and a list of indices into one 64-bit key.
pub fn derive_seed(master: u64, domain: Domain, indices: &[u64]) -> u64 {
    let mut h = splitmix64(master ^ splitmix64(domain as u64));
    for &i in indices {
        h = splitmix64(h ^ splitmix64(i.wrapping_add(0x632B_E59B_D9B4_E019)));
    }
    h
}

/// A ChaCha8 generator for the given stream key.
pub fn stream(master: u64, domain: Domain, indices: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, domain, indices))
}
