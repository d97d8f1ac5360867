use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng::{stream, Domain};

/// Pseudo-random bit permutation fixed by `(length, seed)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interleaver {
    perm: Vec<usize>,
}

impl Interleaver {
    pub fn new(len: usize, seed: u64) -> Self {
        let mut perm: Vec<usize> = (0..len).collect();
        perm.shuffle(&mut stream(seed, Domain::Interleaver, &[len as u64]));
        Interleaver { perm }
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    /// `out[i] = input[perm[i]]`.
    pub fn interleave<T: Copy>(&self, input: &[T]) -> Result<Vec<T>> {
        self.check(input.len())?;
        Ok(self.perm.iter().map(|&p| input[p]).collect())
    }

    pub fn deinterleave<T: Copy + Default>(&self, input: &[T]) -> Result<Vec<T>> {
        self.check(input.len())?;
        let mut out = vec![T::default(); input.len()];
        for (&p, &v) in self.perm.iter().zip(input) {
            out[p] = v;
        }
        Ok(out)
    }

    fn check(&self, len: usize) -> Result<()> {
        if len != self.perm.len() {
            return Err(Error::Usage(format!(
                "interleaver of length {} applied to {len} items",
                self.perm.len()
            )));
        }
        Ok(())
    }
}

pub fn interleave(bits: &[u8], seed: u64) -> Vec<u8> {
    Interleaver::new(bits.len(), seed).interleave(bits).expect("length matches")
}

pub fn deinterleave(bits: &[u8], len: usize, seed: u64) -> Result<Vec<u8>> {
    Interleaver::new(len, seed).deinterleave(bits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn singleton_unchanged() {
        assert_eq!(interleave(&[1], 9), vec![1]);
    }

    #[test]
    fn length_mismatch_is_usage_error() {
        assert!(matches!(deinterleave(&[0, 1, 1], 4, 1), Err(Error::Usage(_))));
    }

    #[test]
    fn depends_only_on_length_and_seed() {
        assert_eq!(Interleaver::new(100, 3), Interleaver::new(100, 3));
        assert_ne!(Interleaver::new(100, 3), Interleaver::new(100, 4));
    }

    proptest! {
        #[test]
        fn round_trip(bits in prop::collection::vec(0u8..2, 1..500), seed in any::<u64>()) {
            let il = interleave(&bits, seed);
            prop_assert_eq!(deinterleave(&il, bits.len(), seed).unwrap(), bits);
        }
    }
}
