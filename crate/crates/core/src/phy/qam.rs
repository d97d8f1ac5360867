//! Gray-labelled square QAM with max-log soft demapping.
//!
//! Bit `b0` is the first bit of each symbol's label. Even-indexed bits
//! (`b0, b2, ...`) select the in-phase level, odd-indexed bits the
//! quadrature level. On one axis with bits `c0 c1 ... c(k-1)` the level is
//!
//! ```text
//! (1 - 2 c0) * (2^(k-1) - (1 - 2 c1) * (2^(k-2) - (1 - 2 c2) * ( ... 1)))
//! ```
//!
//! scaled so the constellation has unit mean energy. For 4-QAM, bits `00`
//! map to `(1 + j) / sqrt(2)`; the full tables are in `docs/gray_mapping.md`.

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct QamConstellation {
    order: usize,
    bits_per_symbol: usize,
    /// Points indexed by label (b0 is the most significant label bit).
    points: Vec<Complex64>,
    /// Per-axis levels with the axis bit label (c0 most significant).
    axis_levels: Vec<(f64, u32)>,
}

fn axis_level(bits: u32, k: usize) -> f64 {
    let bit = |i: usize| ((bits >> (k - 1 - i)) & 1) as f64;
    let mut m = 1.0;
    for i in (1..k).rev() {
        m = (1u32 << (k - i)) as f64 - (1.0 - 2.0 * bit(i)) * m;
    }
    (1.0 - 2.0 * bit(0)) * m
}

impl QamConstellation {
    pub fn new(order: usize) -> Result<Self> {
        let bps = order.trailing_zeros() as usize;
        if !order.is_power_of_two() || bps == 0 || bps % 2 != 0 {
            return Err(Error::Config(format!("{order}-QAM is not a square Gray QAM")));
        }
        let k = bps / 2;
        let norm = (2.0 * (order as f64 - 1.0) / 3.0).sqrt();
        let axis_levels: Vec<(f64, u32)> = (0..1u32 << k).map(|c| (axis_level(c, k) / norm, c)).collect();
        let points = (0..order as u32)
            .map(|label| {
                let (mut ci, mut cq) = (0u32, 0u32);
                for i in 0..bps {
                    let b = (label >> (bps - 1 - i)) & 1;
                    if i % 2 == 0 {
                        ci = (ci << 1) | b;
                    } else {
                        cq = (cq << 1) | b;
                    }
                }
                Complex64::new(axis_level(ci, k) / norm, axis_level(cq, k) / norm)
            })
            .collect();
        Ok(QamConstellation {
            order,
            bits_per_symbol: bps,
            points,
            axis_levels,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn point(&self, bits: &[u8]) -> Complex64 {
        let label = bits.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize);
        self.points[label]
    }

    pub fn map(&self, bits: &[u8]) -> Result<Vec<Complex64>> {
        if bits.len() % self.bits_per_symbol != 0 {
            return Err(Error::Usage(format!(
                "{} bits is not a multiple of {} bits per symbol",
                bits.len(),
                self.bits_per_symbol
            )));
        }
        Ok(bits.chunks(self.bits_per_symbol).map(|c| self.point(c)).collect())
    }

    /// Nearest-point decision, appended to `out` as bits.
    pub fn hard_demap_into(&self, y: Complex64, out: &mut Vec<u8>) {
        let k = self.bits_per_symbol / 2;
        let nearest = |v: f64| {
            self.axis_levels
                .iter()
                .min_by(|a, b| (a.0 - v).abs().total_cmp(&(b.0 - v).abs()))
                .expect("non-empty axis")
                .1
        };
        let (ci, cq) = (nearest(y.re), nearest(y.im));
        for j in 0..k {
            out.push(((ci >> (k - 1 - j)) & 1) as u8);
            out.push(((cq >> (k - 1 - j)) & 1) as u8);
        }
    }

    pub fn hard_demap(&self, symbols: &[Complex64]) -> Vec<u8> {
        let mut out = Vec::with_capacity(symbols.len() * self.bits_per_symbol);
        for &y in symbols {
            self.hard_demap_into(y, &mut out);
        }
        out
    }

    /// Max-log LLRs (positive favours bit 0) for one equalized symbol with
    /// effective complex noise variance `noise_var`. Appended to `out`.
    pub fn soft_demap_into(&self, y: Complex64, noise_var: f64, out: &mut Vec<f64>) {
        let k = self.bits_per_symbol / 2;
        let axis = |v: f64, j: usize| {
            let (mut d0, mut d1) = (f64::INFINITY, f64::INFINITY);
            for &(level, label) in &self.axis_levels {
                let d = (v - level) * (v - level);
                if (label >> (k - 1 - j)) & 1 == 0 {
                    d0 = d0.min(d);
                } else {
                    d1 = d1.min(d);
                }
            }
            (d1 - d0) / noise_var
        };
        for j in 0..k {
            out.push(axis(y.re, j));
            out.push(axis(y.im, j));
        }
    }

    /// Soft demapping after zero-forcing: `symbols[i] = Y / H`, with the
    /// effective noise variance `noise_var / |H|^2`. Entries whose gain is
    /// `None` are erased and produce zero LLRs.
    pub fn soft_demap(&self, symbols: &[Complex64], gains: &[Option<f64>], noise_var: f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(symbols.len() * self.bits_per_symbol);
        for (&y, g) in symbols.iter().zip(gains) {
            match g {
                Some(g2) => self.soft_demap_into(y, noise_var / g2, &mut out),
                None => out.extend(std::iter::repeat_n(0.0, self.bits_per_symbol)),
            }
        }
        out
    }
}
