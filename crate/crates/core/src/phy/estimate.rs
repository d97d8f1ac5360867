//! LS estimation, time interpolation, zero-forcing and data-aided LS.

use num_complex::Complex64;

use super::grid::SlotLayout;
use super::qam::QamConstellation;
use crate::cmatrix::CMatrix;
use crate::error::{Error, Result};

/// Channel magnitudes below this erase the RE.
pub const ERASURE_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimateSource {
    PilotLS,
    Interpolated,
    DataAidedLS,
    Predicted,
    Genie,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEstimate {
    pub entries: CMatrix,
    pub source: EstimateSource,
    /// Columns holding values when `source` is `PilotLS`.
    pub pilot_cols: Vec<usize>,
}

impl ChannelEstimate {
    pub fn dense(entries: CMatrix, source: EstimateSource) -> Self {
        ChannelEstimate {
            entries,
            source,
            pilot_cols: Vec::new(),
        }
    }
}

pub fn ls_pilot_estimate(y: &CMatrix, x: &CMatrix, layout: &SlotLayout) -> Result<ChannelEstimate> {
    if layout.pilot_cols.is_empty() {
        return Err(Error::Usage("slot has no pilots".into()));
    }
    let mut h = CMatrix::zeros(layout.n_sc, layout.n_sym);
    for (k, l) in layout.pilot_positions() {
        let p = x.get(k, l);
        if p == Complex64::new(0.0, 0.0) {
            return Err(Error::Usage(format!("zero pilot at subcarrier {k}, symbol {l}")));
        }
        h.set(k, l, y.get(k, l) / p);
    }
    Ok(ChannelEstimate {
        entries: h,
        source: EstimateSource::PilotLS,
        pilot_cols: layout.pilot_cols.clone(),
    })
}

/// Linear interpolation in time between pilot columns, holding the
/// nearest pilot value outside them.
pub fn interpolate_slot(est: &ChannelEstimate) -> Result<ChannelEstimate> {
    if est.source != EstimateSource::PilotLS || est.pilot_cols.is_empty() {
        return Err(Error::Usage("interpolation needs a pilot LS estimate".into()));
    }
    let (n_sc, n_sym) = (est.entries.rows(), est.entries.cols());
    let p = &est.pilot_cols;
    let mut out = CMatrix::zeros(n_sc, n_sym);
    for l in 0..n_sym {
        let hi = p.partition_point(|&c| c <= l);
        for k in 0..n_sc {
            let v = if hi == 0 {
                est.entries.get(k, p[0])
            } else if hi == p.len() {
                est.entries.get(k, p[hi - 1])
            } else {
                let (a, b) = (p[hi - 1], p[hi]);
                let t = (l - a) as f64 / (b - a) as f64;
                est.entries.get(k, a) * (1.0 - t) + est.entries.get(k, b) * t
            };
            out.set(k, l, v);
        }
    }
    Ok(ChannelEstimate::dense(out, EstimateSource::Interpolated))
}

/// Zero-forced symbols with squared channel gains; `None` marks an erasure.
#[derive(Debug, Clone, PartialEq)]
pub struct Equalized {
    pub symbols: Vec<Complex64>,
    pub gains: Vec<Option<f64>>,
}

pub fn equalize(y: &CMatrix, est: &ChannelEstimate, positions: &[(usize, usize)]) -> Result<Equalized> {
    if est.source == EstimateSource::PilotLS {
        return Err(Error::Usage("equalization needs a dense estimate".into()));
    }
    let mut symbols = Vec::with_capacity(positions.len());
    let mut gains = Vec::with_capacity(positions.len());
    for &(k, l) in positions {
        let h = est.entries.get(k, l);
        if h.norm() < ERASURE_THRESHOLD {
            symbols.push(Complex64::new(0.0, 0.0));
            gains.push(None);
        } else {
            symbols.push(y.get(k, l) / h);
            gains.push(Some(h.norm_sqr()));
        }
    }
    Ok(Equalized { symbols, gains })
}

/// Remaps hard-decided data bits onto the constellation and divides the
/// whole slot by the resulting reference grid (true pilots kept).
pub fn data_aided_ls(
    y: &CMatrix,
    x_pilots: &CMatrix,
    layout: &SlotLayout,
    hard_bits: &[u8],
    qam: &QamConstellation,
) -> Result<ChannelEstimate> {
    let positions = layout.data_positions();
    if hard_bits.len() != positions.len() * qam.bits_per_symbol() {
        return Err(Error::Usage(format!(
            "{} demapped bits for {} data REs",
            hard_bits.len(),
            positions.len()
        )));
    }
    let mut reference = x_pilots.clone();
    for (&(k, l), s) in positions.iter().zip(qam.map(hard_bits)?) {
        reference.set(k, l, s);
    }
    let mut h = CMatrix::zeros(layout.n_sc, layout.n_sym);
    for k in 0..layout.n_sc {
        for l in 0..layout.n_sym {
            h.set(k, l, y.get(k, l) / reference.get(k, l));
        }
    }
    Ok(ChannelEstimate::dense(h, EstimateSource::DataAidedLS))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phy::grid::GridLayout;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn pilot_division_by_hand() {
        let slot = GridLayout::default().slot(true);
        let x = slot.assemble(&vec![c(1.0, 0.0); 576], &vec![c(1.0, 0.0); 96]).unwrap();
        let y = CMatrix::from_fn(48, 14, |_, _| c(2.0, 2.0));
        let est = ls_pilot_estimate(&y, &x, &slot).unwrap();
        assert_eq!(est.entries.get(5, 3), c(2.0, 2.0));
        assert_eq!(est.entries.get(5, 4), c(0.0, 0.0));
    }

    #[test]
    fn zero_pilot_is_usage_error() {
        let slot = GridLayout::default().slot(true);
        let x = CMatrix::zeros(48, 14);
        assert!(matches!(ls_pilot_estimate(&x, &x, &slot), Err(Error::Usage(_))));
    }

    #[test]
    fn interpolation_rules() {
        let mut h = CMatrix::zeros(2, 14);
        h.set(0, 3, c(0.0, 0.0));
        h.set(0, 12, c(9.0, 0.0));
        h.set(1, 3, c(1.0, -1.0));
        h.set(1, 12, c(1.0, -1.0));
        let est = ChannelEstimate {
            entries: h,
            source: EstimateSource::PilotLS,
            pilot_cols: vec![3, 12],
        };
        let out = interpolate_slot(&est).unwrap();
        assert!((out.entries.get(0, 7) - c(4.0, 0.0)).norm() < 1e-12);
        assert_eq!(out.entries.get(0, 0), c(0.0, 0.0));
        assert_eq!(out.entries.get(0, 13), c(9.0, 0.0));
        assert!((0..14).all(|l| out.entries.get(1, l) == c(1.0, -1.0)));
    }

    #[test]
    fn equalizer_scaling_and_erasure() {
        let h = CMatrix::from_fn(1, 3, |_, l| if l == 2 { c(0.0, 0.0) } else { c(0.5, 0.5) });
        let x = c(0.3, -0.7);
        let y = CMatrix::from_fn(1, 3, |_, l| h.get(0, l) * x);
        let pos = [(0, 0), (0, 1), (0, 2)];
        let exact = equalize(&y, &ChannelEstimate::dense(h.clone(), EstimateSource::Genie), &pos).unwrap();
        assert!((exact.symbols[0] - x).norm() < 1e-15);
        assert_eq!(exact.gains[2], None);
        let double = equalize(&y, &ChannelEstimate::dense(h.scale(2.0), EstimateSource::Genie), &pos).unwrap();
        assert!((double.symbols[1] - x * 0.5).norm() < 1e-15);
    }

    #[test]
    fn data_aided_rotation_on_adjacent_qpsk_error() {
        let layout = GridLayout { n_subcarriers: 1, slot_length: 3, pilot_indices: vec![1] }.slot(true);
        let q = QamConstellation::new(4).unwrap();
        let pilot = q.point(&[0, 0]);
        let sent = [0u8, 0, 1, 1];
        let x = layout.assemble(&q.map(&sent).unwrap(), &[pilot]).unwrap();
        let h = CMatrix::from_fn(1, 3, |_, l| c(0.8, 0.1 * l as f64));
        let y = h.hadamard(&x);
        let x_pilots = layout.assemble(&[c(0.0, 0.0); 2], &[pilot]).unwrap();
        let right = data_aided_ls(&y, &x_pilots, &layout, &sent, &q).unwrap();
        assert!(right.entries.max_abs_diff(&h) < 1e-12);
        let wrong = data_aided_ls(&y, &x_pilots, &layout, &[1, 0, 1, 1], &q).unwrap();
        let ratio = wrong.entries.get(0, 0) / h.get(0, 0);
        assert!((ratio.norm() - 1.0).abs() < 1e-12);
        assert!((ratio.arg().abs() - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        assert_eq!(wrong.entries.get(0, 2), right.entries.get(0, 2));
    }
}
