use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cmatrix::CMatrix;
use crate::error::{Error, Result};

/// Grid geometry shared by every slot of a burst.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridLayout {
    pub n_subcarriers: usize,
    pub slot_length: usize,
    /// 0-based OFDM symbol indices within a pilot-carrying slot.
    pub pilot_indices: Vec<usize>,
}

impl Default for GridLayout {
    fn default() -> Self {
        GridLayout {
            n_subcarriers: 48,
            slot_length: 14,
            pilot_indices: vec![3, 12],
        }
    }
}

impl GridLayout {
    pub fn validate(&self) -> Result<()> {
        if self.n_subcarriers == 0 || self.slot_length == 0 {
            return Err(Error::Config("grid needs at least one subcarrier and symbol".into()));
        }
        if self.pilot_indices.is_empty() {
            return Err(Error::Config("pilot-carrying slots need at least one pilot column".into()));
        }
        if self.pilot_indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("pilot indices must be strictly increasing".into()));
        }
        if self.pilot_indices.iter().any(|&l| l >= self.slot_length) {
            return Err(Error::Config("pilot index outside the slot".into()));
        }
        Ok(())
    }

    pub fn slot(&self, with_pilots: bool) -> SlotLayout {
        SlotLayout {
            n_sc: self.n_subcarriers,
            n_sym: self.slot_length,
            pilot_cols: if with_pilots { self.pilot_indices.clone() } else { Vec::new() },
        }
    }

    /// Pilot-removal burst: pilots in slot 0, slot 1 data only.
    pub fn pilot_removal(&self) -> [SlotLayout; 2] {
        [self.slot(true), self.slot(false)]
    }

    /// Reference burst with pilots in both slots.
    pub fn pilot_full(&self) -> [SlotLayout; 2] {
        [self.slot(true), self.slot(true)]
    }

    /// `N_sym / (N_sym - |I_pi|)` over a two-slot burst.
    pub fn peak_uplift_factor(&self) -> f64 {
        let n_sym = 2 * self.slot_length;
        n_sym as f64 / (n_sym - self.pilot_indices.len()) as f64
    }

    /// Ratio of data REs per burst, pilot-removal over pilot-full.
    pub fn data_re_ratio(&self) -> f64 {
        let [a, b] = self.pilot_removal();
        let [c, d] = self.pilot_full();
        (a.data_capacity() + b.data_capacity()) as f64 / (c.data_capacity() + d.data_capacity()) as f64
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlotLayout {
    pub n_sc: usize,
    pub n_sym: usize,
    pub pilot_cols: Vec<usize>,
}

impl SlotLayout {
    pub fn is_pilot(&self, l: usize) -> bool {
        self.pilot_cols.contains(&l)
    }

    pub fn data_symbols(&self) -> usize {
        self.n_sym - self.pilot_cols.len()
    }

    pub fn data_capacity(&self) -> usize {
        self.n_sc * self.data_symbols()
    }

    pub fn pilot_capacity(&self) -> usize {
        self.n_sc * self.pilot_cols.len()
    }

    /// Data REs `(k, l)` in mapping order: symbol by symbol, subcarrier
    /// fastest.
    pub fn data_positions(&self) -> Vec<(usize, usize)> {
        (0..self.n_sym)
            .filter(|&l| !self.is_pilot(l))
            .flat_map(|l| (0..self.n_sc).map(move |k| (k, l)))
            .collect()
    }

    pub fn pilot_positions(&self) -> Vec<(usize, usize)> {
        self.pilot_cols
            .iter()
            .flat_map(|&l| (0..self.n_sc).map(move |k| (k, l)))
            .collect()
    }

    /// Slot matrix with pilots and data placed at their REs.
    pub fn assemble(&self, data: &[Complex64], pilots: &[Complex64]) -> Result<CMatrix> {
        if data.len() != self.data_capacity() {
            return Err(Error::Usage(format!(
                "{} data symbols for a slot holding {}",
                data.len(),
                self.data_capacity()
            )));
        }
        if pilots.len() != self.pilot_capacity() {
            return Err(Error::Usage(format!(
                "{} pilot symbols for a slot holding {}",
                pilots.len(),
                self.pilot_capacity()
            )));
        }
        let mut m = CMatrix::zeros(self.n_sc, self.n_sym);
        for (&(k, l), &s) in self.data_positions().iter().zip(data) {
            m.set(k, l, s);
        }
        for (&(k, l), &s) in self.pilot_positions().iter().zip(pilots) {
            m.set(k, l, s);
        }
        Ok(m)
    }

    pub fn gather(&self, m: &CMatrix, positions: &[(usize, usize)]) -> Vec<Complex64> {
        positions.iter().map(|&(k, l)| m.get(k, l)).collect()
    }
}

/// Random unit-energy 4-QAM pilots.
pub fn random_pilots<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<Complex64> {
    let a = std::f64::consts::FRAC_1_SQRT_2;
    (0..n)
        .map(|_| {
            let re = if rng.random::<bool>() { a } else { -a };
            let im = if rng.random::<bool>() { a } else { -a };
            Complex64::new(re, im)
        })
        .collect()
}

/// Transmitted symbols over a multi-slot burst.
#[derive(Debug, Clone, PartialEq)]
pub struct ResourceGrid {
    pub entries: CMatrix,
    pub slots: Vec<SlotLayout>,
}

impl ResourceGrid {
    /// Places `data[i]` and `pilots[i]` into slot `i` of `slots`.
    pub fn build(slots: &[SlotLayout], data: &[Vec<Complex64>], pilots: &[Vec<Complex64>]) -> Result<Self> {
        if slots.is_empty() || data.len() != slots.len() || pilots.len() != slots.len() {
            return Err(Error::Usage("one data and pilot vector per slot required".into()));
        }
        let n_sc = slots[0].n_sc;
        let n_sym: usize = slots.iter().map(|s| s.n_sym).sum();
        let mut entries = CMatrix::zeros(n_sc, n_sym);
        let mut start = 0;
        for ((s, d), p) in slots.iter().zip(data).zip(pilots) {
            if s.n_sc != n_sc {
                return Err(Error::Usage("slots disagree on subcarrier count".into()));
            }
            entries.set_columns(start, &s.assemble(d, p)?);
            start += s.n_sym;
        }
        Ok(ResourceGrid {
            entries,
            slots: slots.to_vec(),
        })
    }

    pub fn slot_start(&self, i: usize) -> usize {
        self.slots[..i].iter().map(|s| s.n_sym).sum()
    }

    pub fn slot(&self, i: usize) -> CMatrix {
        self.entries.columns(self.slot_start(i), self.slots[i].n_sym)
    }

    pub fn data_res(&self) -> usize {
        self.slots.iter().map(SlotLayout::data_capacity).sum()
    }

    pub fn pilot_res(&self) -> usize {
        self.slots.iter().map(SlotLayout::pilot_capacity).sum()
    }
}
