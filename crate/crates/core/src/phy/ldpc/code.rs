use super::alist::ParityCheck;
use crate::error::{Error, Result};

pub const DEFAULT_MAX_ITERS: usize = 25;
pub const MIN_SUM_FACTOR: f64 = 0.75;

type Words = Vec<u64>;

fn words(bits: usize) -> usize {
    bits.div_ceil(64)
}

/// A loaded LDPC code: parity checks plus a systematic encoder.
///
/// Codewords carry the information bits at `info_positions` (ascending) and
/// parity bits at the pivot columns found by eliminating `H` right to left.
#[derive(Debug, Clone)]
pub struct LdpcCode {
    pc: ParityCheck,
    info_positions: Vec<usize>,
    parity_positions: Vec<usize>,
    /// Row `i` gives parity bit `parity_positions[i]` as a GF(2) dot
    /// product with the packed information bits.
    generator: Vec<Words>,
    edge_var: Vec<usize>,
    row_start: Vec<usize>,
    var_edges: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    pub info_bits: Vec<u8>,
    pub codeword: Vec<u8>,
    /// All checks satisfied and no undecided bit.
    pub parity_ok: bool,
    pub iterations: usize,
}

impl LdpcCode {
    pub fn new(pc: ParityCheck) -> Result<Self> {
        let (n, m) = (pc.n(), pc.m());
        let w = words(n);
        let mut h: Vec<Words> = pc
            .rows()
            .iter()
            .map(|row| {
                let mut r = vec![0u64; w];
                for &c in row {
                    r[c / 64] |= 1 << (c % 64);
                }
                r
            })
            .collect();
        let mut pivots = Vec::with_capacity(m);
        let mut rank = 0;
        for col in (0..n).rev() {
            if rank == m {
                break;
            }
            let (wi, bit) = (col / 64, 1u64 << (col % 64));
            let Some(p) = (rank..m).find(|&r| h[r][wi] & bit != 0) else {
                continue;
            };
            h.swap(rank, p);
            let pivot_row = h[rank].clone();
            for (r, row) in h.iter_mut().enumerate() {
                if r != rank && row[wi] & bit != 0 {
                    row.iter_mut().zip(&pivot_row).for_each(|(a, b)| *a ^= b);
                }
            }
            pivots.push(col);
            rank += 1;
        }
        if rank < m {
            return Err(Error::Config(format!(
                "parity-check matrix has rank {rank} < {m} checks"
            )));
        }
        let mut is_parity = vec![false; n];
        pivots.iter().for_each(|&p| is_parity[p] = true);
        let info_positions: Vec<usize> = (0..n).filter(|&c| !is_parity[c]).collect();
        let kw = words(info_positions.len());
        let generator = h
            .iter()
            .map(|row| {
                let mut g = vec![0u64; kw];
                for (j, &c) in info_positions.iter().enumerate() {
                    if row[c / 64] >> (c % 64) & 1 == 1 {
                        g[j / 64] |= 1 << (j % 64);
                    }
                }
                g
            })
            .collect();

        let mut edge_var = Vec::with_capacity(pc.edges());
        let mut row_start = vec![0];
        let mut var_edges = vec![Vec::new(); n];
        for row in pc.rows() {
            for &v in row {
                var_edges[v].push(edge_var.len());
                edge_var.push(v);
            }
            row_start.push(edge_var.len());
        }
        Ok(LdpcCode {
            pc,
            info_positions,
            parity_positions: pivots,
            generator,
            edge_var,
            row_start,
            var_edges,
        })
    }

    pub fn from_alist(text: &str) -> Result<Self> {
        Self::new(ParityCheck::parse_alist(text)?)
    }

    pub fn n(&self) -> usize {
        self.pc.n()
    }

    pub fn k(&self) -> usize {
        self.info_positions.len()
    }

    pub fn rate(&self) -> f64 {
        self.k() as f64 / self.n() as f64
    }

    pub fn parity_check(&self) -> &ParityCheck {
        &self.pc
    }

    pub fn info_positions(&self) -> &[usize] {
        &self.info_positions
    }

    pub fn encode(&self, info: &[u8]) -> Result<Vec<u8>> {
        if info.len() != self.k() {
            return Err(Error::Usage(format!(
                "{} information bits for a code of dimension {}",
                info.len(),
                self.k()
            )));
        }
        let mut packed = vec![0u64; words(info.len())];
        for (j, &b) in info.iter().enumerate() {
            packed[j / 64] |= ((b & 1) as u64) << (j % 64);
        }
        let mut cw = vec![0u8; self.n()];
        for (&pos, &b) in self.info_positions.iter().zip(info) {
            cw[pos] = b & 1;
        }
        for (&pos, g) in self.parity_positions.iter().zip(&self.generator) {
            let ones: u32 = g.iter().zip(&packed).map(|(a, b)| (a & b).count_ones()).sum();
            cw[pos] = (ones & 1) as u8;
        }
        Ok(cw)
    }

    /// Normalized min-sum with a flooding schedule. LLRs are positive for
    /// bit 0. Stops early once every check is satisfied.
    pub fn decode(&self, llrs: &[f64], max_iters: usize) -> Result<Decoded> {
        if llrs.len() != self.n() {
            return Err(Error::Usage(format!(
                "{} LLRs for a code of length {}",
                llrs.len(),
                self.n()
            )));
        }
        let e = self.edge_var.len();
        let mut v2c: Vec<f64> = self.edge_var.iter().map(|&v| llrs[v]).collect();
        let mut c2v = vec![0.0; e];
        let mut total = llrs.to_vec();
        let mut hard: Vec<u8> = total.iter().map(|&t| u8::from(t < 0.0)).collect();
        let mut ok = self.decided(&total, &hard);
        let mut iterations = 0;
        while !ok && iterations < max_iters {
            iterations += 1;
            for r in 0..self.pc.m() {
                let edges = self.row_start[r]..self.row_start[r + 1];
                let (mut min1, mut min2, mut arg, mut sign) = (f64::INFINITY, f64::INFINITY, 0, false);
                for ei in edges.clone() {
                    let x = v2c[ei];
                    sign ^= x < 0.0;
                    let a = x.abs();
                    if a < min1 {
                        min2 = min1;
                        min1 = a;
                        arg = ei;
                    } else if a < min2 {
                        min2 = a;
                    }
                }
                for ei in edges {
                    let mag = if ei == arg { min2 } else { min1 };
                    let neg = sign ^ (v2c[ei] < 0.0);
                    c2v[ei] = if neg { -MIN_SUM_FACTOR * mag } else { MIN_SUM_FACTOR * mag };
                }
            }
            for (v, edges) in self.var_edges.iter().enumerate() {
                let t = llrs[v] + edges.iter().map(|&ei| c2v[ei]).sum::<f64>();
                total[v] = t;
                hard[v] = u8::from(t < 0.0);
                for &ei in edges {
                    v2c[ei] = t - c2v[ei];
                }
            }
            ok = self.decided(&total, &hard);
        }
        Ok(Decoded {
            info_bits: self.info_positions.iter().map(|&p| hard[p]).collect(),
            codeword: hard,
            parity_ok: ok,
            iterations,
        })
    }

    fn decided(&self, total: &[f64], hard: &[u8]) -> bool {
        total.iter().all(|&t| t != 0.0) && self.pc.syndrome_ok(hard)
    }
}
