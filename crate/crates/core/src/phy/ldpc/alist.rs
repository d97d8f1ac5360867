//! Reading and writing the alist sparse parity-check format.

use crate::error::{Error, Result};

/// Sparse binary parity-check matrix, stored both ways.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParityCheck {
    n: usize,
    /// Column indices of each check row, ascending.
    rows: Vec<Vec<usize>>,
}

impl ParityCheck {
    pub fn from_rows(n: usize, mut rows: Vec<Vec<usize>>) -> Result<Self> {
        for (r, row) in rows.iter_mut().enumerate() {
            row.sort_unstable();
            if row.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::Config(format!("check {r} lists a variable twice")));
            }
            if row.last().is_some_and(|&c| c >= n) {
                return Err(Error::Config(format!("check {r} references a variable outside 0..{n}")));
            }
        }
        Ok(ParityCheck { n, rows })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.rows
    }

    pub fn columns(&self) -> Vec<Vec<usize>> {
        let mut cols = vec![Vec::new(); self.n];
        for (r, row) in self.rows.iter().enumerate() {
            for &c in row {
                cols[c].push(r);
            }
        }
        cols
    }

    pub fn edges(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// True when every check is satisfied by `bits`.
    pub fn syndrome_ok(&self, bits: &[u8]) -> bool {
        bits.len() == self.n && self.rows.iter().all(|row| row.iter().fold(0u8, |a, &c| a ^ bits[c]) == 0)
    }

    pub fn parse_alist(text: &str) -> Result<Self> {
        let mut tok = text.split_whitespace().map(|t| {
            t.parse::<usize>()
                .map_err(|_| Error::Config(format!("alist: bad integer {t:?}")))
        });
        let mut next = || tok.next().unwrap_or_else(|| Err(Error::Config("alist: truncated".into())));
        let n = next()?;
        let m = next()?;
        let max_col = next()?;
        let max_row = next()?;
        let col_deg: Vec<usize> = (0..n).map(|_| next()).collect::<Result<_>>()?;
        let row_deg: Vec<usize> = (0..m).map(|_| next()).collect::<Result<_>>()?;
        let mut col_lists = Vec::with_capacity(n);
        for &d in &col_deg {
            let entries: Vec<usize> = (0..max_col).map(|_| next()).collect::<Result<_>>()?;
            col_lists.push(entries.into_iter().filter(|&e| e != 0).collect::<Vec<_>>());
            if col_lists.last().map(Vec::len) != Some(d) {
                return Err(Error::Config("alist: column degree disagrees with its list".into()));
            }
        }
        let mut rows = Vec::with_capacity(m);
        for &d in &row_deg {
            let entries: Vec<usize> = (0..max_row).map(|_| next()).collect::<Result<_>>()?;
            let row: Vec<usize> = entries.into_iter().filter(|&e| e != 0).map(|e| e - 1).collect();
            if row.len() != d {
                return Err(Error::Config("alist: row degree disagrees with its list".into()));
            }
            rows.push(row);
        }
        let pc = ParityCheck::from_rows(n, rows)?;
        let cols = pc.columns();
        for (c, list) in col_lists.iter().enumerate() {
            let mut one_based: Vec<usize> = cols[c].iter().map(|r| r + 1).collect();
            let mut listed = list.clone();
            one_based.sort_unstable();
            listed.sort_unstable();
            if one_based != listed {
                return Err(Error::Config(format!("alist: column {c} disagrees with row lists")));
            }
        }
        Ok(pc)
    }

    pub fn to_alist(&self) -> String {
        let cols = self.columns();
        let max_col = cols.iter().map(Vec::len).max().unwrap_or(0);
        let max_row = self.rows.iter().map(Vec::len).max().unwrap_or(0);
        let line = |v: &[usize], width: usize| {
            let mut items: Vec<String> = v.iter().map(|x| (x + 1).to_string()).collect();
            items.resize(width, "0".into());
            items.join(" ")
        };
        let mut out = format!("{} {}\n{} {}\n", self.n, self.m(), max_col, max_row);
        let degs = |lists: &[Vec<usize>]| lists.iter().map(|l| l.len().to_string()).collect::<Vec<_>>().join(" ");
        out.push_str(&degs(&cols));
        out.push('\n');
        out.push_str(&degs(&self.rows));
        out.push('\n');
        for c in &cols {
            out.push_str(&line(c, max_col));
            out.push('\n');
        }
        for r in &self.rows {
            out.push_str(&line(r, max_row));
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hamming_round_trip() {
        let pc = ParityCheck::from_rows(7, vec![vec![0, 1, 2, 4], vec![1, 2, 3, 5], vec![0, 2, 3, 6]]).unwrap();
        let text = pc.to_alist();
        assert!(text.starts_with("7 3\n3 4\n"));
        assert_eq!(ParityCheck::parse_alist(&text).unwrap(), pc);
        assert!(pc.syndrome_ok(&[0; 7]));
        assert!(!pc.syndrome_ok(&[1, 0, 0, 0, 0, 0, 0]));
    }

    #[test]
    fn malformed_inputs_are_config_errors() {
        assert!(ParityCheck::parse_alist("3 1\n1 3").is_err());
        assert!(ParityCheck::parse_alist("2 1\n1 2\n1 1\n2\n1\n1\n1 3").is_err());
        assert!(ParityCheck::from_rows(3, vec![vec![0, 0]]).is_err());
    }
}
