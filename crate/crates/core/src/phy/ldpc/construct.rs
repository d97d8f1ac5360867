//! Progressive-edge-growth construction of systematic codes with a
//! dual-diagonal parity part.
//!
//! Columns `0..k` are information bits. Each gets `info_weight` edges placed
//! one at a time: the first goes to a lowest-degree check, later ones to a
//! lowest-degree check among those farthest from the variable in the
//! current graph (unreachable checks first). Parity column `k + i` touches
//! checks `i` and `i + 1` (the last one only check `m - 1`), so the parity
//! part can be solved by back-substitution.

use std::collections::VecDeque;

use rand::Rng;

use super::alist::ParityCheck;
use crate::error::{Error, Result};
use crate::rng::{stream, Domain};

pub fn peg_staircase(n: usize, k: usize, info_weight: usize, seed: u64) -> Result<ParityCheck> {
    if k >= n || info_weight == 0 || info_weight > n - k {
        return Err(Error::Config(format!(
            "cannot build ({n}, {k}) code with info weight {info_weight}"
        )));
    }
    let m = n - k;
    let mut rng = stream(seed, Domain::Test, &[n as u64, k as u64]);
    let mut var_checks: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut check_vars: Vec<Vec<usize>> = vec![Vec::new(); m];
    for i in 0..m {
        let v = k + i;
        let mut cs = vec![i];
        if i + 1 < m {
            cs.push(i + 1);
        }
        for c in cs {
            var_checks[v].push(c);
            check_vars[c].push(v);
        }
    }

    let mut depth = vec![usize::MAX; m];
    let mut var_seen = vec![false; n];
    let mut queue = VecDeque::new();
    for v in 0..k {
        for _ in 0..info_weight {
            let candidates: Vec<usize> = if var_checks[v].is_empty() {
                (0..m).collect()
            } else {
                depth.fill(usize::MAX);
                var_seen.fill(false);
                var_seen[v] = true;
                queue.clear();
                for &c in &var_checks[v] {
                    depth[c] = 0;
                    queue.push_back(c);
                }
                while let Some(c) = queue.pop_front() {
                    for &u in &check_vars[c] {
                        if var_seen[u] {
                            continue;
                        }
                        var_seen[u] = true;
                        for &c2 in &var_checks[u] {
                            if depth[c2] == usize::MAX {
                                depth[c2] = depth[c] + 1;
                                queue.push_back(c2);
                            }
                        }
                    }
                }
                let far = *depth.iter().max().expect("m > 0");
                (0..m)
                    .filter(|&c| depth[c] == far && !var_checks[v].contains(&c))
                    .collect()
            };
            let min_deg = candidates.iter().map(|&c| check_vars[c].len()).min().expect("candidate");
            let best: Vec<usize> = candidates.into_iter().filter(|&c| check_vars[c].len() == min_deg).collect();
            let c = best[rng.random_range(0..best.len())];
            var_checks[v].push(c);
            check_vars[c].push(v);
        }
    }
    ParityCheck::from_rows(n, check_vars)
}
