use std::collections::VecDeque;

use serde::Serialize;

use super::SparseParityCheck;
use crate::{Error, Result};

/// Information set of a parity-check matrix and the rank it implies.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InfoSet {
    /// Sorted information columns, `n - rank` of them.
    pub columns: Vec<u32>,
    pub rank: usize,
    pub n: usize,
    /// Rows that are linear combinations of the others.
    pub redundant_rows: usize,
}

impl InfoSet {
    pub fn k(&self) -> usize {
        self.columns.len()
    }

    /// `1 - rank/n`.
    pub fn rate(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            1.0 - self.rank as f64 / self.n as f64
        }
    }
}

/// Elimination record. Peeled pivots form a triangular block; the rows left
/// over are reduced densely.
#[derive(Debug, Clone)]
struct Elimination {
    /// `(row, col)` in pivot order. Column `k` appears in no row peeled
    /// after pivot `k`.
    peeled: Vec<(u32, u32)>,
    /// Dense pivots: column and the free columns it equals the sum of.
    dense: Vec<(u32, Vec<u32>)>,
    info: InfoSet,
}

fn eliminate(h: &SparseParityCheck) -> Elimination {
    let n = h.n_cols();
    let m = h.n_rows();
    let mut row_live = vec![true; m];
    let mut is_pivot = vec![false; n];
    let mut count: Vec<usize> = (0..n).map(|c| h.col(c).len()).collect();
    let mut queue: VecDeque<usize> = (0..n).filter(|&c| count[c] == 1).collect();
    let mut peeled = Vec::new();
    while let Some(c) = queue.pop_front() {
        if count[c] != 1 || is_pivot[c] {
            continue;
        }
        let r = h.col(c).iter().map(|&r| r as usize).find(|&r| row_live[r]);
        let Some(r) = r else { continue };
        row_live[r] = false;
        is_pivot[c] = true;
        peeled.push((r as u32, c as u32));
        for &c2 in h.row(r) {
            let c2 = c2 as usize;
            count[c2] -= 1;
            if count[c2] == 1 && !is_pivot[c2] {
                queue.push_back(c2);
            }
        }
    }

    // Remaining rows only touch columns that are still live in at least two of them.
    let rest: Vec<usize> = (0..m).filter(|&r| row_live[r]).collect();
    let mut local = vec![u32::MAX; n];
    let mut dense_cols: Vec<u32> = Vec::new();
    for &r in &rest {
        for &c in h.row(r) {
            if local[c as usize] == u32::MAX {
                local[c as usize] = dense_cols.len() as u32;
                dense_cols.push(c);
            }
        }
    }
    let words = dense_cols.len().div_ceil(64);
    let mut bits: Vec<Vec<u64>> = rest
        .iter()
        .map(|&r| {
            let mut v = vec![0u64; words];
            for &c in h.row(r) {
                let j = local[c as usize] as usize;
                v[j / 64] |= 1 << (j % 64);
            }
            v
        })
        .collect();
    let mut pivot_cols = Vec::new();
    let mut rank = 0;
    for j in 0..dense_cols.len() {
        let (w, b) = (j / 64, 1u64 << (j % 64));
        let Some(p) = (rank..bits.len()).find(|&i| bits[i][w] & b != 0) else {
            continue;
        };
        bits.swap(rank, p);
        let pivot = bits[rank].clone();
        for (i, row) in bits.iter_mut().enumerate() {
            if i != rank && row[w] & b != 0 {
                for (x, y) in row.iter_mut().zip(&pivot) {
                    *x ^= y;
                }
            }
        }
        pivot_cols.push(j);
        rank += 1;
    }
    let mut dense = Vec::with_capacity(rank);
    for (k, &j) in pivot_cols.iter().enumerate() {
        let c = dense_cols[j];
        is_pivot[c as usize] = true;
        let free: Vec<u32> = (0..dense_cols.len())
            .filter(|&i| i != j && bits[k][i / 64] & (1 << (i % 64)) != 0)
            .map(|i| dense_cols[i])
            .collect();
        dense.push((c, free));
    }

    let total_rank = peeled.len() + rank;
    let columns: Vec<u32> = (0..n as u32).filter(|&c| !is_pivot[c as usize]).collect();
    Elimination {
        peeled,
        dense,
        info: InfoSet {
            columns,
            rank: total_rank,
            n,
            redundant_rows: m - total_rank,
        },
    }
}

/// Information set by elimination over GF(2).
pub fn info_set(h: &SparseParityCheck) -> InfoSet {
    eliminate(h).info
}

/// Systematic encoder: information bits are placed on the information set
/// and the remaining columns are solved for.
#[derive(Debug, Clone)]
pub struct Encoder {
    elim: Elimination,
    n: usize,
}

impl Encoder {
    pub fn new(h: &SparseParityCheck) -> Self {
        Self {
            elim: eliminate(h),
            n: h.n_cols(),
        }
    }

    pub fn info(&self) -> &InfoSet {
        &self.elim.info
    }

    pub fn k(&self) -> usize {
        self.elim.info.k()
    }

    pub fn encode(&self, h: &SparseParityCheck, message: &[u8]) -> Result<Vec<u8>> {
        if message.len() != self.k() {
            return Err(Error::Dimension {
                expected: self.k(),
                got: message.len(),
            });
        }
        if h.n_cols() != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                got: h.n_cols(),
            });
        }
        let mut x = vec![0u8; self.n];
        for (&c, &b) in self.elim.info.columns.iter().zip(message) {
            x[c as usize] = b & 1;
        }
        for (c, free) in &self.elim.dense {
            x[*c as usize] = free.iter().fold(0, |acc, &f| acc ^ x[f as usize]);
        }
        for &(r, c) in self.elim.peeled.iter().rev() {
            x[c as usize] = h
                .row(r as usize)
                .iter()
                .filter(|&&o| o != c)
                .fold(0, |acc, &o| acc ^ x[o as usize]);
        }
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use proptest::prelude::*;
    use rand::Rng;

    fn dense_rank(h: &SparseParityCheck) -> usize {
        let mut rows: Vec<Vec<u8>> = (0..h.n_rows())
            .map(|r| {
                let mut v = vec![0u8; h.n_cols()];
                for &c in h.row(r) {
                    v[c as usize] = 1;
                }
                v
            })
            .collect();
        let mut rank = 0;
        for j in 0..h.n_cols() {
            if let Some(p) = (rank..rows.len()).find(|&i| rows[i][j] == 1) {
                rows.swap(rank, p);
                let pivot = rows[rank].clone();
                for (i, row) in rows.iter_mut().enumerate() {
                    if i != rank && row[j] == 1 {
                        for (x, y) in row.iter_mut().zip(&pivot) {
                            *x ^= y;
                        }
                    }
                }
                rank += 1;
            }
        }
        rank
    }

    #[test]
    fn identity_has_empty_info_set() {
        let h = SparseParityCheck::from_edges(5, 5, (0..5).map(|i| (i, i))).unwrap();
        let s = info_set(&h);
        assert!(s.columns.is_empty());
        assert_eq!(s.rank, 5);
        assert_eq!(s.rate(), 0.0);
    }

    #[test]
    fn single_parity_check() {
        let h = SparseParityCheck::from_edges(1, 3, [(0, 0), (0, 1), (0, 2)]).unwrap();
        let s = info_set(&h);
        assert_eq!(s.k(), 2);
        let enc = Encoder::new(&h);
        for m in 0..4u8 {
            let x = enc.encode(&h, &[m & 1, m >> 1]).unwrap();
            assert!(h.is_codeword(&x));
        }
    }

    #[test]
    fn redundant_row_is_reported() {
        let h = SparseParityCheck::from_edges(
            3,
            4,
            [(0, 0), (0, 1), (1, 2), (1, 3), (2, 0), (2, 1), (2, 2), (2, 3)],
        )
        .unwrap();
        let s = info_set(&h);
        assert_eq!(s.rank, 2);
        assert_eq!(s.redundant_rows, 1);
        assert_eq!(s.k(), 2);
    }

    fn random_matrix(seed: u64, rows: usize, cols: usize, p: f64) -> SparseParityCheck {
        let mut r = rng::keyed(seed, rng::stream::CODEGEN, 7);
        let edges: Vec<(usize, usize)> = (0..rows)
            .flat_map(|i| (0..cols).map(move |j| (i, j)))
            .filter(|_| r.random::<f64>() < p)
            .collect();
        SparseParityCheck::from_edges(rows, cols, edges).unwrap()
    }

    proptest! {
        #[test]
        fn rank_matches_dense_and_encoder_hits_codewords(
            seed in 0u64..1_000_000, rows in 1usize..20, cols in 1usize..30, p in 0.02f64..0.5
        ) {
            let h = random_matrix(seed, rows, cols, p);
            let s = info_set(&h);
            prop_assert_eq!(s.rank, dense_rank(&h));
            prop_assert_eq!(s.k(), cols - s.rank);
            let enc = Encoder::new(&h);
            let mut r = rng::keyed(seed, rng::stream::CODEGEN, 8);
            let msg: Vec<u8> = (0..enc.k()).map(|_| r.random::<u8>() & 1).collect();
            let x = enc.encode(&h, &msg).unwrap();
            prop_assert!(h.is_codeword(&x));
            for (&c, &b) in s.columns.iter().zip(&msg) {
                prop_assert_eq!(x[c as usize], b);
            }
        }
    }
}
