//! Parity-check matrices for the coded component.
//!
//! Degree-zero variables never appear here; `n_cols` counts coded bits only.

mod girth;
mod infoset;
mod qc;
mod random;

pub use girth::{girth, girth_brute_force, girth_from_roots, Girth};
pub use infoset::{info_set, Encoder, InfoSet};
pub use qc::{build_qc, contract_protograph, expand_protograph, QcBuild, QcProtograph};
pub use random::sample_random;

use std::io::{BufRead, Write};

use crate::ensemble::InnerEnsemble;
use crate::{Error, Result};

/// Sparse binary parity-check matrix with both adjacency views.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseParityCheck {
    n_rows: usize,
    n_cols: usize,
    /// Rows of each column, sorted.
    cols: Vec<Vec<u32>>,
    /// Columns of each row, sorted.
    rows: Vec<Vec<u32>>,
    info_set: Option<Vec<u32>>,
    /// Circulant size when the matrix is a QC lifting; rows of one block
    /// row form one decoding layer.
    block_size: Option<usize>,
}

impl SparseParityCheck {
    /// Build from `(row, col)` pairs. Duplicates are rejected.
    pub fn from_edges(
        n_rows: usize,
        n_cols: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let mut rows = vec![Vec::new(); n_rows];
        let mut cols = vec![Vec::new(); n_cols];
        for (r, c) in edges {
            if r >= n_rows || c >= n_cols {
                return Err(Error::Domain(format!(
                    "edge ({r}, {c}) outside {n_rows} x {n_cols}"
                )));
            }
            rows[r].push(c as u32);
            cols[c].push(r as u32);
        }
        for (r, list) in rows.iter_mut().enumerate() {
            list.sort_unstable();
            if list.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::Domain(format!("duplicate edge in row {r}")));
            }
        }
        for list in cols.iter_mut() {
            list.sort_unstable();
        }
        Ok(Self {
            n_rows,
            n_cols,
            cols,
            rows,
            info_set: None,
            block_size: None,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn n_edges(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn row(&self, r: usize) -> &[u32] {
        &self.rows[r]
    }

    pub fn col(&self, c: usize) -> &[u32] {
        &self.cols[c]
    }

    /// All edges as `(row, col)`, row-major.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(r, cs)| cs.iter().map(move |&c| (r, c as usize)))
    }

    pub fn contains(&self, r: usize, c: usize) -> bool {
        self.rows[r].binary_search(&(c as u32)).is_ok()
    }

    /// Count of columns per degree, index = degree.
    pub fn column_degree_histogram(&self) -> Vec<usize> {
        histogram(self.cols.iter().map(Vec::len))
    }

    pub fn row_degree_histogram(&self) -> Vec<usize> {
        histogram(self.rows.iter().map(Vec::len))
    }

    /// Edge-perspective variable distribution, index = degree.
    pub fn edge_lambda(&self) -> Vec<f64> {
        let e = self.n_edges().max(1) as f64;
        self.column_degree_histogram()
            .iter()
            .enumerate()
            .map(|(d, &n)| (d * n) as f64 / e)
            .collect()
    }

    /// L1 distance between the matrix's edge distribution and an ensemble's.
    pub fn lambda_distance(&self, ensemble: &InnerEnsemble) -> f64 {
        let got = self.edge_lambda();
        let n = got.len().max(ensemble.lambda.len());
        (1..n)
            .map(|i| {
                let a = got.get(i).copied().unwrap_or(0.0);
                let b = ensemble.lambda.get(i).copied().unwrap_or(0.0);
                (a - b).abs()
            })
            .sum()
    }

    pub fn info_set(&self) -> Option<&[u32]> {
        self.info_set.as_deref()
    }

    pub fn set_info_set(&mut self, cols: Vec<u32>) {
        self.info_set = Some(cols);
    }

    pub fn block_size(&self) -> Option<usize> {
        self.block_size
    }

    pub(crate) fn set_block_size(&mut self, z: usize) {
        self.block_size = Some(z);
    }

    /// Number of unsatisfied checks for a hard-decision word.
    pub fn syndrome_weight(&self, bits: &[u8]) -> usize {
        self.rows
            .iter()
            .filter(|cs| cs.iter().fold(0u8, |acc, &c| acc ^ (bits[c as usize] & 1)) != 0)
            .count()
    }

    pub fn is_codeword(&self, bits: &[u8]) -> bool {
        bits.len() == self.n_cols && self.syndrome_weight(bits) == 0
    }

    /// Row partition for layered decoding. QC liftings use their block rows;
    /// otherwise rows are packed greedily into column-disjoint layers.
    pub fn layers(&self) -> Vec<Vec<usize>> {
        if let Some(z) = self.block_size {
            return (0..self.n_rows)
                .collect::<Vec<_>>()
                .chunks(z)
                .map(<[usize]>::to_vec)
                .collect();
        }
        let mut layers: Vec<Vec<usize>> = Vec::new();
        let mut used: Vec<Vec<bool>> = Vec::new();
        for r in 0..self.n_rows {
            let cs = &self.rows[r];
            let slot = used
                .iter()
                .position(|u| cs.iter().all(|&c| !u[c as usize]));
            let k = match slot {
                Some(k) => k,
                None => {
                    layers.push(Vec::new());
                    used.push(vec![false; self.n_cols]);
                    layers.len() - 1
                }
            };
            layers[k].push(r);
            for &c in cs {
                used[k][c as usize] = true;
            }
        }
        layers
    }

    /// Coordinate text format: a header `n_rows n_cols n_edges`, then one
    /// `row col` pair per line. Blank lines and `#` comments are skipped on read.
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{} {} {}", self.n_rows, self.n_cols, self.n_edges())?;
        for (r, c) in self.edges() {
            writeln!(w, "{r} {c}")?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r
            .lines()
            .enumerate()
            .filter(|(_, l)| l.as_ref().map_or(true, |s| !skip_line(s)));
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::Parse("empty matrix file".into()))?;
        let header = parse_numbers(&header?, 3, 1)?;
        let (n_rows, n_cols, n_edges) = (header[0], header[1], header[2]);
        let mut edges = Vec::with_capacity(n_edges);
        for (k, line) in lines {
            let v = parse_numbers(&line?, 2, k + 1)?;
            edges.push((v[0], v[1]));
        }
        if edges.len() != n_edges {
            return Err(Error::Parse(format!(
                "header promises {n_edges} edges, found {}",
                edges.len()
            )));
        }
        Self::from_edges(n_rows, n_cols, edges)
    }
}

fn histogram(degrees: impl Iterator<Item = usize>) -> Vec<usize> {
    let mut h = Vec::new();
    for d in degrees {
        if h.len() <= d {
            h.resize(d + 1, 0);
        }
        h[d] += 1;
    }
    h
}

pub(crate) fn skip_line(s: &str) -> bool {
    let t = s.trim();
    t.is_empty() || t.starts_with('#')
}

fn parse_numbers(line: &str, want: usize, line_no: usize) -> Result<Vec<usize>> {
    let v: std::result::Result<Vec<usize>, _> = line.split_whitespace().map(str::parse).collect();
    match v {
        Ok(v) if v.len() == want => Ok(v),
        _ => Err(Error::Parse(format!(
            "line {line_no}: expected {want} nonnegative integers, got {line:?}"
        ))),
    }
}

/// Largest-remainder rounding of `total * weights` to integers summing to `total`.
pub(crate) fn largest_remainder(weights: &[f64], total: usize) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    if sum <= 0.0 {
        return vec![0; weights.len()];
    }
    let exact: Vec<f64> = weights.iter().map(|w| w / sum * total as f64).collect();
    let mut out: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
    let mut short = total - out.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = exact[a] - exact[a].floor();
        let fb = exact[b] - exact[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &i in order.iter().cycle() {
        if short == 0 {
            break;
        }
        if weights[i] > 0.0 {
            out[i] += 1;
            short -= 1;
        }
    }
    out
}
