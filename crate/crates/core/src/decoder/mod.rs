//! Message-passing decoding of the coded component and BER simulation.
//!
//! Messages are LLRs, positive favouring bit 0.

mod sim;

pub use sim::{
    iteration_trace, offset_sweep, simulate_ber, write_ber_csv, SimReport, StopRule,
};

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::codegen::SparseParityCheck;
use crate::llr::from_half_tanh;
use crate::{Error, Result};

/// Default offset for offset min-sum.
pub const DEFAULT_OFFSET: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    SumProduct,
    OffsetMinSum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Schedule {
    Flooding,
    Layered,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::SumProduct => "sum-product",
            Algorithm::OffsetMinSum => "offset-min-sum",
        }
    }
}

impl Schedule {
    pub fn name(self) -> &'static str {
        match self {
            Schedule::Flooding => "flooding",
            Schedule::Layered => "layered",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecodeConfig {
    pub algorithm: Algorithm,
    pub schedule: Schedule,
    /// Zero means hard decisions on the channel LLRs.
    pub max_iters: usize,
    /// Min-sum only.
    pub offset: f64,
    pub early_stop: bool,
    /// Record the variable-to-check message error after every iteration.
    pub trace: bool,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::SumProduct,
            schedule: Schedule::Flooding,
            max_iters: 9,
            offset: DEFAULT_OFFSET,
            early_stop: true,
            trace: false,
        }
    }
}

impl DecodeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.offset >= 0.0) || !self.offset.is_finite() {
            return Err(Error::Config(format!("offset must be nonnegative, got {}", self.offset)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecodeResult {
    pub bits: Vec<u8>,
    pub iterations: usize,
    /// All checks satisfied by `bits`.
    pub converged: bool,
    /// `trace[t]`: fraction of variable-to-check messages (degree ≥ 2
    /// variables only) with the wrong sign after `t` iterations, assuming the
    /// all-zero codeword. Ties count one half.
    pub trace: Option<Vec<f64>>,
}

/// Edge-indexed Tanner graph shared by decoders.
#[derive(Debug, Clone)]
pub struct TannerGraph {
    n: usize,
    m: usize,
    row_ptr: Vec<usize>,
    edge_col: Vec<u32>,
    col_ptr: Vec<usize>,
    col_edges: Vec<u32>,
    layers: Vec<Vec<usize>>,
    /// Edges whose variable has degree ≥ 2.
    traced: Vec<u32>,
}

impl TannerGraph {
    pub fn new(h: &SparseParityCheck) -> Self {
        let (m, n) = (h.n_rows(), h.n_cols());
        let mut row_ptr = Vec::with_capacity(m + 1);
        let mut edge_col = Vec::with_capacity(h.n_edges());
        row_ptr.push(0);
        for r in 0..m {
            edge_col.extend_from_slice(h.row(r));
            row_ptr.push(edge_col.len());
        }
        let mut by_col: Vec<Vec<u32>> = vec![Vec::new(); n];
        for (e, &c) in edge_col.iter().enumerate() {
            by_col[c as usize].push(e as u32);
        }
        let mut col_ptr = Vec::with_capacity(n + 1);
        let mut col_edges = Vec::with_capacity(edge_col.len());
        col_ptr.push(0);
        for list in &by_col {
            col_edges.extend_from_slice(list);
            col_ptr.push(col_edges.len());
        }
        let traced = (0..edge_col.len() as u32)
            .filter(|&e| by_col[edge_col[e as usize] as usize].len() >= 2)
            .collect();
        Self {
            n,
            m,
            row_ptr,
            edge_col,
            col_ptr,
            col_edges,
            layers: h.layers(),
            traced,
        }
    }

    pub fn n_cols(&self) -> usize {
        self.n
    }

    pub fn n_layers(&self) -> usize {
        self.layers.len()
    }

    fn row_edges(&self, r: usize) -> std::ops::Range<usize> {
        self.row_ptr[r]..self.row_ptr[r + 1]
    }

    fn col_edge_list(&self, c: usize) -> &[u32] {
        &self.col_edges[self.col_ptr[c]..self.col_ptr[c + 1]]
    }

    fn syndrome_ok(&self, post: &[f64]) -> bool {
        (0..self.m).all(|r| {
            self.row_edges(r)
                .filter(|&e| post[self.edge_col[e] as usize] < 0.0)
                .count()
                % 2
                == 0
        })
    }
}

/// Reusable decoder state for one graph and configuration.
#[derive(Debug, Clone)]
pub struct Decoder {
    graph: Arc<TannerGraph>,
    cfg: DecodeConfig,
    c2v: Vec<f64>,
    v2c: Vec<f64>,
    post: Vec<f64>,
    scratch_in: Vec<f64>,
    scratch_out: Vec<f64>,
}

impl Decoder {
    pub fn new(graph: Arc<TannerGraph>, cfg: DecodeConfig) -> Result<Self> {
        cfg.validate()?;
        let e = graph.edge_col.len();
        let n = graph.n;
        Ok(Self {
            graph,
            cfg,
            c2v: vec![0.0; e],
            v2c: vec![0.0; e],
            post: vec![0.0; n],
            scratch_in: Vec::new(),
            scratch_out: Vec::new(),
        })
    }

    pub fn config(&self) -> &DecodeConfig {
        &self.cfg
    }

    /// Posterior LLRs left by the last call to [`Decoder::decode`].
    pub fn posteriors(&self) -> &[f64] {
        &self.post
    }

    pub fn decode(&mut self, llrs: &[f64]) -> Result<DecodeResult> {
        let g = Arc::clone(&self.graph);
        if llrs.len() != g.n {
            return Err(Error::Dimension {
                expected: g.n,
                got: llrs.len(),
            });
        }
        self.c2v.iter_mut().for_each(|x| *x = 0.0);
        self.post.copy_from_slice(llrs);
        for (e, &c) in g.edge_col.iter().enumerate() {
            self.v2c[e] = llrs[c as usize];
        }
        let mut trace = self.cfg.trace.then(|| vec![self.message_error(&g)]);
        let mut iterations = 0;
        for _ in 0..self.cfg.max_iters {
            match self.cfg.schedule {
                Schedule::Flooding => self.flooding_iteration(&g, llrs),
                Schedule::Layered => self.layered_iteration(&g),
            }
            iterations += 1;
            if let Some(t) = trace.as_mut() {
                t.push(self.message_error(&g));
            }
            if self.cfg.early_stop && g.syndrome_ok(&self.post) {
                break;
            }
        }
        let converged = g.syndrome_ok(&self.post);
        let bits = self.post.iter().map(|&l| u8::from(l < 0.0)).collect();
        Ok(DecodeResult {
            bits,
            iterations,
            converged,
            trace,
        })
    }

    fn flooding_iteration(&mut self, g: &TannerGraph, llrs: &[f64]) {
        for r in 0..g.m {
            let range = g.row_edges(r);
            self.scratch_in.clear();
            self.scratch_in.extend_from_slice(&self.v2c[range.clone()]);
            check_update(self.cfg, &self.scratch_in, &mut self.scratch_out);
            self.c2v[range].copy_from_slice(&self.scratch_out);
        }
        for c in 0..g.n {
            let edges = g.col_edge_list(c);
            let total = llrs[c] + edges.iter().map(|&e| self.c2v[e as usize]).sum::<f64>();
            self.post[c] = total;
            for &e in edges {
                self.v2c[e as usize] = total - self.c2v[e as usize];
            }
        }
    }

    fn layered_iteration(&mut self, g: &TannerGraph) {
        for layer in &g.layers {
            for &r in layer {
                let range = g.row_edges(r);
                self.scratch_in.clear();
                for e in range.clone() {
                    let c = g.edge_col[e] as usize;
                    self.scratch_in.push(self.post[c] - self.c2v[e]);
                }
                check_update(self.cfg, &self.scratch_in, &mut self.scratch_out);
                for (k, e) in range.enumerate() {
                    let c = g.edge_col[e] as usize;
                    self.c2v[e] = self.scratch_out[k];
                    self.post[c] = self.scratch_in[k] + self.scratch_out[k];
                }
            }
        }
    }

    fn message_error(&self, g: &TannerGraph) -> f64 {
        if g.traced.is_empty() {
            return 0.0;
        }
        let mut err = 0.0;
        for &e in &g.traced {
            let e = e as usize;
            let v = self.post[g.edge_col[e] as usize] - self.c2v[e];
            if v < 0.0 {
                err += 1.0;
            } else if v == 0.0 {
                err += 0.5;
            }
        }
        err / g.traced.len() as f64
    }
}

/// Extrinsic check outputs for every input position.
fn check_update(cfg: DecodeConfig, input: &[f64], out: &mut Vec<f64>) {
    out.clear();
    match cfg.algorithm {
        Algorithm::SumProduct => {
            // Forward/backward products avoid dividing by a zero tanh.
            let d = input.len();
            out.resize(d, 1.0);
            let mut acc = 1.0;
            for k in 0..d {
                out[k] = acc;
                acc *= (0.5 * input[k]).tanh();
            }
            acc = 1.0;
            for k in (0..d).rev() {
                out[k] = from_half_tanh(out[k] * acc);
                acc *= (0.5 * input[k]).tanh();
            }
        }
        Algorithm::OffsetMinSum => {
            let mut neg = false;
            let (mut min1, mut min2, mut at) = (f64::INFINITY, f64::INFINITY, usize::MAX);
            for (k, &x) in input.iter().enumerate() {
                neg ^= x < 0.0;
                let a = x.abs();
                if a < min1 {
                    min2 = min1;
                    min1 = a;
                    at = k;
                } else if a < min2 {
                    min2 = a;
                }
            }
            for (k, &x) in input.iter().enumerate() {
                let mag = if k == at { min2 } else { min1 };
                let mag = (mag - cfg.offset).max(0.0);
                let sign_neg = neg ^ (x < 0.0);
                out.push(if sign_neg { -mag } else { mag });
            }
        }
    }
}

/// One-shot decode.
pub fn decode(h: &SparseParityCheck, llrs: &[f64], cfg: &DecodeConfig) -> Result<DecodeResult> {
    Decoder::new(Arc::new(TannerGraph::new(h)), *cfg)?.decode(llrs)
}

/// Exhaustive bitwise-MAP reference over a precomputed codebook.
/// Refuses codes with more than 2^20 codewords.
pub struct MapOracle {
    n: usize,
    words: Vec<Vec<u8>>,
}

impl MapOracle {
    pub fn new(h: &SparseParityCheck) -> Result<Self> {
        use crate::codegen::Encoder;
        let enc = Encoder::new(h);
        let k = enc.k();
        if k > 20 {
            return Err(Error::Domain(format!("{k} information bits is too many to enumerate")));
        }
        let words = (0u32..(1 << k))
            .map(|word| {
                let msg: Vec<u8> = (0..k).map(|i| ((word >> i) & 1) as u8).collect();
                enc.encode(h, &msg)
            })
            .collect::<Result<_>>()?;
        Ok(Self { n: h.n_cols(), words })
    }

    pub fn codewords(&self) -> usize {
        self.words.len()
    }

    pub fn decide(&self, llrs: &[f64]) -> Result<Vec<u8>> {
        if llrs.len() != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                got: llrs.len(),
            });
        }
        let metrics: Vec<f64> = self
            .words
            .iter()
            .map(|x| x.iter().zip(llrs).map(|(&b, &l)| if b == 0 { 0.5 * l } else { -0.5 * l }).sum())
            .collect();
        let top = metrics.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        // Likelihood mass with each bit at 0 and at 1, scaled by the best word.
        let mut zero = vec![0.0; self.n];
        let mut one = vec![0.0; self.n];
        for (x, &m) in self.words.iter().zip(&metrics) {
            let w = (m - top).exp();
            for i in 0..self.n {
                if x[i] == 0 {
                    zero[i] += w;
                } else {
                    one[i] += w;
                }
            }
        }
        Ok((0..self.n).map(|i| u8::from(one[i] > zero[i])).collect())
    }
}

/// Bitwise MAP decisions by enumerating every codeword. Reference only;
/// refuses codes with more than 2^20 codewords.
pub fn bitwise_map(h: &SparseParityCheck, llrs: &[f64]) -> Result<Vec<u8>> {
    MapOracle::new(h)?.decide(llrs)
}

#[cfg(test)]
mod tests;
