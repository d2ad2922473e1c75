//! The concatenated system: rate bookkeeping, diagonal interleaving between
//! inner codewords and staircase blocks, and threshold adjudication of the
//! outer code.

use std::io::{BufReader, Write};
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::channel::{shannon_limit_db, snr_at_gap};
use crate::codegen::{build_qc, sample_random, QcProtograph, SparseParityCheck};
use crate::decoder::{simulate_ber, DecodeConfig, SimReport, StopRule};
use crate::ensemble::{default_outer_table, examples, inner_complexity, total_complexity, InnerEnsemble, StaircaseSpec};
use crate::{Error, Result};

/// Packing ratios below this show measurable interleaving loss.
pub const MIN_RECOMMENDED_PACKING: usize = 4;
const RATE_TOL: f64 = 1e-9;

fn check_rate(r: f64, what: &str, closed_top: bool) -> Result<()> {
    let ok = r > 0.0 && (r < 1.0 || (closed_top && r == 1.0));
    if ok {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what} = {r} outside (0, 1)")))
    }
}

/// Overall rate of an inner code of rate `r_in` under an outer code of rate
/// `r_sc`. An outer rate of exactly 1 means no outer code.
pub fn compose_rates(r_in: f64, r_sc: f64) -> Result<f64> {
    check_rate(r_in, "r_in", true)?;
    check_rate(r_sc, "r_sc", true)?;
    Ok(r_in * r_sc)
}

/// Inner rate needed to reach `r_cat` under an outer code of rate `r_sc`.
pub fn required_inner_rate(r_cat: f64, r_sc: f64) -> Result<f64> {
    check_rate(r_cat, "r_cat", false)?;
    check_rate(r_sc, "r_sc", true)?;
    let r_in = r_cat / r_sc;
    if r_in >= 1.0 {
        return Err(Error::InfeasibleRate(format!(
            "r_cat {r_cat} needs inner rate {r_in:.6} under outer rate {r_sc}"
        )));
    }
    Ok(r_in)
}

/// Maps the `m` inner codewords of one staircase block onto its `M x M`
/// cells.
///
/// The block is cut into its `M` wrapped diagonals, diagonal `d` holding
/// cells `(r, (r + d) mod M)`. With `k_in = F M + l`, codeword `j` fills the
/// whole diagonals `j F .. j F + F` in row order, and its last `l` bits go
/// to the remaining diagonals, which are filled in codeword order. Each
/// codeword then meets every block row and column at most `ceil(k_in / M)`
/// times.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiagonalInterleaver {
    side: usize,
    packing: usize,
    k_in: usize,
    /// `perm[j * k_in + t]` is the row-major cell of bit `t` of codeword `j`.
    perm: Vec<u32>,
}

impl DiagonalInterleaver {
    pub fn new(side: usize, packing: usize) -> Result<Self> {
        let block = side * side;
        if side == 0 || packing == 0 || block % packing != 0 {
            return Err(Error::Domain(format!(
                "packing ratio {packing} does not divide the {side} x {side} block"
            )));
        }
        let k_in = block / packing;
        let (full, rest) = (k_in / side, k_in % side);
        let mut perm = Vec::with_capacity(block);
        for j in 0..packing {
            for t in 0..k_in {
                let (diag, row) = if t < full * side {
                    (j * full + t / side, t % side)
                } else {
                    let p = j * rest + (t - full * side);
                    (packing * full + p / side, p % side)
                };
                perm.push((row * side + (row + diag) % side) as u32);
            }
        }
        Ok(Self { side, packing, k_in, perm })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn packing(&self) -> usize {
        self.packing
    }

    pub fn k_in(&self) -> usize {
        self.k_in
    }

    /// `(row, col)` of bit `t` of codeword `j`.
    pub fn cell(&self, j: usize, t: usize) -> (usize, usize) {
        let c = self.perm[j * self.k_in + t] as usize;
        (c / self.side, c % self.side)
    }

    /// Codeword-major bits to the row-major block.
    pub fn interleave<T: Copy + Default>(&self, bits: &[T]) -> Result<Vec<T>> {
        self.check_len(bits.len())?;
        let mut out = vec![T::default(); bits.len()];
        for (&cell, &b) in self.perm.iter().zip(bits) {
            out[cell as usize] = b;
        }
        Ok(out)
    }

    pub fn deinterleave<T: Copy>(&self, block: &[T]) -> Result<Vec<T>> {
        self.check_len(block.len())?;
        Ok(self.perm.iter().map(|&cell| block[cell as usize]).collect())
    }

    /// Largest number of bits any one codeword places in a single block row
    /// or column.
    pub fn max_line_load(&self) -> usize {
        let mut worst = 0;
        let mut rows = vec![0usize; self.side];
        let mut cols = vec![0usize; self.side];
        for j in 0..self.packing {
            rows.iter_mut().chain(cols.iter_mut()).for_each(|x| *x = 0);
            for t in 0..self.k_in {
                let (r, c) = self.cell(j, t);
                rows[r] += 1;
                cols[c] += 1;
            }
            worst = worst.max(*rows.iter().chain(&cols).max().expect("side > 0"));
        }
        worst
    }

    fn check_len(&self, n: usize) -> Result<()> {
        if n != self.side * self.side {
            return Err(Error::Dimension { expected: self.side * self.side, got: n });
        }
        Ok(())
    }
}

/// An inner ensemble under a staircase outer code.
#[derive(Debug, Clone)]
pub struct ConcatSystem {
    pub ensemble: InnerEnsemble,
    pub outer: StaircaseSpec,
    pub r_cat: f64,
    pub k_in: usize,
    pub packing: usize,
    pub interleaver: DiagonalInterleaver,
}

impl ConcatSystem {
    pub fn new(ensemble: InnerEnsemble, outer: StaircaseSpec, packing: usize) -> Result<Self> {
        outer.validate()?;
        let r_cat = compose_rates(ensemble.r_in, outer.r_sc)?;
        let r_in = required_inner_rate(r_cat, outer.r_sc)?;
        if (r_in - ensemble.r_in).abs() > RATE_TOL {
            return Err(Error::Domain(format!("rate composition drifted: {r_in} vs {}", ensemble.r_in)));
        }
        let interleaver = DiagonalInterleaver::new(outer.block_side, packing)?;
        Ok(Self {
            k_in: interleaver.k_in(),
            packing,
            interleaver,
            ensemble,
            outer,
            r_cat,
        })
    }

    pub fn interleaving_ok(&self) -> bool {
        self.packing >= MIN_RECOMMENDED_PACKING
    }

    pub fn r_in(&self) -> f64 {
        self.ensemble.r_in
    }

    /// `eta_i` at `iters` iterations.
    pub fn inner_complexity(&self, iters: f64) -> f64 {
        let e = &self.ensemble;
        inner_complexity(e.r_in, e.dc_bar, e.nu, iters)
    }

    pub fn total_complexity(&self, iters: f64) -> f64 {
        total_complexity(self.inner_complexity(iters), self.outer.r_sc, self.outer.p_post)
    }
}

/// Information BER seen by the outer code: `uncoded` raw bits at `p0` next
/// to `coded` decoded information bits at `coded_ber`.
pub fn combined_information_ber(uncoded: f64, p0: f64, coded: f64, coded_ber: f64) -> f64 {
    let total = uncoded + coded;
    if total == 0.0 {
        return 0.0;
    }
    (uncoded * p0 + coded * coded_ber) / total
}

/// Uncoded bits that accompany a coded component of `n_c` bits.
pub fn uncoded_bits(l0: f64, n_c: usize) -> usize {
    (l0 / (1.0 - l0) * n_c as f64).round() as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Adjudication {
    pub ber: f64,
    pub threshold: f64,
    /// `threshold - ber`; negative on failure.
    pub margin: f64,
    pub pass: bool,
}

/// Ideal threshold decoder: passes iff `ber <= p_sc`.
pub fn adjudicate_ber(ber: f64, outer: &StaircaseSpec) -> Result<Adjudication> {
    if !ber.is_finite() || ber < 0.0 {
        return Err(Error::Domain(format!("BER {ber} is not a probability")));
    }
    Ok(Adjudication {
        ber,
        threshold: outer.p_sc,
        margin: outer.p_sc - ber,
        pass: ber <= outer.p_sc,
    })
}

/// Adjudicate a simulation of the coded component, adding the uncoded bits
/// of the ensemble at the raw channel error rate.
pub fn outer_adjudicate(report: &SimReport, l0: f64, outer: &StaircaseSpec) -> Result<Adjudication> {
    let n_u = uncoded_bits(l0, report.n_cols) as f64;
    let ber = combined_information_ber(n_u, report.p0, report.info_bits as f64, report.ber);
    adjudicate_ber(ber, outer)
}

/// A reference ensemble by name, or explicit node-perspective coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EnsembleRef {
    Named(String),
    Node { l: Vec<f64>, dc_bar: f64 },
}

impl EnsembleRef {
    pub fn resolve(&self) -> Result<InnerEnsemble> {
        match self {
            EnsembleRef::Named(name) => match name.as_str() {
                "example1" => Ok(examples::example1()),
                "example2" => Ok(examples::example2()),
                other => Err(Error::Config(format!("unknown ensemble {other:?}"))),
            },
            EnsembleRef::Node { l, dc_bar } => InnerEnsemble::from_node(l.clone(), *dc_bar),
        }
    }
}

/// A row of the built-in outer table by name, or a full row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OuterRef {
    Named(String),
    Spec(StaircaseSpec),
}

impl OuterRef {
    pub fn resolve(&self) -> Result<StaircaseSpec> {
        match self {
            OuterRef::Named(name) => default_outer_table()
                .into_iter()
                .find(|row| &row.name == name)
                .ok_or_else(|| Error::Config(format!("unknown outer code {name:?}"))),
            OuterRef::Spec(spec) => {
                spec.validate()?;
                Ok(spec.clone())
            }
        }
    }
}

fn default_girth() -> usize {
    8
}

/// Where the inner parity-check matrix comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CodeSource {
    Random { n_c: usize },
    Qc {
        target_n: usize,
        tolerance: f64,
        #[serde(default = "default_girth")]
        girth: usize,
    },
    /// Sparse coordinate text file.
    Matrix { path: PathBuf },
    /// Shift grid text file.
    Protograph { path: PathBuf },
}

impl CodeSource {
    pub fn realize(&self, ensemble: &InnerEnsemble, seed: u64) -> Result<SparseParityCheck> {
        let open = |p: &PathBuf| {
            std::fs::File::open(p)
                .map(BufReader::new)
                .map_err(|e| Error::Config(format!("{}: {e}", p.display())))
        };
        match self {
            CodeSource::Random { n_c } => sample_random(ensemble, *n_c, seed),
            CodeSource::Qc { target_n, tolerance, girth } => {
                Ok(build_qc(ensemble, *target_n, *tolerance, *girth, seed)?.matrix)
            }
            CodeSource::Matrix { path } => SparseParityCheck::read_text(open(path)?),
            CodeSource::Protograph { path } => QcProtograph::read_text(open(path)?)?.expand(),
        }
    }
}

fn default_packing() -> usize {
    8
}

fn default_workers() -> usize {
    1
}

/// One end-to-end evaluation: an ensemble, a code realizing it, an outer
/// code and a list of operating points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub outer: OuterRef,
    pub ensemble: EnsembleRef,
    pub code: CodeSource,
    /// Operating points in Es/N0 dB.
    #[serde(default)]
    pub snr_db: Vec<f64>,
    /// Operating points as gaps to the constrained limit at `r_cat`.
    #[serde(default)]
    pub gap_db: Vec<f64>,
    #[serde(default)]
    pub decoder: DecodeConfig,
    #[serde(default)]
    pub stop: StopRule,
    #[serde(default = "default_packing")]
    pub packing_ratio: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunPoint {
    pub snr_db: f64,
    pub gap_db: f64,
    pub sim: SimReport,
    /// BER over uncoded plus coded information bits.
    pub adjudication: Adjudication,
    /// `eta_i` at the mean number of iterations actually run.
    pub eta_i_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub outer: StaircaseSpec,
    pub ensemble: InnerEnsemble,
    pub r_in: f64,
    pub r_cat: f64,
    pub shannon_limit_db: f64,
    pub k_in: usize,
    pub packing_ratio: usize,
    pub interleaving_ok: bool,
    pub n_cols: usize,
    pub n_rows: usize,
    pub coded_info_bits: usize,
    pub uncoded_bits: usize,
    /// Complexity at the iteration limit.
    pub iters: usize,
    pub eta_i: f64,
    pub eta: f64,
    pub points: Vec<RunPoint>,
}

pub fn end_to_end_run(cfg: &RunConfig) -> Result<RunReport> {
    let ensemble = cfg.ensemble.resolve()?;
    let outer = cfg.outer.resolve()?;
    let h = cfg.code.realize(&ensemble, cfg.seed)?;
    end_to_end_with(cfg, ensemble, outer, &h)
}

/// As [`end_to_end_run`] with the code already built.
pub fn end_to_end_with(
    cfg: &RunConfig,
    ensemble: InnerEnsemble,
    outer: StaircaseSpec,
    h: &SparseParityCheck,
) -> Result<RunReport> {
    cfg.decoder.validate()?;
    let system = ConcatSystem::new(ensemble, outer, cfg.packing_ratio)?;
    let limit = shannon_limit_db(system.r_cat)?;
    let mut snrs = cfg.snr_db.clone();
    for &g in &cfg.gap_db {
        snrs.push(snr_at_gap(system.r_cat, g)?);
    }
    if snrs.is_empty() {
        return Err(Error::Config("no operating points given".into()));
    }
    let l0 = system.ensemble.l0();
    let mut points = Vec::with_capacity(snrs.len());
    for snr_db in snrs {
        let sim = simulate_ber(h, snr_db, &cfg.decoder, &cfg.stop, cfg.seed, cfg.workers)?;
        let adjudication = outer_adjudicate(&sim, l0, &system.outer)?;
        points.push(RunPoint {
            snr_db,
            gap_db: snr_db - limit,
            eta_i_mean: system.inner_complexity(sim.mean_iterations),
            adjudication,
            sim,
        });
    }
    let iters = cfg.decoder.max_iters;
    let info = points.first().map_or(0, |p| p.sim.info_bits);
    Ok(RunReport {
        r_in: system.r_in(),
        r_cat: system.r_cat,
        shannon_limit_db: limit,
        k_in: system.k_in,
        packing_ratio: system.packing,
        interleaving_ok: system.interleaving_ok(),
        n_cols: h.n_cols(),
        n_rows: h.n_rows(),
        coded_info_bits: info,
        uncoded_bits: uncoded_bits(l0, h.n_cols()),
        iters,
        eta_i: system.inner_complexity(iters as f64),
        eta: system.total_complexity(iters as f64),
        outer: system.outer,
        ensemble: system.ensemble,
        points,
    })
}

impl RunReport {
    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }

    /// Columns: snr_db, gap_db, frames, bits, errors, ber, ci95,
    /// combined_ber, margin, pass, mean_iters, eta_i_mean.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "snr_db", "gap_db", "frames", "bits", "errors", "ber", "ci95", "combined_ber", "margin", "pass",
            "mean_iters", "eta_i_mean",
        ])?;
        for p in &self.points {
            out.write_record([
                format!("{:.4}", p.snr_db),
                format!("{:.4}", p.gap_db),
                p.sim.frames.to_string(),
                p.sim.bits.to_string(),
                p.sim.errors.to_string(),
                format!("{:.6e}", p.sim.ber),
                format!("{:.6e}", p.sim.ci95),
                format!("{:.6e}", p.adjudication.ber),
                format!("{:.6e}", p.adjudication.margin),
                p.adjudication.pass.to_string(),
                format!("{:.3}", p.sim.mean_iterations),
                format!("{:.3}", p.eta_i_mean),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn twenty_percent_overhead() {
        let r = compose_rates(8.0 / 9.0, 15.0 / 16.0).unwrap();
        assert!((r - 5.0 / 6.0).abs() < 1e-15);
        assert_eq!(compose_rates(0.7, 1.0).unwrap(), 0.7);
        assert!((required_inner_rate(5.0 / 6.0, 15.0 / 16.0).unwrap() - 8.0 / 9.0).abs() < 1e-15);
        assert!(matches!(required_inner_rate(0.95, 0.9), Err(Error::InfeasibleRate(_))));
        assert!(matches!(required_inner_rate(0.9, 0.9), Err(Error::InfeasibleRate(_))));
        assert!(compose_rates(0.0, 0.5).is_err());
        assert!(compose_rates(0.5, 1.5).is_err());
    }

    #[test]
    fn rates_agree_both_ways() {
        for e in [examples::example1(), examples::example2()] {
            let s = ConcatSystem::new(e.clone(), StaircaseSpec::rate_15_16(), 8).unwrap();
            let direct = crate::ensemble::inner_rate(e.l0(), e.r_c) * s.outer.r_sc;
            assert!((s.r_cat - direct).abs() < 1e-9);
            assert!((s.r_in() * s.outer.r_sc - s.r_cat).abs() < 1e-12);
        }
    }

    #[test]
    fn packing_must_divide_block() {
        let e = examples::example1();
        let s = ConcatSystem::new(e.clone(), StaircaseSpec::rate_15_16(), 8).unwrap();
        assert_eq!(s.k_in, 704 * 704 / 8);
        assert!(s.interleaving_ok());
        assert!(!ConcatSystem::new(e.clone(), StaircaseSpec::rate_15_16(), 2).unwrap().interleaving_ok());
        assert!(ConcatSystem::new(e, StaircaseSpec::rate_15_16(), 7).is_err());
    }

    #[test]
    fn unit_codewords_fill_diagonals_in_order() {
        let il = DiagonalInterleaver::new(3, 9).unwrap();
        let cells: Vec<_> = (0..9).map(|j| il.cell(j, 0)).collect();
        assert_eq!(cells, vec![(0, 0), (1, 1), (2, 2), (0, 1), (1, 2), (2, 0), (0, 2), (1, 0), (2, 1)]);
        assert_eq!(il.max_line_load(), 1);
    }

    #[test]
    fn full_size_block() {
        let il = DiagonalInterleaver::new(704, 8).unwrap();
        assert_eq!(il.k_in(), 61952);
        assert_eq!(il.max_line_load(), 88);
        let bits: Vec<u32> = (0..704 * 704).collect();
        let block = il.interleave(&bits).unwrap();
        let mut sorted = block.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, bits);
        assert_eq!(il.deinterleave(&block).unwrap(), bits);
    }

    #[test]
    fn wrong_lengths() {
        assert!(DiagonalInterleaver::new(6, 5).is_err());
        assert!(DiagonalInterleaver::new(0, 1).is_err());
        let il = DiagonalInterleaver::new(4, 2).unwrap();
        assert!(il.interleave(&[0u8; 15]).is_err());
        assert!(il.deinterleave(&[0u8; 17]).is_err());
    }

    fn divisors(n: usize) -> Vec<usize> {
        (1..=n).filter(|d| n % d == 0).collect()
    }

    proptest! {
        #[test]
        fn interleaver_is_a_spreading_bijection(side in 1usize..40, pick in any::<prop::sample::Index>(), seed in any::<u64>()) {
            let ds = divisors(side * side);
            let m = ds[pick.index(ds.len())];
            let il = DiagonalInterleaver::new(side, m).unwrap();
            let mut image: Vec<u32> = il.perm.clone();
            image.sort_unstable();
            prop_assert!(image.iter().enumerate().all(|(i, &c)| i as u32 == c));
            prop_assert!(il.max_line_load() <= il.k_in().div_ceil(side));
            let data: Vec<u64> = (0..side * side as usize).map(|i| (i as u64).wrapping_mul(seed | 1)).collect();
            prop_assert_eq!(il.deinterleave(&il.interleave(&data).unwrap()).unwrap(), data);
        }
    }

    #[test]
    fn adjudication_is_inclusive_and_monotone() {
        let outer = StaircaseSpec::rate_15_16();
        let zero = adjudicate_ber(0.0, &outer).unwrap();
        assert!(zero.pass && zero.margin == outer.p_sc);
        let at = adjudicate_ber(outer.p_sc, &outer).unwrap();
        assert!(at.pass && at.margin == 0.0);
        let twice = adjudicate_ber(2.0 * outer.p_sc, &outer).unwrap();
        assert!(!twice.pass && twice.margin < 0.0);
        assert!(adjudicate_ber(f64::NAN, &outer).is_err());
        let mut last = true;
        for i in 0..200 {
            let a = adjudicate_ber(i as f64 * 1e-4, &outer).unwrap();
            assert!(last || !a.pass);
            last = a.pass;
        }
    }

    #[test]
    fn combined_ber_weights_uncoded_bits() {
        assert_eq!(combined_information_ber(0.0, 0.1, 10.0, 0.01), 0.01);
        assert!((combined_information_ber(1.0, 0.1, 3.0, 0.0) - 0.025).abs() < 1e-15);
        assert_eq!(combined_information_ber(0.0, 0.1, 0.0, 0.2), 0.0);
        assert_eq!(uncoded_bits(0.2, 100), 25);
    }

    #[test]
    fn refs_resolve() {
        let cfg: RunConfig = serde_json::from_str(
            r#"{"outer": "sc-15/16", "ensemble": "example1", "code": {"kind": "random", "n_c": 1000},
                "gap_db": [1.27], "seed": 3}"#,
        )
        .unwrap();
        assert_eq!(cfg.outer.resolve().unwrap(), StaircaseSpec::rate_15_16());
        assert_eq!(cfg.ensemble.resolve().unwrap(), examples::example1());
        assert_eq!(cfg.packing_ratio, 8);
        assert_eq!(cfg.decoder, DecodeConfig::default());
        let explicit: EnsembleRef = serde_json::from_str(r#"{"l": [0.0, 0.0, 0.0, 1.0], "dc_bar": 6}"#).unwrap();
        assert!((explicit.resolve().unwrap().r_in - 0.5).abs() < 1e-12);
        assert!(EnsembleRef::Named("nope".into()).resolve().is_err());
        assert!(OuterRef::Named("nope".into()).resolve().is_err());
        let bad = r#"{"outer": "sc-15/16", "ensemble": "example1", "code": {"kind": "random", "n_c": 1, "x": 2}}"#;
        assert!(serde_json::from_str::<RunConfig>(bad).is_err());
    }

    #[test]
    fn run_reports_complexity_without_post_processing() {
        let cfg = RunConfig {
            outer: OuterRef::Named("sc-15/16".into()),
            ensemble: EnsembleRef::Named("example1".into()),
            code: CodeSource::Random { n_c: 2400 },
            snr_db: vec![7.0],
            gap_db: vec![],
            decoder: DecodeConfig::default(),
            stop: StopRule::frames(4),
            packing_ratio: 8,
            seed: 1,
            workers: 1,
        };
        let rep = end_to_end_run(&cfg).unwrap();
        assert_eq!(rep.iters, 9);
        assert!((rep.eta - rep.eta_i / (15.0 / 16.0)).abs() < 1e-12);
        assert_eq!(rep.n_cols, 2400);
        assert_eq!(rep.points.len(), 1);
        assert!(rep.points[0].adjudication.pass);
        let mut buf = Vec::new();
        rep.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 2);
        let mut json = Vec::new();
        rep.write_json(&mut json).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&json).unwrap();
        assert_eq!(v["points"][0]["adjudication"]["pass"], true);
        let empty = RunConfig { snr_db: vec![], ..cfg };
        assert!(end_to_end_run(&empty).is_err());
    }
}
