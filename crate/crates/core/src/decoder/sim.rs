use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{DecodeConfig, Decoder, TannerGraph};
use crate::channel::{channel_ber, fill_llrs, snr_to_sigma2};
use crate::codegen::{info_set, SparseParityCheck};
use crate::rng;
use crate::{Error, Result};

/// Frames decoded between stop-rule checks. Fixed so that results do not
/// depend on the worker count.
const BATCH: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StopRule {
    pub min_frames: u64,
    /// Information-bit error events.
    pub min_errors: u64,
    pub max_frames: u64,
    pub max_bits: u64,
}

impl Default for StopRule {
    fn default() -> Self {
        Self {
            min_frames: 50,
            min_errors: 100,
            max_frames: 1_000_000,
            max_bits: 10_000_000_000,
        }
    }
}

impl StopRule {
    pub fn frames(n: u64) -> Self {
        Self {
            min_frames: n,
            min_errors: 0,
            max_frames: n,
            max_bits: u64::MAX,
        }
    }

    fn done(&self, frames: u64, bits: u64, errors: u64) -> bool {
        frames >= self.max_frames
            || bits >= self.max_bits
            || (frames >= self.min_frames && errors >= self.min_errors)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    pub snr_db: f64,
    pub sigma2: f64,
    /// Raw channel bit error.
    pub p0: f64,
    pub frames: u64,
    /// Information bits counted.
    pub bits: u64,
    pub errors: u64,
    pub ber: f64,
    /// Normal-approximation 95% half-width.
    pub ci95: f64,
    pub frame_errors: u64,
    pub mean_iterations: f64,
    pub n_cols: usize,
    pub info_bits: usize,
    pub config: DecodeConfig,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    errors: u64,
    frame_errors: u64,
    iterations: u64,
}

/// Prepared simulation: graph, information set and worker pool.
struct Harness {
    graph: Arc<TannerGraph>,
    info: Arc<Vec<u32>>,
    cfg: DecodeConfig,
    sigma2: f64,
    seed: u64,
    pool: rayon::ThreadPool,
}

impl Harness {
    fn new(h: &SparseParityCheck, snr_db: f64, cfg: &DecodeConfig, seed: u64, workers: usize) -> Result<Self> {
        cfg.validate()?;
        let sigma2 = snr_to_sigma2(snr_db);
        channel_ber(sigma2)?;
        let info = match h.info_set() {
            Some(cols) => cols.to_vec(),
            None => info_set(h).columns,
        };
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .build()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
        Ok(Self {
            graph: Arc::new(TannerGraph::new(h)),
            info: Arc::new(info),
            cfg: *cfg,
            sigma2,
            seed,
            pool,
        })
    }

    /// Decode frames `range` and return their per-frame results in order.
    fn run<T: Send>(
        &self,
        range: std::ops::Range<u64>,
        f: impl Fn(&mut Decoder, &[f64]) -> Result<T> + Sync,
    ) -> Result<Vec<T>> {
        let n = self.graph.n_cols();
        self.pool.install(|| {
            range
                .into_par_iter()
                .map_init(
                    || {
                        (
                            Decoder::new(Arc::clone(&self.graph), self.cfg).expect("validated"),
                            vec![0.0; n],
                        )
                    },
                    |(dec, llrs), frame| {
                        let mut r = rng::keyed(self.seed, rng::stream::FRAME, frame);
                        fill_llrs(&mut r, self.sigma2, llrs);
                        f(dec, llrs)
                    },
                )
                .collect()
        })
    }
}

/// BER of the information set for all-zero frames at `snr_db` (Es/N0).
pub fn simulate_ber(
    h: &SparseParityCheck,
    snr_db: f64,
    cfg: &DecodeConfig,
    stop: &StopRule,
    seed: u64,
    workers: usize,
) -> Result<SimReport> {
    let harness = Harness::new(h, snr_db, cfg, seed, workers)?;
    let info = Arc::clone(&harness.info);
    let per_frame = info.len() as u64;
    let (mut frames, mut total) = (0u64, Tally::default());
    while !stop.done(frames, frames * per_frame, total.errors) {
        let end = (frames + BATCH as u64).min(stop.max_frames.max(frames + 1));
        let batch = harness.run(frames..end, |dec, llrs| {
            let out = dec.decode(llrs)?;
            let errors = info.iter().filter(|&&c| out.bits[c as usize] != 0).count() as u64;
            Ok(Tally {
                errors,
                frame_errors: u64::from(errors > 0),
                iterations: out.iterations as u64,
            })
        })?;
        // Frames are folded one at a time so the stop point is the same
        // whatever the batch boundaries.
        for t in batch {
            if stop.done(frames, frames * per_frame, total.errors) {
                break;
            }
            frames += 1;
            total.errors += t.errors;
            total.frame_errors += t.frame_errors;
            total.iterations += t.iterations;
        }
        if per_frame == 0 {
            break;
        }
    }
    let bits = frames * per_frame;
    let ber = if bits == 0 { 0.0 } else { total.errors as f64 / bits as f64 };
    let ci95 = if bits == 0 { 0.0 } else { 1.96 * (ber * (1.0 - ber) / bits as f64).sqrt() };
    Ok(SimReport {
        snr_db,
        sigma2: harness.sigma2,
        p0: channel_ber(harness.sigma2)?,
        frames,
        bits,
        errors: total.errors,
        ber,
        ci95,
        frame_errors: total.frame_errors,
        mean_iterations: if frames == 0 { 0.0 } else { total.iterations as f64 / frames as f64 },
        n_cols: h.n_cols(),
        info_bits: info.len(),
        config: *cfg,
        seed,
    })
}

/// Mean variable-to-check message error per iteration over `frames`
/// frames, index 0 being the channel. Early stopping is disabled so every
/// frame contributes to every iteration.
pub fn iteration_trace(
    h: &SparseParityCheck,
    snr_db: f64,
    cfg: &DecodeConfig,
    frames: u64,
    seed: u64,
    workers: usize,
) -> Result<Vec<f64>> {
    let cfg = DecodeConfig {
        trace: true,
        early_stop: false,
        ..*cfg
    };
    let harness = Harness::new(h, snr_db, &cfg, seed, workers)?;
    let traces = harness.run(0..frames, |dec, llrs| {
        Ok(dec.decode(llrs)?.trace.expect("trace requested"))
    })?;
    let mut mean = vec![0.0; cfg.max_iters + 1];
    for t in &traces {
        for (m, x) in mean.iter_mut().zip(t) {
            *m += x;
        }
    }
    let n = frames.max(1) as f64;
    Ok(mean.into_iter().map(|m| m / n).collect())
}

/// Offset min-sum at several offsets, same frames for each.
pub fn offset_sweep(
    h: &SparseParityCheck,
    snr_db: f64,
    cfg: &DecodeConfig,
    offsets: &[f64],
    stop: &StopRule,
    seed: u64,
    workers: usize,
) -> Result<Vec<SimReport>> {
    offsets
        .iter()
        .map(|&offset| {
            let c = DecodeConfig {
                algorithm: super::Algorithm::OffsetMinSum,
                offset,
                ..*cfg
            };
            simulate_ber(h, snr_db, &c, stop, seed, workers)
        })
        .collect()
}

/// Columns: snr_db, frames, bits, errors, ber, ci95, algorithm, schedule, iters.
pub fn write_ber_csv<W: Write>(w: W, reports: &[SimReport]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "snr_db", "frames", "bits", "errors", "ber", "ci95", "algorithm", "schedule", "iters",
    ])?;
    for r in reports {
        out.write_record([
            format!("{:.4}", r.snr_db),
            r.frames.to_string(),
            r.bits.to_string(),
            r.errors.to_string(),
            format!("{:.6e}", r.ber),
            format!("{:.6e}", r.ci95),
            r.config.algorithm.name().to_string(),
            r.config.schedule.name().to_string(),
            format!("{:.3}", r.mean_iterations),
        ])?;
    }
    out.flush()?;
    Ok(())
}
