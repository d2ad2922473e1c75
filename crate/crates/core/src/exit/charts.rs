use rand::{Rng, RngCore};
use rand_distr::Distribution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

use super::p_to_mean;
use crate::channel::{consistent_gaussian, SnrPoint};
use crate::ensemble::{check_distribution_from_mean, theta_split, DEFAULT_MAX_VARIABLE_DEGREE};
use crate::llr::{from_half_tanh, half_tanh};
use crate::rng;
use crate::{Error, Result};

pub const DEFAULT_SAMPLES: usize = 1_000_000;
pub const DEFAULT_GRID_POINTS: usize = 40;
pub const MIN_SAMPLES: usize = 100_000;
const BLOCK: usize = 1 << 16;
const GRID_SPAN: f64 = 1e4;

/// Geometric grid of `points` values from `p0 / 10^4` up to `p0`, ascending.
pub fn default_grid(p0: f64, points: usize) -> Vec<f64> {
    let n = points.max(2);
    (0..n)
        .map(|k| p0 * GRID_SPAN.powf(-((n - 1 - k) as f64) / (n - 1) as f64))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartRequest {
    pub es_n0_db: f64,
    pub dc_bar: f64,
    pub nu: f64,
    pub grid: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
    pub max_degree: usize,
}

impl ChartRequest {
    /// Request on the default grid at the given operating point.
    pub fn new(es_n0_db: f64, dc_bar: f64, nu: f64, samples: usize, seed: u64) -> Self {
        let p0 = SnrPoint::from_db(es_n0_db).p0;
        Self {
            es_n0_db,
            dc_bar,
            nu,
            grid: default_grid(p0, DEFAULT_GRID_POINTS),
            samples,
            seed,
            max_degree: DEFAULT_MAX_VARIABLE_DEGREE,
        }
    }

    /// Stable cache key over every field that influences the estimate.
    pub fn cache_key(&self) -> String {
        let mut h = Sha256::new();
        h.update(b"exit-charts-v1");
        for x in [self.es_n0_db, self.dc_bar, self.nu] {
            h.update(x.to_bits().to_le_bytes());
        }
        for x in &self.grid {
            h.update(x.to_bits().to_le_bytes());
        }
        h.update((self.samples as u64).to_le_bytes());
        h.update(self.seed.to_le_bytes());
        h.update((self.max_degree as u64).to_le_bytes());
        hex::encode(&h.finalize()[..12])
    }
}

/// Tabulated elementary EXIT functions at one `(SNR, d̄_c, ν)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExitChartSet {
    pub snr: SnrPoint,
    pub dc_bar: f64,
    pub nu: f64,
    /// Ascending input error probabilities.
    pub grid: Vec<f64>,
    /// Smoothed `f[i][g]` for degree `i` (row 0 unused).
    pub f: Vec<Vec<f64>>,
    /// Unsmoothed Monte-Carlo estimates, same layout as `f`.
    pub raw: Vec<Vec<f64>>,
    /// Error probability of check-to-variable messages toward degree ≥ 2 nodes.
    pub check_err: Vec<f64>,
    pub samples_per_pass: usize,
    pub seed: u64,
}

impl ExitChartSet {
    pub fn max_degree(&self) -> usize {
        self.f.len() - 1
    }

    pub fn p0(&self) -> f64 {
        self.snr.p0
    }

    pub fn contains(&self, p: f64) -> bool {
        let lo = self.grid[0] * (1.0 - 1e-12);
        let hi = self.grid[self.grid.len() - 1] * (1.0 + 1e-12);
        p >= lo && p <= hi
    }

    /// Bracketing index and weight for linear interpolation in `ln p`.
    fn locate(&self, p: f64) -> Result<(usize, f64)> {
        if !self.contains(p) {
            return Err(Error::Extrapolation(p));
        }
        let g = &self.grid;
        if g.len() == 1 {
            return Ok((0, 0.0));
        }
        let j = g.partition_point(|&x| x <= p).clamp(1, g.len() - 1);
        let t = ((p.ln() - g[j - 1].ln()) / (g[j].ln() - g[j - 1].ln())).clamp(0.0, 1.0);
        Ok((j - 1, t))
    }

    fn interp(row: &[f64], (j, t): (usize, f64)) -> f64 {
        if t == 0.0 {
            row[j]
        } else {
            row[j] * (1.0 - t) + row[j + 1] * t
        }
    }

    /// `f_i(p)`; degrees beyond the table contribute nothing.
    pub fn elementary(&self, degree: usize, p: f64) -> Result<f64> {
        let at = self.locate(p)?;
        Ok(self.f.get(degree).map_or(0.0, |row| Self::interp(row, at)))
    }

    /// Interpolated `Σ_i weights[i] f_i(p)`.
    pub fn weighted(&self, weights: &[f64], p: f64) -> Result<f64> {
        let at = self.locate(p)?;
        Ok(weights
            .iter()
            .enumerate()
            .skip(1)
            .filter(|(_, &w)| w != 0.0)
            .map(|(i, &w)| w * self.f.get(i).map_or(0.0, |row| Self::interp(row, at)))
            .sum())
    }

    pub fn check_error(&self, p: f64) -> Result<f64> {
        Ok(Self::interp(&self.check_err, self.locate(p)?))
    }

    /// Charts built from closures, for analytic test fixtures.
    pub fn from_functions(
        snr: SnrPoint,
        grid: Vec<f64>,
        dc_bar: f64,
        max_degree: usize,
        f: impl Fn(usize, f64) -> f64,
        check_err: impl Fn(f64) -> f64,
    ) -> Self {
        let table: Vec<Vec<f64>> = (0..=max_degree)
            .map(|i| grid.iter().map(|&p| if i == 0 { 0.0 } else { f(i, p) }).collect())
            .collect();
        Self {
            snr,
            dc_bar,
            nu: 0.0,
            check_err: grid.iter().map(|&p| check_err(p)).collect(),
            raw: table.clone(),
            f: table,
            grid,
            samples_per_pass: 0,
            seed: 0,
        }
    }
}

struct PointCounts {
    /// Twice the error count per degree (ties count one).
    var_errors: Vec<u64>,
    check_errors: u64,
    samples: u64,
}

pub fn estimate_elementary_charts(req: &ChartRequest) -> Result<ExitChartSet> {
    if req.grid.is_empty() {
        return Err(Error::Domain("empty EXIT grid".into()));
    }
    if req.samples < MIN_SAMPLES {
        return Err(Error::Domain(format!(
            "at least {MIN_SAMPLES} samples per pass are required, got {}",
            req.samples
        )));
    }
    if req.max_degree < 2 {
        return Err(Error::Domain("maximum variable degree must be at least 2".into()));
    }
    let snr = SnrPoint::from_db(req.es_n0_db);
    if req.grid.windows(2).any(|w| !(w[0] < w[1]))
        || !(req.grid[0] > 0.0)
        || req.grid[req.grid.len() - 1] > snr.p0 * (1.0 + 1e-12)
    {
        return Err(Error::Domain("grid must be ascending within (0, p0]".into()));
    }
    check_distribution_from_mean(req.dc_bar)?;
    if req.nu + 1.0 > req.dc_bar {
        return Err(Error::Domain(format!(
            "nu = {} leaves no room for degree ≥ 2 neighbours at d̄_c = {}",
            req.nu, req.dc_bar
        )));
    }

    let counts: Vec<PointCounts> = req
        .grid
        .par_iter()
        .enumerate()
        .map(|(g, &p)| estimate_point(req, &snr, g, p))
        .collect::<Result<_>>()?;

    let dv = req.max_degree;
    let mut raw = vec![vec![0.0; req.grid.len()]; dv + 1];
    let mut check_raw = Vec::with_capacity(req.grid.len());
    for (g, c) in counts.iter().enumerate() {
        raw[1][g] = snr.p0;
        for i in 2..=dv {
            raw[i][g] = c.var_errors[i] as f64 / (2.0 * c.samples as f64);
        }
        check_raw.push(c.check_errors as f64 / (2.0 * c.samples as f64));
    }

    let mut f = raw.clone();
    for row in f.iter_mut().skip(2) {
        isotonic_nondecreasing(row);
    }
    for g in 0..req.grid.len() {
        for i in 2..=dv {
            f[i][g] = f[i][g].min(f[i - 1][g]);
        }
    }
    let mut check_err = check_raw;
    isotonic_nondecreasing(&mut check_err);

    Ok(ExitChartSet {
        snr,
        dc_bar: req.dc_bar,
        nu: req.nu,
        grid: req.grid.clone(),
        f,
        raw,
        check_err,
        samples_per_pass: req.samples,
        seed: req.seed,
    })
}

fn estimate_point(req: &ChartRequest, snr: &SnrPoint, g: usize, p: f64) -> Result<PointCounts> {
    let m = p_to_mean(p.min(0.5))?;
    let checks = check_distribution_from_mean(req.dc_bar)?;
    let split = theta_split(req.nu)?;
    let channel = consistent_gaussian(snr.llr_mean());
    let incoming = consistent_gaussian(m);
    let dv = req.max_degree;

    let blocks = req.samples.div_ceil(BLOCK);
    let partial: Vec<PointCounts> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let size = BLOCK.min(req.samples - b * BLOCK);
            let mut rng = rng::keyed2(req.seed, rng::stream::CHART, g as u64, b as u64);
            // Fresh per-block pools of tanh(x/2) values; inputs are drawn from them by index.
            let channel_pool: Vec<f64> =
                (0..BLOCK).map(|_| half_tanh(channel.sample(&mut rng))).collect();
            let incoming_pool: Vec<f64> =
                (0..BLOCK).map(|_| half_tanh(incoming.sample(&mut rng))).collect();
            let pick = |rng: &mut rng::StreamRng| (rng.next_u32() as usize) & (BLOCK - 1);
            let mut pool = Vec::with_capacity(BLOCK);
            let mut check_errors = 0u64;
            for s in 0..BLOCK {
                let degree = if rng.random::<f64>() < checks.rho[0] {
                    checks.dc
                } else {
                    checks.dc + 1
                };
                let ones = if split.is_integer() || rng.random::<f64>() < split.theta {
                    split.low
                } else {
                    split.high
                };
                let ones = ones.min(degree - 1);
                let mut prod = 1.0;
                for _ in 0..ones {
                    prod *= channel_pool[pick(&mut rng)];
                }
                for _ in 0..(degree - 1 - ones) {
                    prod *= incoming_pool[pick(&mut rng)];
                }
                let out = from_half_tanh(prod);
                if s < size {
                    check_errors += error_weight(out);
                }
                pool.push(out);
            }
            let mut var_errors = vec![0u64; dv + 1];
            for _ in 0..size {
                let mut v = channel.sample(&mut rng);
                for slot in var_errors.iter_mut().skip(2) {
                    v += pool[pick(&mut rng)];
                    *slot += error_weight(v);
                }
            }
            PointCounts {
                var_errors,
                check_errors,
                samples: size as u64,
            }
        })
        .collect();

    let mut total = PointCounts {
        var_errors: vec![0; dv + 1],
        check_errors: 0,
        samples: 0,
    };
    for c in partial {
        for (t, x) in total.var_errors.iter_mut().zip(c.var_errors) {
            *t += x;
        }
        total.check_errors += c.check_errors;
        total.samples += c.samples;
    }
    Ok(total)
}

#[inline]
fn error_weight(llr: f64) -> u64 {
    if llr < 0.0 {
        2
    } else if llr == 0.0 {
        1
    } else {
        0
    }
}

/// Pool-adjacent-violators fit of a nondecreasing sequence (equal weights).
pub(crate) fn isotonic_nondecreasing(values: &mut [f64]) {
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(values.len());
    for &v in values.iter() {
        blocks.push((v, 1));
        while blocks.len() > 1 {
            let (b_mean, b_n) = blocks[blocks.len() - 1];
            let (a_mean, a_n) = blocks[blocks.len() - 2];
            if a_mean <= b_mean {
                break;
            }
            blocks.pop();
            let n = a_n + b_n;
            *blocks.last_mut().unwrap() = ((a_mean * a_n as f64 + b_mean * b_n as f64) / n as f64, n);
        }
    }
    let mut k = 0;
    for (mean, n) in blocks {
        for v in &mut values[k..k + n] {
            *v = mean;
        }
        k += n;
    }
}

/// On-disk cache of chart sets keyed by [`ChartRequest::cache_key`].
#[derive(Debug, Clone)]
pub struct ChartCache {
    dir: PathBuf,
}

impl ChartCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn path_for(&self, req: &ChartRequest) -> PathBuf {
        self.dir.join(format!("charts-{}.json", req.cache_key()))
    }

    pub fn load(&self, req: &ChartRequest) -> Result<Option<ExitChartSet>> {
        let path = self.path_for(req);
        if !path.exists() {
            return Ok(None);
        }
        let text = std::fs::read_to_string(&path)?;
        Ok(Some(serde_json::from_str(&text)?))
    }

    /// Returns the charts and whether they came from disk.
    pub fn get_or_compute(&self, req: &ChartRequest) -> Result<(ExitChartSet, bool)> {
        if let Some(c) = self.load(req)? {
            return Ok((c, true));
        }
        let charts = estimate_elementary_charts(req)?;
        self.store(req, &charts)?;
        Ok((charts, false))
    }

    pub fn store(&self, req: &ChartRequest, charts: &ExitChartSet) -> Result<PathBuf> {
        std::fs::create_dir_all(&self.dir)?;
        let path = self.path_for(req);
        write_atomic(&path, serde_json::to_string(charts)?.as_bytes())?;
        Ok(path)
    }
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exit::mean_to_p;

    fn small_request(db: f64, dc: f64, nu: f64) -> ChartRequest {
        let mut r = ChartRequest::new(db, dc, nu, MIN_SAMPLES, 17);
        r.grid = default_grid(SnrPoint::from_db(db).p0, 12);
        r.max_degree = 8;
        r
    }

    #[test]
    fn pava_basics() {
        let mut v = vec![1.0, 3.0, 2.0, 4.0, 0.0];
        isotonic_nondecreasing(&mut v);
        assert_eq!(v, vec![1.0, 2.25, 2.25, 2.25, 2.25]);
        let mut w = vec![0.1, 0.2, 0.3];
        isotonic_nondecreasing(&mut w);
        assert_eq!(w, vec![0.1, 0.2, 0.3]);
    }

    #[test]
    fn grid_shape() {
        let g = default_grid(0.03, 40);
        assert_eq!(g.len(), 40);
        assert!((g[39] - 0.03).abs() < 1e-15);
        assert!((g[0] - 3e-6).abs() < 1e-15);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn rejects_bad_requests() {
        let mut r = small_request(5.0, 24.0, 1.0);
        r.samples = 10;
        assert!(estimate_elementary_charts(&r).is_err());
        let mut r = small_request(5.0, 24.0, 1.0);
        r.grid.clear();
        assert!(estimate_elementary_charts(&r).is_err());
        let mut r = small_request(5.0, 24.0, 1.0);
        r.grid.push(0.4);
        assert!(estimate_elementary_charts(&r).is_err());
    }

    #[test]
    fn chart_shape_properties() {
        let r = small_request(5.8, 24.0, 1.25);
        let c = estimate_elementary_charts(&r).unwrap();
        let p0 = c.p0();
        for i in 1..=8 {
            for g in 0..c.grid.len() {
                assert!(c.f[i][g] >= 0.0 && c.f[i][g] < 0.5);
                if g > 0 {
                    assert!(c.f[i][g] >= c.f[i][g - 1]);
                }
                if i > 1 {
                    assert!(c.f[i][g] <= c.f[i - 1][g]);
                }
            }
            assert!(c.f[1].iter().all(|&x| x == p0));
        }
        // Smoothing stays within three binomial deviations of the raw estimate.
        for i in 2..=8 {
            for g in 0..c.grid.len() {
                let p = c.raw[i][g].max(1.0 / r.samples as f64);
                let sd = (p * (1.0 - p) / r.samples as f64).sqrt();
                assert!((c.f[i][g] - c.raw[i][g]).abs() <= 3.0 * sd + 1e-15);
            }
        }
        // High degree at small input error: the chart is wide open.
        assert!(c.f[8][0] < 0.1 * c.grid[0].max(1e-3));
    }

    #[test]
    fn uninformative_inputs_leave_channel_error() {
        // At -30 dB inputs at p0 are almost pure noise, so checks carry nothing
        // and every variable degree just repeats its channel error.
        let mut req = small_request(-30.0, 6.0, 0.0);
        let p0 = SnrPoint::from_db(-30.0).p0;
        req.grid = vec![p0];
        let c = estimate_elementary_charts(&req).unwrap();
        for i in 2..=8 {
            let sd = (0.25 / req.samples as f64).sqrt();
            assert!((c.f[i][0] - p0).abs() < 4.0 * sd + 1e-3, "{i}: {}", c.f[i][0]);
        }
    }

    #[test]
    fn degree_two_without_degree_one_matches_gaussian_check() {
        // dc = 3, nu = 0: check output from two Gaussian inputs; degree-2 output
        // adds channel + one check output. Compare with a direct simulation.
        let r = small_request(3.0, 3.0, 0.0);
        let c = estimate_elementary_charts(&r).unwrap();
        let snr = SnrPoint::from_db(3.0);
        let g = 6;
        let m = p_to_mean(c.grid[g]).unwrap();
        let d = consistent_gaussian(m);
        let ch = consistent_gaussian(snr.llr_mean());
        let mut rr = rng::keyed(1234, 0, 0);
        let n = 400_000;
        let mut errs = 0usize;
        for _ in 0..n {
            let out = crate::llr::boxplus(d.sample(&mut rr), d.sample(&mut rr));
            if ch.sample(&mut rr) + out < 0.0 {
                errs += 1;
            }
        }
        let direct = errs as f64 / n as f64;
        let sd = (direct / n as f64).sqrt() + (direct / r.samples as f64).sqrt();
        assert!((c.raw[2][g] - direct).abs() < 4.0 * sd, "{} vs {direct}", c.raw[2][g]);
        assert!(mean_to_p(m) > 0.0);
    }

    #[test]
    fn deterministic_and_cached() {
        let r = small_request(5.5, 20.0, 0.5);
        let a = estimate_elementary_charts(&r).unwrap();
        let b = estimate_elementary_charts(&r).unwrap();
        assert_eq!(a, b);
        let dir = tempfile::tempdir().unwrap();
        let cache = ChartCache::new(dir.path());
        let (c1, hit1) = cache.get_or_compute(&r).unwrap();
        let (c2, hit2) = cache.get_or_compute(&r).unwrap();
        assert!(!hit1 && hit2);
        assert_eq!(c1, a);
        assert_eq!(c2, a);
        let mut other = r.clone();
        other.seed += 1;
        assert_ne!(other.cache_key(), r.cache_key());
    }

    #[test]
    fn interpolation_bounds() {
        let snr = SnrPoint::from_db(5.0);
        let grid = default_grid(snr.p0, 10);
        let c = ExitChartSet::from_functions(snr, grid.clone(), 24.0, 3, |_, p| p / 2.0, |p| p);
        assert!((c.elementary(2, grid[3]).unwrap() - grid[3] / 2.0).abs() < 1e-15);
        let mid = (grid[3] * grid[4]).sqrt();
        let v = c.elementary(2, mid).unwrap();
        assert!(v > grid[3] / 2.0 && v < grid[4] / 2.0);
        assert!(matches!(c.elementary(2, snr.p0 * 1.1), Err(Error::Extrapolation(_))));
        assert!(matches!(c.elementary(2, grid[0] * 0.5), Err(Error::Extrapolation(_))));
        assert_eq!(c.elementary(9, grid[2]).unwrap(), 0.0);
    }
}
