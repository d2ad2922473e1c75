//! Complexity-minimizing search over inner-code ensembles.
//!
//! [`solve_fixed`] handles one `(d̄_c, ν, L_0)` cell; [`optimize_inner`] loops
//! over the cells, [`optimize_concat`] over outer codes and [`pareto_sweep`]
//! over SNR.

mod barrier;
mod fixed;
mod validate;

use std::cmp::Ordering;
use std::collections::HashMap;
use std::io::Write;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{shannon_gap, SnrPoint};
use crate::ensemble::{inner_complexity, total_complexity, InnerEnsemble, StaircaseSpec};
use crate::exit::{
    default_grid, estimate_elementary_charts, max_uncoded, ChartCache, ChartRequest, ExitChartSet,
    Quantization, DEFAULT_GRID_POINTS, DEFAULT_SAMPLES,
};
use crate::{Error, Result};

pub use fixed::{solve_fixed, FixedSolution, PT_REFRESH};
pub use validate::validate_design;

/// Slack allowed when re-checking constraints by substitution.
pub const VALIDATION_SLACK: f64 = 1e-8;

fn default_dc_bar() -> Vec<f64> {
    (4..=80).map(|k| k as f64 / 2.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DesignSpace {
    pub d_v_max: usize,
    pub nu_max: f64,
    pub q_points: usize,
    pub q_nu: usize,
    pub l0_step: f64,
    /// Candidate average check degrees; values below `ν + 2` are skipped per `ν`.
    pub dc_bar: Vec<f64>,
    /// Explicit `ν` values, replacing the `q_nu`-step grid on `[0, nu_max]`.
    pub nu: Option<Vec<f64>>,
    /// Explicit `L_0` values, replacing the `l0_step` grid on `[0, L0_max]`.
    pub l0: Option<Vec<f64>>,
    pub snr_db: Vec<f64>,
    pub quantization: Quantization,
    pub chart_samples: usize,
    pub chart_grid_points: usize,
    pub seed: u64,
}

impl Default for DesignSpace {
    fn default() -> Self {
        Self {
            d_v_max: 20,
            nu_max: 4.0,
            q_points: 200,
            q_nu: 40,
            l0_step: 0.01,
            dc_bar: default_dc_bar(),
            nu: None,
            l0: None,
            snr_db: Vec::new(),
            quantization: Quantization::default(),
            chart_samples: DEFAULT_SAMPLES,
            chart_grid_points: DEFAULT_GRID_POINTS,
            seed: 1,
        }
    }
}

impl DesignSpace {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.d_v_max < 2 {
            return bad("d_v_max must be at least 2");
        }
        if self.q_points == 0 || self.q_nu == 0 || self.chart_grid_points == 0 {
            return bad("counts must be at least 1");
        }
        if !(self.l0_step > 0.0 && self.l0_step <= 0.01) {
            return bad("l0_step must lie in (0, 0.01]");
        }
        if !(self.nu_max >= 0.0) {
            return bad("nu_max must be nonnegative");
        }
        if self.dc_bar.is_empty() || self.dc_bar.iter().any(|&d| !(d >= 2.0)) {
            return bad("dc_bar candidates must be nonempty and at least 2");
        }
        if let Some(nu) = &self.nu {
            if nu.is_empty() || nu.iter().any(|&v| !(v >= 0.0)) {
                return bad("nu values must be nonempty and nonnegative");
            }
        }
        if let Some(l0) = &self.l0 {
            if l0.is_empty() || l0.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
                return bad("l0 values must be nonempty and within [0, 1]");
            }
        }
        if self.chart_samples < crate::exit::MIN_SAMPLES {
            return bad("chart_samples must be at least 100000");
        }
        Ok(())
    }

    pub fn nu_values(&self) -> Vec<f64> {
        match &self.nu {
            Some(v) => v.clone(),
            None => (0..=self.q_nu)
                .map(|k| self.nu_max * k as f64 / self.q_nu as f64)
                .collect(),
        }
    }

    /// `L_0` candidates up to `l0_max`, in steps no larger than `l0_step`.
    pub fn l0_values(&self, l0_max: f64) -> Vec<f64> {
        match &self.l0 {
            Some(v) => v.iter().copied().filter(|&x| x <= l0_max + 1e-12).collect(),
            None => {
                let steps = (l0_max / self.l0_step - 1e-9).ceil().max(0.0) as usize;
                if steps == 0 {
                    return vec![0.0];
                }
                (0..=steps).map(|k| l0_max * k as f64 / steps as f64).collect()
            }
        }
    }

    /// `(d̄_c, ν)` pairs satisfying `d̄_c ≥ ν + 2`.
    pub fn cells(&self) -> Vec<(f64, f64)> {
        let nus = self.nu_values();
        let mut out = Vec::new();
        for &dc in &self.dc_bar {
            for &nu in &nus {
                if dc >= nu + 2.0 - 1e-12 {
                    out.push((dc, nu));
                }
            }
        }
        out
    }
}

/// Source of elementary charts for the design loops.
pub trait ChartProvider: Sync {
    fn charts(&self, es_n0_db: f64, dc_bar: f64, nu: f64) -> Result<Arc<ExitChartSet>>;
}

impl<F> ChartProvider for F
where
    F: Fn(f64, f64, f64) -> Result<Arc<ExitChartSet>> + Sync,
{
    fn charts(&self, es_n0_db: f64, dc_bar: f64, nu: f64) -> Result<Arc<ExitChartSet>> {
        self(es_n0_db, dc_bar, nu)
    }
}

/// Monte-Carlo charts, memoized in memory and optionally on disk.
pub struct MonteCarloCharts {
    pub samples: usize,
    pub grid_points: usize,
    pub max_degree: usize,
    pub seed: u64,
    cache: Option<ChartCache>,
    memo: Mutex<HashMap<String, Arc<ExitChartSet>>>,
}

impl MonteCarloCharts {
    pub fn new(space: &DesignSpace, cache: Option<ChartCache>) -> Self {
        Self {
            samples: space.chart_samples,
            grid_points: space.chart_grid_points,
            max_degree: space.d_v_max,
            seed: space.seed,
            cache,
            memo: Mutex::new(HashMap::new()),
        }
    }

    pub fn request(&self, es_n0_db: f64, dc_bar: f64, nu: f64) -> ChartRequest {
        let mut req = ChartRequest::new(es_n0_db, dc_bar, nu, self.samples, self.seed);
        req.grid = default_grid(SnrPoint::from_db(es_n0_db).p0, self.grid_points);
        req.max_degree = self.max_degree;
        req
    }
}

impl ChartProvider for MonteCarloCharts {
    fn charts(&self, es_n0_db: f64, dc_bar: f64, nu: f64) -> Result<Arc<ExitChartSet>> {
        let req = self.request(es_n0_db, dc_bar, nu);
        let key = req.cache_key();
        if let Some(hit) = self.memo.lock().expect("chart memo poisoned").get(&key) {
            return Ok(hit.clone());
        }
        let charts = match &self.cache {
            Some(cache) => cache.get_or_compute(&req)?.0,
            None => estimate_elementary_charts(&req)?,
        };
        let charts = Arc::new(charts);
        self.memo
            .lock()
            .expect("chart memo poisoned")
            .insert(key, charts.clone());
        Ok(charts)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignPoint {
    pub snr: SnrPoint,
    pub outer: StaircaseSpec,
    pub ensemble: InnerEnsemble,
    /// Target inner rate the design was solved for.
    pub r_in: f64,
    /// `ν` of the chart cell.
    pub nu: f64,
    pub iters: usize,
    pub iq: f64,
    pub eta_i: f64,
    pub eta: f64,
    pub pt: f64,
    pub big_pt: f64,
    pub kkt_residual: f64,
    pub feasible: bool,
}

impl DesignPoint {
    pub fn r_cat(&self) -> f64 {
        self.r_in * self.outer.r_sc
    }

    pub fn gap_db(&self) -> Result<f64> {
        shannon_gap(self.r_cat(), self.snr.es_n0_db)
    }

    pub fn dc_bar(&self) -> f64 {
        self.ensemble.dc_bar
    }

    pub fn l0(&self) -> f64 {
        self.ensemble.l0()
    }

    /// Whether the channel alone meets the outer threshold.
    pub fn is_trivial(&self) -> bool {
        self.l0() >= 1.0
    }
}

/// Integer iteration budget for a real-valued prediction.
pub fn iteration_budget(iq: f64) -> usize {
    (iq - 1e-9).ceil().max(0.0) as usize
}

fn trivial_point(snr: SnrPoint, outer: &StaircaseSpec, r_in: f64, space: &DesignSpace) -> DesignPoint {
    let mut l = vec![0.0; space.d_v_max + 1];
    l[0] = 1.0;
    let mut lambda = vec![0.0; space.d_v_max + 1];
    lambda[1] = 1.0;
    DesignPoint {
        snr,
        outer: outer.clone(),
        ensemble: InnerEnsemble { l, lambda, dc_bar: 0.0, r_in: 1.0, r_c: 0.0, nu: 0.0 },
        r_in,
        nu: 0.0,
        iters: 0,
        iq: 0.0,
        eta_i: 0.0,
        eta: total_complexity(0.0, outer.r_sc, outer.p_post),
        pt: snr.p0,
        big_pt: 0.0,
        kkt_residual: 0.0,
        feasible: true,
    }
}

/// Lexicographic order `(η, η_i, smaller d̄_c, larger L_0, smaller ν)`.
fn design_order(a: &DesignPoint, b: &DesignPoint) -> Ordering {
    a.eta
        .total_cmp(&b.eta)
        .then(a.eta_i.total_cmp(&b.eta_i))
        .then(a.dc_bar().total_cmp(&b.dc_bar()))
        .then(b.l0().total_cmp(&a.l0()))
        .then(a.nu.total_cmp(&b.nu))
}

/// Solves one cell and packages the result as a design point.
#[allow(clippy::too_many_arguments)]
pub fn design_cell(
    charts: &ExitChartSet,
    dc_bar: f64,
    nu: f64,
    l0: f64,
    r_in: f64,
    outer: &StaircaseSpec,
    space: &DesignSpace,
    init: Option<&[f64]>,
) -> Result<DesignPoint> {
    let sol = solve_fixed(charts, dc_bar, nu, l0, r_in, outer.p_sc, space, init)?;
    if sol.trivial {
        return Ok(trivial_point(charts.snr, outer, r_in, space));
    }
    let ensemble = InnerEnsemble::from_edge(sol.lambda, l0, dc_bar)?;
    let iters = iteration_budget(sol.iq);
    let eta_i = inner_complexity(r_in, dc_bar, nu, iters as f64);
    Ok(DesignPoint {
        snr: charts.snr,
        outer: outer.clone(),
        ensemble,
        r_in,
        nu,
        iters,
        iq: sol.iq,
        eta_i,
        eta: total_complexity(eta_i, outer.r_sc, outer.p_post),
        pt: sol.pt,
        big_pt: sol.big_pt,
        kkt_residual: sol.kkt_residual,
        feasible: true,
    })
}

/// Best design over the `(d̄_c, ν, L_0)` grid for one inner rate.
pub fn optimize_inner(
    snr: SnrPoint,
    r_in: f64,
    outer: &StaircaseSpec,
    space: &DesignSpace,
    provider: &dyn ChartProvider,
) -> Result<DesignPoint> {
    space.validate()?;
    outer.validate()?;
    if !(r_in > 0.0 && r_in < 1.0) {
        return Err(Error::InfeasibleRate(format!("inner rate {r_in} outside (0, 1)")));
    }
    let l0_max = max_uncoded(outer.p_sc, r_in, snr.p0);
    if l0_max >= 1.0 {
        return Ok(trivial_point(snr, outer, r_in, space));
    }
    let cells = space.cells();
    let results: Vec<Result<Option<DesignPoint>>> = cells
        .par_iter()
        .map(|&(dc, nu)| {
            let charts = provider.charts(snr.es_n0_db, dc, nu)?;
            let mut best: Option<DesignPoint> = None;
            let mut warm: Option<Vec<f64>> = None;
            for l0 in space.l0_values(l0_max) {
                if l0 >= l0_max - 1e-12 {
                    continue;
                }
                match design_cell(&charts, dc, nu, l0, r_in, outer, space, warm.as_deref()) {
                    Ok(p) => {
                        warm = Some(p.ensemble.lambda.clone());
                        if best.as_ref().is_none_or(|b| design_order(&p, b) == Ordering::Less) {
                            best = Some(p);
                        }
                    }
                    Err(Error::Infeasible(_)) | Err(Error::InfeasibleRate(_)) => warm = None,
                    Err(e) => return Err(e),
                }
            }
            Ok(best)
        })
        .collect();
    let mut best: Option<DesignPoint> = None;
    for r in results {
        if let Some(p) = r? {
            if best.as_ref().is_none_or(|b| design_order(&p, b) == Ordering::Less) {
                best = Some(p);
            }
        }
    }
    best.ok_or_else(|| {
        Error::Infeasible(format!(
            "no grid cell is feasible at Es/N0 = {} dB, R_in = {r_in}",
            snr.es_n0_db
        ))
    })
}

/// Best design across an outer-code table for overall rate `r_cat`.
pub fn optimize_concat(
    r_cat: f64,
    snr: SnrPoint,
    outer_table: &[StaircaseSpec],
    space: &DesignSpace,
    provider: &dyn ChartProvider,
) -> Result<DesignPoint> {
    if outer_table.is_empty() {
        return Err(Error::Config("outer-code table is empty".into()));
    }
    if !(r_cat > 0.0 && r_cat < 1.0) {
        return Err(Error::Domain(format!("overall rate {r_cat} outside (0, 1)")));
    }
    let mut best: Option<DesignPoint> = None;
    for outer in outer_table {
        let r_in = r_cat / outer.r_sc;
        if r_in >= 1.0 {
            continue;
        }
        match optimize_inner(snr, r_in, outer, space, provider) {
            Ok(p) => {
                let better = best
                    .as_ref()
                    .is_none_or(|b| p.eta.total_cmp(&b.eta).then(p.eta_i.total_cmp(&b.eta_i)) == Ordering::Less);
                if better {
                    best = Some(p);
                }
            }
            Err(Error::Infeasible(_)) | Err(Error::InfeasibleRate(_)) => {}
            Err(e) => return Err(e),
        }
    }
    best.ok_or_else(|| Error::Infeasible(format!("every outer code is infeasible at {} dB", snr.es_n0_db)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoPoint {
    pub snr_db: f64,
    pub gap_db: f64,
    pub eta_i: f64,
    pub eta: f64,
    pub design: DesignPoint,
}

/// Designs along an SNR grid with dominated points removed, sorted by SNR.
pub fn pareto_sweep(
    r_cat: f64,
    snr_grid: &[f64],
    outer_table: &[StaircaseSpec],
    space: &DesignSpace,
    provider: &dyn ChartProvider,
) -> Result<Vec<ParetoPoint>> {
    let mut grid = snr_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let mut found = Vec::new();
    for &db in &grid {
        match optimize_concat(r_cat, SnrPoint::from_db(db), outer_table, space, provider) {
            Ok(design) => found.push(ParetoPoint {
                snr_db: db,
                gap_db: shannon_gap(r_cat, db)?,
                eta_i: design.eta_i,
                eta: design.eta,
                design,
            }),
            Err(Error::Infeasible(_)) | Err(Error::InfeasibleRate(_)) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(pareto_front(found))
}

/// Keeps points not dominated in `(snr_db, eta_i)`; input sorted by SNR.
pub fn pareto_front(points: Vec<ParetoPoint>) -> Vec<ParetoPoint> {
    let mut out: Vec<ParetoPoint> = Vec::new();
    for p in points {
        if out.last().is_some_and(|q| q.snr_db == p.snr_db) {
            if out.last().is_some_and(|q| p.eta_i < q.eta_i) {
                out.pop();
            } else {
                continue;
            }
        }
        if out.iter().all(|q| p.eta_i < q.eta_i) {
            out.push(p);
        }
    }
    out
}

/// One CSV row per entry; `None` marks an infeasible SNR.
pub fn write_design_csv<W: Write>(
    out: W,
    r_cat: f64,
    d_v: usize,
    rows: &[(f64, Option<&DesignPoint>)],
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = ["snr_db", "gap_db", "outer_name", "dc_bar", "nu", "l0"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((1..=d_v).map(|i| format!("lambda_{i}")));
    header.extend(["I", "eta_i", "eta", "feasible"].iter().map(|s| s.to_string()));
    w.write_record(&header)?;
    for &(snr_db, point) in rows {
        let mut rec = vec![snr_db.to_string(), shannon_gap(r_cat, snr_db)?.to_string()];
        match point {
            Some(p) => {
                rec.push(p.outer.name.clone());
                rec.push(p.dc_bar().to_string());
                rec.push(p.nu.to_string());
                rec.push(p.l0().to_string());
                rec.extend((1..=d_v).map(|i| {
                    let v = if p.is_trivial() { 0.0 } else { p.ensemble.lambda.get(i).copied().unwrap_or(0.0) };
                    v.to_string()
                }));
                rec.push(p.iters.to_string());
                rec.push(p.eta_i.to_string());
                rec.push(p.eta.to_string());
                rec.push(p.feasible.to_string());
            }
            None => {
                rec.extend(std::iter::repeat_n(String::new(), 4 + d_v + 3));
                rec.push("false".into());
            }
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests;
