use std::path::{Path, PathBuf};

use concat_fec::channel::{snr_at_gap, SnrPoint};
use concat_fec::codegen::{build_qc, girth, girth_from_roots, info_set, sample_random};
use concat_fec::concat::{end_to_end_with, CodeSource, RunConfig};
use concat_fec::ensemble::{default_outer_table, examples, load_outer_table, StaircaseSpec};
use concat_fec::exit::{default_grid, ChartCache, ChartRequest};
use concat_fec::optimizer::{
    optimize_concat, pareto_front, write_design_csv, DesignPoint, MonteCarloCharts, ParetoPoint,
};
use serde::Serialize;

use crate::config::{self, ConstructConfig, DesignConfig, ExitGenConfig, OuterTable};
use crate::manifest::{write_cited, write_json, RunManifest};
use crate::{CliError, Globals};

/// Largest code for which construct reports the exact girth from every column.
const EXACT_GIRTH_LIMIT: usize = 20_000;

fn require_config(g: &Globals) -> Result<&Path, CliError> {
    g.config
        .as_deref()
        .ok_or_else(|| CliError::usage("this command needs --config".to_string()))
}

fn operating_points(r_cat: f64, snr_db: &[f64], gap_db: &[f64]) -> Result<Vec<f64>, CliError> {
    let mut out = snr_db.to_vec();
    for &g in gap_db {
        out.push(snr_at_gap(r_cat, g)?);
    }
    if out.is_empty() {
        return Err(CliError::usage("no operating points given".to_string()));
    }
    Ok(out)
}

#[derive(Serialize)]
struct ChartEntry {
    snr_db: f64,
    dc_bar: f64,
    nu: f64,
    key: String,
    file: String,
}

pub fn exit_gen(g: &Globals) -> Result<(), CliError> {
    let path = require_config(g)?;
    let cfg: ExitGenConfig = config::load(path)?;
    let snrs = operating_points(cfg.r_cat, &cfg.snr_db, &cfg.gap_db)?;
    if cfg.dc_bar.is_empty() || cfg.nu.is_empty() {
        return Err(CliError::usage("dc_bar and nu must be nonempty".to_string()));
    }
    let seed = g.seed.or(cfg.seed).unwrap_or(1);
    let mut manifest = RunManifest::new("exit-gen", Some(path), seed, &g.out);
    manifest.add_input(path)?;
    let cache = ChartCache::new(g.out.join("charts"));
    let mut entries = Vec::new();
    for &snr_db in &snrs {
        for &dc_bar in &cfg.dc_bar {
            for &nu in &cfg.nu {
                let mut req = ChartRequest::new(snr_db, dc_bar, nu, cfg.samples, seed);
                req.grid = default_grid(SnrPoint::from_db(snr_db).p0, cfg.grid_points);
                req.max_degree = cfg.max_degree;
                let (_, hit) = cache.get_or_compute(&req)?;
                let file = cache.path_for(&req);
                eprintln!("{} {}", if hit { "cached" } else { "computed" }, file.display());
                entries.push(ChartEntry {
                    snr_db,
                    dc_bar,
                    nu,
                    key: req.cache_key(),
                    file: file.file_name().unwrap_or_default().to_string_lossy().into_owned(),
                });
            }
        }
    }
    let hash = manifest.write(&g.out)?;
    write_json(&g.out.join("exit-gen.json"), &hash, "charts", &entries)
}

fn outer_rows(table: &Option<OuterTable>, manifest: &mut RunManifest) -> Result<Vec<StaircaseSpec>, CliError> {
    let rows = match table {
        None => default_outer_table(),
        Some(OuterTable::File(p)) => {
            manifest.add_input(p)?;
            load_outer_table(p).map_err(|e| CliError::usage(format!("{}: {e}", p.display())))?
        }
        Some(OuterTable::Rows(rows)) => {
            for r in rows {
                r.validate()?;
            }
            rows.clone()
        }
    };
    if rows.is_empty() {
        return Err(CliError::usage("outer-code table is empty".to_string()));
    }
    Ok(rows)
}

pub fn design(g: &Globals) -> Result<(), CliError> {
    let path = require_config(g)?;
    let mut cfg: DesignConfig = config::load(path)?;
    let seed = g.seed.unwrap_or(cfg.space.seed);
    let mut manifest = RunManifest::new("design", Some(path), seed, &g.out);
    manifest.add_input(path)?;
    let table = outer_rows(&cfg.outer_table, &mut manifest)?;
    if let Some(name) = &cfg.preset {
        let (ens, gap) = match name.as_str() {
            "example1" => (examples::example1(), examples::EXAMPLE1_GAP_DB),
            "example2" => (examples::example2(), examples::EXAMPLE2_GAP_DB),
            other => return Err(CliError::usage(format!("unknown preset {other:?}"))),
        };
        cfg.gap_db.push(gap);
        cfg.space.dc_bar = vec![ens.dc_bar];
        cfg.space.nu = Some(vec![ens.nu]);
        cfg.space.d_v_max = cfg.space.d_v_max.max(ens.max_degree());
    }
    cfg.space.seed = seed;
    cfg.space.validate()?;
    let snrs = operating_points(cfg.r_cat, &cfg.snr_db, &cfg.gap_db)?;
    let cache = ChartCache::new(cfg.chart_cache.clone().unwrap_or_else(|| g.out.join("charts")));
    let provider = MonteCarloCharts::new(&cfg.space, Some(cache));

    let mut found: Vec<(f64, Option<DesignPoint>)> = Vec::new();
    for &snr_db in &snrs {
        match optimize_concat(cfg.r_cat, SnrPoint::from_db(snr_db), &table, &cfg.space, &provider) {
            Ok(p) => found.push((snr_db, Some(p))),
            Err(e) if crate::is_infeasible(&e) => {
                eprintln!("{snr_db} dB: {e}");
                found.push((snr_db, None));
            }
            Err(e) => return Err(e.into()),
        }
    }
    found.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut points = Vec::new();
    for (snr_db, p) in &found {
        if let Some(p) = p {
            points.push(ParetoPoint {
                snr_db: *snr_db,
                gap_db: p.gap_db()?,
                eta_i: p.eta_i,
                eta: p.eta,
                design: p.clone(),
            });
        }
    }
    let front = pareto_front(points);

    let hash = manifest.write(&g.out)?;
    let d_v = cfg.space.d_v_max;
    let rows: Vec<(f64, Option<&DesignPoint>)> = found.iter().map(|(s, p)| (*s, p.as_ref())).collect();
    let mut buf = Vec::new();
    write_design_csv(&mut buf, cfg.r_cat, d_v, &rows)?;
    write_cited(&g.out.join("designs.csv"), &hash, &buf)?;
    let front_rows: Vec<(f64, Option<&DesignPoint>)> =
        front.iter().map(|p| (p.snr_db, Some(&p.design))).collect();
    let mut buf = Vec::new();
    write_design_csv(&mut buf, cfg.r_cat, d_v, &front_rows)?;
    write_cited(&g.out.join("pareto.csv"), &hash, &buf)?;
    let designs: Vec<Option<&DesignPoint>> = found.iter().map(|(_, p)| p.as_ref()).collect();
    write_json(&g.out.join("designs.json"), &hash, "designs", &designs)?;
    if designs.iter().all(Option::is_none) {
        return Err(CliError::infeasible("no operating point admits a design".to_string()));
    }
    Ok(())
}

#[derive(Serialize)]
struct ConstructReport {
    kind: &'static str,
    n_cols: usize,
    n_rows: usize,
    n_edges: usize,
    k: usize,
    /// Verified on the written matrix; `null` for a forest.
    girth: concat_fec::codegen::Girth,
    /// Whether `girth` is exact or a bound from sampled roots.
    girth_exact: bool,
    girth_target: Option<usize>,
    girth_met: Option<bool>,
    lambda_distance: f64,
    length_error: Option<f64>,
    lifting: Option<usize>,
}

pub fn construct(g: &Globals) -> Result<(), CliError> {
    let path = require_config(g)?;
    let cfg: ConstructConfig = config::load(path)?;
    let seed = g.seed.or(cfg.seed).unwrap_or(1);
    let ensemble = cfg.ensemble.resolve()?;
    let mut manifest = RunManifest::new("construct", Some(path), seed, &g.out);
    manifest.add_input(path)?;
    let (h, proto, target, met, length_error, kind) = match &cfg.code {
        CodeSource::Random { n_c } => (sample_random(&ensemble, *n_c, seed)?, None, None, None, None, "random"),
        CodeSource::Qc { target_n, tolerance, girth } => {
            let b = build_qc(&ensemble, *target_n, *tolerance, *girth, seed)?;
            let met = b.girth_met;
            let err = b.length_error;
            (b.matrix, Some(b.protograph), Some(*girth), Some(met), Some(err), "qc")
        }
        _ => return Err(CliError::usage("construct builds random or qc codes only".to_string())),
    };
    let (measured, exact) = match (&proto, h.block_size()) {
        (Some(_), Some(z)) => (girth_from_roots(&h, (0..h.n_cols()).step_by(z)), true),
        _ if h.n_cols() <= EXACT_GIRTH_LIMIT => (girth(&h), true),
        _ => (girth_from_roots(&h, 0..EXACT_GIRTH_LIMIT), false),
    };
    let report = ConstructReport {
        kind,
        n_cols: h.n_cols(),
        n_rows: h.n_rows(),
        n_edges: h.n_edges(),
        k: info_set(&h).k(),
        girth: measured,
        girth_exact: exact,
        girth_target: target,
        girth_met: met,
        lambda_distance: h.lambda_distance(&ensemble),
        length_error,
        lifting: proto.as_ref().map(|p| p.z),
    };
    let hash = manifest.write(&g.out)?;
    let mut buf = Vec::new();
    h.write_text(&mut buf)?;
    write_cited(&g.out.join("matrix.txt"), &hash, &buf)?;
    if let Some(p) = &proto {
        let mut buf = Vec::new();
        p.write_text(&mut buf)?;
        write_cited(&g.out.join("protograph.txt"), &hash, &buf)?;
    }
    write_json(&g.out.join("construct.json"), &hash, "code", &report)?;
    if met == Some(false) {
        eprintln!("girth target not met; best girth {measured} written");
    }
    Ok(())
}

pub fn simulate(g: &Globals) -> Result<(), CliError> {
    let path = require_config(g)?;
    let mut cfg: RunConfig = config::load(path)?;
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    cfg.workers = g.workers;
    cfg.decoder.validate()?;
    let mut manifest = RunManifest::new("simulate", Some(path), cfg.seed, &g.out);
    manifest.add_input(path)?;
    if let CodeSource::Matrix { path: p } | CodeSource::Protograph { path: p } = &cfg.code {
        manifest.add_input(&resolve(path, p))?;
        cfg.code = match &cfg.code {
            CodeSource::Matrix { .. } => CodeSource::Matrix { path: resolve(path, p) },
            _ => CodeSource::Protograph { path: resolve(path, p) },
        };
    }
    let ensemble = cfg.ensemble.resolve()?;
    let outer = cfg.outer.resolve()?;
    let h = cfg.code.realize(&ensemble, cfg.seed)?;
    let report = end_to_end_with(&cfg, ensemble, outer, &h)?;
    let hash = manifest.write(&g.out)?;
    let mut buf = Vec::new();
    report.write_csv(&mut buf)?;
    write_cited(&g.out.join("ber.csv"), &hash, &buf)?;
    write_json(&g.out.join("run.json"), &hash, "report", &report)
}

/// Paths inside a config are relative to the config file.
fn resolve(config: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        return p.to_path_buf();
    }
    config.parent().map_or_else(|| p.to_path_buf(), |d| d.join(p))
}
