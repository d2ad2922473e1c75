use super::*;
use crate::channel::SnrPoint;
use crate::ensemble::StaircaseSpec;
use crate::exit::{default_grid, predicted_iterations, ExitChartSet};

const DB: f64 = 3.0;

/// Linear charts `f_i(p) = c_i p` with `c_i` shrinking in `i` and with `d̄_c`.
fn linear_charts(es_n0_db: f64, dc_bar: f64, scale: f64) -> ExitChartSet {
    let snr = SnrPoint::from_db(es_n0_db);
    let p0 = snr.p0;
    let grid = default_grid(p0, 40);
    ExitChartSet::from_functions(
        snr,
        grid,
        dc_bar,
        6,
        move |i, p| {
            if i == 1 {
                p0
            } else {
                scale * p * 0.9 * 0.6f64.powi(i as i32 - 2) * (6.0 / dc_bar).sqrt()
            }
        },
        |p| (2.0 * p).min(0.49),
    )
}

/// Every degree ≥ 2 shares `f_i(p) = ratio · p`; closed when `ratio ≥ 1`.
fn flat_charts(es_n0_db: f64, dc_bar: f64, ratio: f64) -> ExitChartSet {
    let snr = SnrPoint::from_db(es_n0_db);
    let p0 = snr.p0;
    ExitChartSet::from_functions(
        snr,
        default_grid(p0, 40),
        dc_bar,
        6,
        move |i, p| if i == 1 { p0 } else { (ratio * p).min(0.49) },
        |p| (2.0 * p).min(0.49),
    )
}

fn small_space() -> DesignSpace {
    DesignSpace {
        d_v_max: 6,
        q_points: 60,
        dc_bar: vec![6.0],
        nu: Some(vec![0.0]),
        chart_samples: 100_000,
        ..Default::default()
    }
}

fn outer(p_sc: f64, r_sc: f64) -> StaircaseSpec {
    StaircaseSpec {
        name: "test".into(),
        r_sc,
        p_sc,
        block_side: 8,
        p_post: 0.0,
    }
}

fn provider(scale: f64) -> impl Fn(f64, f64, f64) -> Result<Arc<ExitChartSet>> + Sync {
    move |db, dc, _nu| Ok(Arc::new(linear_charts(db, dc, scale)))
}

#[test]
fn defaults_match_the_reference_grid() {
    let s = DesignSpace::default();
    assert_eq!((s.d_v_max, s.q_points, s.q_nu), (20, 200, 40));
    assert_eq!(s.nu_max, 4.0);
    assert!(s.l0_step <= 0.01);
    assert!(s.dc_bar.contains(&24.0) && s.dc_bar.contains(&28.0) && s.dc_bar.contains(&24.5));
    s.validate().unwrap();
    let nus = s.nu_values();
    assert_eq!(nus.len(), 41);
    assert!((nus[5] - 0.5).abs() < 1e-12);
    for (dc, nu) in s.cells() {
        assert!(dc >= nu + 2.0 - 1e-12);
    }
    let l0 = s.l0_values(0.1556);
    assert!(l0.windows(2).all(|w| w[1] - w[0] <= 0.01 + 1e-12));
    assert_eq!(l0[0], 0.0);
    assert!((l0[l0.len() - 1] - 0.1556).abs() < 1e-12);

    let bad = DesignSpace { l0_step: 0.02, ..Default::default() };
    assert!(matches!(bad.validate(), Err(Error::Config(_))));
    let bad = DesignSpace { dc_bar: vec![], ..Default::default() };
    assert!(bad.validate().is_err());
}

#[test]
fn two_degree_optimum_sits_on_the_rate_constraint() {
    // With f_2 = 0.9 p and f_3 = 0.54 p, every unit of λ_3 helps both the
    // iteration count and the bit error, so the optimum takes the least λ_2
    // the rate allows: λ_2/2 + λ_3/3 = 1/(d̄_c(1 - R_in)).
    let charts = linear_charts(DB, 6.0, 1.0);
    let space = DesignSpace { d_v_max: 3, ..small_space() };
    let r_in = 0.55;
    let rhs = 1.0 / (6.0 * (1.0 - r_in));
    let expected = 6.0 * rhs - 2.0;
    let sol = solve_fixed(&charts, 6.0, 0.0, 0.0, r_in, 0.002, &space, None).unwrap();
    assert!((sol.lambda[2] - expected).abs() < 1e-6, "{:?}", sol.lambda);
    assert!((sol.lambda[3] - (1.0 - expected)).abs() < 1e-6);
    assert!(sol.pt < charts.p0() && sol.iq > 1.0);
    assert!(sol.kkt_residual <= 1e-6);
    let iq = predicted_iterations(&sol.lambda, &charts, sol.pt, space.q_points, space.quantization).unwrap();
    assert!((iq - sol.iq).abs() < 1e-12);
    let point = design_cell(&charts, 6.0, 0.0, 0.0, r_in, &outer(0.002, 0.9), &space, None).unwrap();
    validate_design(&point, &charts, &space).unwrap();
}

#[test]
fn trivial_when_the_channel_meets_the_threshold() {
    let charts = linear_charts(DB, 6.0, 1.0);
    let p0 = charts.p0();
    let space = small_space();
    let sol = solve_fixed(&charts, 6.0, 0.0, 1.0, 0.9, p0 / 0.8, &space, None).unwrap();
    assert!(sol.trivial);
    assert_eq!(sol.iq, 0.0);
    let point = optimize_inner(charts.snr, 0.9, &outer(p0 / 0.8, 0.95), &space, &provider(1.0)).unwrap();
    assert_eq!(point.eta_i, 0.0);
    assert_eq!(point.l0(), 1.0);
    validate_design(&point, &charts, &space).unwrap();
}

#[test]
fn uncoded_fraction_above_limit_is_infeasible() {
    let charts = linear_charts(DB, 6.0, 1.0);
    let l0_max = max_uncoded(0.01, 0.5, charts.p0());
    let err = solve_fixed(&charts, 6.0, 0.0, l0_max + 0.01, 0.5, 0.01, &small_space(), None);
    assert!(matches!(err, Err(Error::Infeasible(_))));
}

#[test]
fn closed_charts_are_infeasible() {
    let charts = flat_charts(DB, 6.0, 1.02);
    let err = solve_fixed(&charts, 6.0, 0.0, 0.0, 0.6, 0.002, &small_space(), None);
    assert!(matches!(err, Err(Error::Infeasible(_))), "{err:?}");
}

#[test]
fn better_charts_need_fewer_iterations() {
    let space = small_space();
    let base = solve_fixed(&linear_charts(DB, 6.0, 1.0), 6.0, 0.0, 0.0, 0.6, 0.002, &space, None).unwrap();
    let better = solve_fixed(&linear_charts(DB, 6.0, 0.99), 6.0, 0.0, 0.0, 0.6, 0.002, &space, None).unwrap();
    assert!(better.iq < base.iq, "{} vs {}", better.iq, base.iq);
}

#[test]
fn solver_is_deterministic() {
    let charts = linear_charts(DB, 6.0, 1.0);
    let space = small_space();
    let a = solve_fixed(&charts, 6.0, 0.0, 0.01, 0.6, 0.002, &space, None).unwrap();
    let b = solve_fixed(&charts, 6.0, 0.0, 0.01, 0.6, 0.002, &space, None).unwrap();
    assert_eq!(a, b);
}

#[test]
fn enlarging_the_grid_never_hurts() {
    let o = outer(0.002, 0.9);
    let snr = SnrPoint::from_db(DB);
    let small = small_space();
    let large = DesignSpace {
        dc_bar: vec![5.0, 6.0, 7.0],
        nu: Some(vec![0.0, 0.5]),
        ..small_space()
    };
    let a = optimize_inner(snr, 0.6, &o, &small, &provider(1.0)).unwrap();
    let b = optimize_inner(snr, 0.6, &o, &large, &provider(1.0)).unwrap();
    assert!(b.eta_i <= a.eta_i);
    let charts = linear_charts(DB, b.dc_bar(), 1.0);
    // ν enters through λ_1 only; the synthetic charts ignore it.
    let charts = ExitChartSet { nu: b.nu, ..charts };
    validate_design(&b, &charts, &large).unwrap();
}

#[test]
fn looser_threshold_never_raises_complexity() {
    let snr = SnrPoint::from_db(DB);
    let space = small_space();
    let mut last = f64::INFINITY;
    for p_sc in [0.0015, 0.002, 0.0025] {
        let p = optimize_inner(snr, 0.6, &outer(p_sc, 0.9), &space, &provider(1.0)).unwrap();
        assert!(p.eta_i <= last);
        last = p.eta_i;
    }
}

#[test]
fn outer_table_loop() {
    let snr = SnrPoint::from_db(DB);
    let space = small_space();
    let prov = provider(1.0);
    assert!(matches!(optimize_concat(0.54, snr, &[], &space, &prov), Err(Error::Config(_))));

    let a = StaircaseSpec { name: "a".into(), ..outer(0.002, 0.9) };
    let b = StaircaseSpec { name: "b".into(), ..outer(0.002, 0.9) };
    let p = optimize_concat(0.54, snr, &[a.clone(), b.clone()], &space, &prov).unwrap();
    assert_eq!(p.outer.name, "a");
    assert!((p.r_in - 0.6).abs() < 1e-12);

    let too_low = StaircaseSpec { name: "low".into(), ..outer(0.002, 0.5) };
    let p = optimize_concat(0.54, snr, &[too_low.clone(), b], &space, &prov).unwrap();
    assert_eq!(p.outer.name, "b");
    assert!(matches!(
        optimize_concat(0.54, snr, &[too_low], &space, &prov),
        Err(Error::Infeasible(_))
    ));
}

#[test]
fn pareto_front_keeps_strict_improvements() {
    let charts = linear_charts(DB, 6.0, 1.0);
    let design = design_cell(&charts, 6.0, 0.0, 0.0, 0.6, &outer(0.002, 0.9), &small_space(), None).unwrap();
    let mk = |snr_db: f64, eta_i: f64| ParetoPoint {
        snr_db,
        gap_db: 0.0,
        eta_i,
        eta: eta_i,
        design: design.clone(),
    };
    let front = pareto_front(vec![mk(1.0, 30.0), mk(2.0, 31.0), mk(3.0, 20.0), mk(3.0, 19.0), mk(4.0, 19.0)]);
    let kept: Vec<(f64, f64)> = front.iter().map(|p| (p.snr_db, p.eta_i)).collect();
    assert_eq!(kept, vec![(1.0, 30.0), (3.0, 19.0)]);
}

#[test]
fn sweep_drops_infeasible_snrs_and_is_monotone() {
    // Below 2 dB the synthetic charts are closed.
    let prov = |db: f64, dc: f64, _nu: f64| -> Result<Arc<ExitChartSet>> {
        if db < 2.0 {
            Ok(Arc::new(flat_charts(db, dc, 1.02)))
        } else {
            Ok(Arc::new(linear_charts(db, dc, 1.0 - 0.05 * (db - 2.0))))
        }
    };
    let space = small_space();
    let table = [outer(0.002, 0.9)];
    let front = pareto_sweep(0.54, &[1.5, 3.0, 2.5, 3.5], &table, &space, &prov).unwrap();
    assert!(!front.is_empty());
    assert!(front.iter().all(|p| p.snr_db >= 2.0));
    assert!(front.windows(2).all(|w| w[0].snr_db < w[1].snr_db && w[1].eta_i <= w[0].eta_i));
}

#[test]
fn design_csv_has_fixed_columns() {
    let charts = linear_charts(DB, 6.0, 1.0);
    let p = design_cell(&charts, 6.0, 0.0, 0.0, 0.6, &outer(0.002, 0.9), &small_space(), None).unwrap();
    let mut buf = Vec::new();
    write_design_csv(&mut buf, 0.54, 3, &[(DB, Some(&p)), (1.0, None)]).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "snr_db,gap_db,outer_name,dc_bar,nu,l0,lambda_1,lambda_2,lambda_3,I,eta_i,eta,feasible"
    );
    assert_eq!(lines.len(), 3);
    assert!(lines[1].ends_with(",true"));
    assert!(lines[2].ends_with(",false"));
    assert_eq!(lines[2].split(',').count(), 13);
}

