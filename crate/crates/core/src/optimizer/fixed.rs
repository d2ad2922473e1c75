//! The convex program at a fixed `(d̄_c, ν, L_0)` cell.

use super::barrier::{self, dot, BarrierOptions, Inequalities, Objective};
use super::DesignSpace;
use crate::exit::{
    max_uncoded, p_to_mean, posterior_error, predicted_iterations, target_message_error,
    ExitChartSet, PT_FLOOR,
};
use crate::{Error, Result};

/// L1 movement of λ that triggers a fresh target message error.
pub const PT_REFRESH: f64 = 0.05;
const MAX_ROUNDS: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct FixedSolution {
    /// Edge-perspective coefficients indexed by degree, `lambda[0] == 0`.
    pub lambda: Vec<f64>,
    pub iq: f64,
    pub pt: f64,
    pub big_pt: f64,
    /// Complementarity bound of the last barrier run.
    pub kkt_residual: f64,
    /// True when the channel alone meets the outer threshold and `L_0 = 1`.
    pub trivial: bool,
}

/// Problem data shared by the rounds of one solve.
struct Cell<'a> {
    charts: &'a ExitChartSet,
    dc_bar: f64,
    l1: f64,
    l0: f64,
    r_in: f64,
    r_c: f64,
    p_sc: f64,
    degree: usize,
    space: &'a DesignSpace,
}

impl Cell<'_> {
    fn n(&self) -> usize {
        self.degree - 1
    }

    fn full(&self, x: &[f64]) -> Vec<f64> {
        let mut lambda = vec![0.0, self.l1];
        lambda.extend_from_slice(x);
        lambda
    }

    fn mass(&self) -> f64 {
        1.0 - self.l1
    }

    fn rate_rhs(&self) -> f64 {
        (1.0 - self.l0) / (self.dc_bar * (1.0 - self.r_in)) - self.l1
    }

    /// Simplex bounds and the rate constraint, with phase-I scales.
    fn linear_constraints(&self) -> (Inequalities, Vec<f64>) {
        let n = self.n();
        let mut ineq = Inequalities::default();
        let mut scale = Vec::new();
        for i in 0..n {
            let mut row = vec![0.0; n];
            row[i] = -1.0;
            ineq.push(row, 0.0);
            scale.push(1.0);
        }
        let row = (0..n).map(|k| -1.0 / (k + 2) as f64).collect();
        let rhs = self.rate_rhs();
        ineq.push(row, -rhs);
        scale.push(rhs.abs().max(1e-3));
        (ineq, scale)
    }

    fn target(&self, x: &[f64]) -> Result<(f64, f64)> {
        target_message_error(&self.full(x), self.l0, self.charts, self.r_c, self.r_in, self.p_sc)
    }

    fn iterations(&self, x: &[f64], pt: f64) -> Result<f64> {
        predicted_iterations(&self.full(x), self.charts, pt, self.space.q_points, self.space.quantization)
    }
}

struct IterationObjective {
    rows: Vec<Vec<f64>>,
    weights: Vec<f64>,
    q: Vec<f64>,
    mass: f64,
}

impl Objective for IterationObjective {
    fn value(&self, x: &[f64]) -> Option<f64> {
        let mut value = 0.0;
        for ((row, &w), &q) in self.rows.iter().zip(&self.weights).zip(&self.q) {
            let f = dot(row, x) / self.mass;
            if !(f < q) {
                return None;
            }
            if f > 0.0 {
                value += w / (q / f).ln();
            }
        }
        Some(value)
    }

    fn eval(&self, x: &[f64]) -> Option<(f64, Vec<f64>, Vec<Vec<f64>>)> {
        let n = x.len();
        let mut value = 0.0;
        let mut grad = vec![0.0; n];
        let mut hess = vec![vec![0.0; n]; n];
        for ((row, &w), &q) in self.rows.iter().zip(&self.weights).zip(&self.q) {
            let f = dot(row, x) / self.mass;
            if !(f < q) {
                return None;
            }
            if !(f > 0.0) {
                continue;
            }
            let l = (q / f).ln();
            value += w / l;
            let g1 = w / (f * l * l) / self.mass;
            let g2 = (w * (2.0 - l) / (f * f * l * l * l)).max(0.0) / (self.mass * self.mass);
            for i in 0..n {
                grad[i] += g1 * row[i];
                if g2 > 0.0 && row[i] != 0.0 {
                    for j in 0..n {
                        hess[i][j] += g2 * row[i] * row[j];
                    }
                }
            }
        }
        Some((value, grad, hess))
    }
}

/// Minimizes the discretized iteration count over λ at one design cell.
///
/// `init`, when given, is a full edge-perspective vector used as the first
/// reference point. The target message error is recomputed from the outer
/// threshold whenever λ moves by more than [`PT_REFRESH`] in L1.
#[allow(clippy::too_many_arguments)]
pub fn solve_fixed(
    charts: &ExitChartSet,
    dc_bar: f64,
    nu: f64,
    l0: f64,
    r_in: f64,
    p_sc: f64,
    space: &DesignSpace,
    init: Option<&[f64]>,
) -> Result<FixedSolution> {
    if (charts.dc_bar - dc_bar).abs() > 1e-9 {
        return Err(Error::Domain(format!(
            "charts were estimated at d̄_c = {}, not {dc_bar}",
            charts.dc_bar
        )));
    }
    if !(r_in > 0.0 && r_in < 1.0) || !(p_sc > 0.0 && p_sc < 0.5) || !(0.0..=1.0).contains(&l0) {
        return Err(Error::Domain("rates, threshold or L0 out of range".into()));
    }
    let p0 = charts.p0();
    let l0_max = max_uncoded(p_sc, r_in, p0);
    if l0 > l0_max + 1e-12 {
        return Err(Error::Infeasible(format!("L0 = {l0} exceeds L0_max = {l0_max}")));
    }
    if l0_max >= 1.0 && l0 >= 1.0 {
        return Ok(FixedSolution {
            lambda: vec![0.0; space.d_v_max + 1],
            iq: 0.0,
            pt: p0,
            big_pt: 0.0,
            kkt_residual: 0.0,
            trivial: true,
        });
    }
    if l0 >= r_in {
        return Err(Error::Infeasible(format!("L0 = {l0} leaves no room for parity at R_in = {r_in}")));
    }
    let l1 = nu / dc_bar;
    if !(l1 < 1.0) || nu < 0.0 {
        return Err(Error::Domain(format!("ν = {nu} is incompatible with d̄_c = {dc_bar}")));
    }
    let degree = space.d_v_max.min(charts.max_degree());
    if degree < 2 {
        return Err(Error::Domain("at least degree 2 is required".into()));
    }
    let cell = Cell {
        charts,
        dc_bar,
        l1,
        l0,
        r_in,
        r_c: (r_in - l0) / (1.0 - l0),
        p_sc,
        degree,
        space,
    };
    if cell.rate_rhs() > cell.mass() / 2.0 {
        return Err(Error::Infeasible("rate constraint cannot hold with degrees ≥ 2".into()));
    }

    let warm = init
        .filter(|v| v.len() == degree + 1 && (v[1] - l1).abs() < 1e-9)
        .map(|v| v[2..].to_vec());
    let reference = initial_reference(&cell, warm)?;
    let (mut x, mut pt) = best_target_pair(&cell, &reference)?;

    // Refresh rounds: re-derive p_t from λ and re-solve while λ keeps moving.
    let mut accepted: Option<FixedSolution> = None;
    let mut last_err = None;
    for _ in 0..MAX_ROUNDS {
        let (pt_new, big_pt) = match cell.target(&x.0) {
            Ok(v) => v,
            Err(e) => {
                last_err = Some(e);
                break;
            }
        };
        match cell.iterations(&x.0, pt_new) {
            Ok(iq) if accepted.as_ref().is_none_or(|a| iq < a.iq) => {
                accepted = Some(FixedSolution {
                    lambda: cell.full(&x.0),
                    iq,
                    pt: pt_new,
                    big_pt,
                    kkt_residual: x.1,
                    trivial: false,
                });
            }
            Ok(_) => {}
            Err(e) => last_err = Some(e),
        }
        if (pt_new / pt).ln().abs() < 1e-9 {
            break;
        }
        let next = match Program::new(&cell, pt_new, &x.0).and_then(|prog| prog.solve(&x.0)) {
            Ok(v) => v,
            Err(e) => {
                last_err.get_or_insert(e);
                break;
            }
        };
        let moved: f64 = next.0.iter().zip(&x.0).map(|(a, b)| (a - b).abs()).sum();
        pt = pt_new;
        let settled = moved <= PT_REFRESH;
        x = next;
        if settled {
            // One last evaluation of the nearly unchanged λ.
            if let Ok((pt_last, big_pt)) = cell.target(&x.0) {
                if let Ok(iq) = cell.iterations(&x.0, pt_last) {
                    if accepted.as_ref().is_none_or(|a| iq < a.iq) {
                        accepted = Some(FixedSolution {
                            lambda: cell.full(&x.0),
                            iq,
                            pt: pt_last,
                            big_pt,
                            kkt_residual: x.1,
                            trivial: false,
                        });
                    }
                }
            }
            break;
        }
    }
    accepted.ok_or_else(|| match last_err {
        Some(Error::NotOpen { point, value }) => Error::Infeasible(format!(
            "EXIT chart cannot be opened: f(p) = {value:e} ≥ p at p = {point:e}"
        )),
        Some(e) => e,
        None => Error::Infeasible("no feasible λ".into()),
    })
}

/// A starting λ on the simplex meeting the rate constraint: the warm start
/// when usable, otherwise the most central point.
fn initial_reference(cell: &Cell, warm: Option<Vec<f64>>) -> Result<Vec<f64>> {
    let n = cell.n();
    let rhs = cell.rate_rhs();
    if let Some(x) = warm {
        if x.iter().zip(2..).map(|(v, i)| v / i as f64).sum::<f64>() > rhs && x.iter().all(|&v| v > 0.0) {
            return Ok(x);
        }
    }
    let (ineq, scale) = cell.linear_constraints();
    barrier::phase_one(&ineq, &scale, &vec![1.0; n], vec![cell.mass() / n as f64; n], 1e-2)
        .map(|(x, _)| x)
        .ok_or_else(|| Error::Infeasible("rate and simplex constraints are incompatible".into()))
}

const SCAN_POINTS: usize = 12;
const EDGE_STEPS: usize = 6;
const GOLDEN_STEPS: usize = 10;

/// Searches `ln p_t` for the frozen-target program with the smallest optimum.
fn best_target_pair(cell: &Cell, reference: &[f64]) -> Result<((Vec<f64>, f64), f64)> {
    let grid = &cell.charts.grid;
    let lo = grid[0].max(PT_FLOOR).ln();
    let hi = (cell.charts.p0().min(grid[grid.len() - 1]) * (1.0 - 1e-9)).ln();
    let feasible = |u: f64| -> Option<Vec<f64>> {
        Program::new(cell, u.exp(), reference).ok()?.feasible_point(reference)
    };
    let mut scan: Vec<(f64, Option<Vec<f64>>)> = Vec::with_capacity(SCAN_POINTS);
    for k in 0..SCAN_POINTS {
        let u = lo + (hi - lo) * k as f64 / (SCAN_POINTS - 1) as f64;
        scan.push((u, feasible(u)));
    }
    let Some(top) = scan.iter().rposition(|(_, x)| x.is_some()) else {
        // Report why the least demanding end fails.
        let err = Program::new(cell, hi.exp(), reference)
            .and_then(|prog| prog.solve(reference).map(|_| ()))
            .err();
        return Err(err.unwrap_or_else(|| {
            Error::Infeasible("no target message error admits a feasible λ".into())
        }));
    };
    let bottom = scan.iter().position(|(_, x)| x.is_some()).unwrap_or(top);
    // Push the upper edge of the feasible range outward.
    let (mut a, mut b) = (scan[top].0, scan.get(top + 1).map_or(scan[top].0, |s| s.0));
    for _ in 0..EDGE_STEPS {
        if b <= a {
            break;
        }
        let mid = 0.5 * (a + b);
        if feasible(mid).is_some() {
            a = mid;
        } else {
            b = mid;
        }
    }
    let (u_lo, u_hi) = (scan[bottom].0, a);
    let eval = |u: f64| -> Option<((Vec<f64>, f64), f64)> {
        let prog = Program::new(cell, u.exp(), reference).ok()?;
        let start = prog.feasible_point(reference)?;
        let sol = prog.solve(&start).ok()?;
        let iq = prog.objective.value(&sol.0)?;
        Some((sol, iq))
    };
    let mut best: Option<((Vec<f64>, f64), f64, f64)> = None;
    let mut consider = |u: f64, r: Option<((Vec<f64>, f64), f64)>| -> f64 {
        match r {
            Some((sol, iq)) => {
                if best.as_ref().is_none_or(|b| iq < b.1) {
                    best = Some((sol, iq, u));
                }
                iq
            }
            None => f64::INFINITY,
        }
    };
    if u_hi - u_lo < 1e-9 {
        consider(u_hi, eval(u_hi));
    } else {
        let g = (5f64.sqrt() - 1.0) / 2.0;
        let (mut a, mut b) = (u_lo, u_hi);
        let mut c = b - g * (b - a);
        let mut d = a + g * (b - a);
        let mut fc = consider(c, eval(c));
        let mut fd = consider(d, eval(d));
        consider(u_hi, eval(u_hi));
        for _ in 0..GOLDEN_STEPS {
            if fc <= fd {
                b = d;
                d = c;
                fd = fc;
                c = b - g * (b - a);
                fc = consider(c, eval(c));
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + g * (b - a);
                fd = consider(d, eval(d));
            }
        }
    }
    best.map(|(sol, _, u)| (sol, u.exp()))
        .ok_or_else(|| Error::Infeasible("barrier solves failed on the feasible target range".into()))
}

/// The outer-threshold budget at fixed `pt` as a linear constraint on
/// `x = λ_2..`, exact while the parity bits occupy the lowest degrees the
/// way they do at `reference`.
fn budget_row(cell: &Cell, pt: f64, reference: &[f64]) -> Result<(Vec<f64>, f64)> {
    let m0 = cell.charts.snr.llr_mean();
    let m_check = p_to_mean(cell.charts.check_error(pt)?.clamp(1e-300, 0.5))?;
    let q: Vec<f64> = (0..=cell.degree).map(|i| posterior_error(m0, i, m_check)).collect();
    let p0 = cell.charts.p0();
    let budget = (cell.p_sc * cell.r_in - cell.l0 * p0) / ((1.0 - cell.l0) * cell.r_c);
    let parity = 1.0 / cell.dc_bar;
    // With S = Σ λ_i/i, information bits make up S - 1/d̄_c; parity takes
    // 1/d̄_c greedily from the lowest degrees, up to a partial degree k.
    let lam = cell.full(reference);
    let mut k = 1;
    let mut below = 0.0;
    while k < cell.degree && below + lam[k] / k as f64 <= parity {
        below += lam[k] / k as f64;
        k += 1;
    }
    let mut row = vec![0.0; cell.n()];
    let mut rhs = (q[k] - budget) * parity;
    for i in 1..=cell.degree {
        let mut coef = (q[i] - budget) / i as f64;
        if i < k {
            coef += (q[k] - q[i]) / i as f64;
        }
        if i == 1 {
            rhs -= coef * cell.l1;
        } else {
            row[i - 2] = coef;
        }
    }
    Ok((row, rhs))
}

/// The frozen-target program: linear constraints, budget, openness and the
/// iteration objective at one `p_t`.
struct Program<'a> {
    cell: &'a Cell<'a>,
    ineq: Inequalities,
    scale: Vec<f64>,
    objective: IterationObjective,
}

impl<'a> Program<'a> {
    fn new(cell: &'a Cell<'a>, pt: f64, reference: &[f64]) -> Result<Self> {
        let (pts, weights) = cell.space.quantization.points(cell.charts.p0(), pt, cell.space.q_points);
        let (mut ineq, mut scale) = cell.linear_constraints();
        let (brow, brhs) = budget_row(cell, pt, reference)?;
        let bscale = brow.iter().fold(brhs.abs(), |a, v| a.max(v.abs())).max(1e-12);
        ineq.push(brow, brhs);
        scale.push(bscale);
        let mut rows = Vec::with_capacity(pts.len() + 2);
        for &p in [pt, cell.charts.p0()].iter().chain(&pts) {
            let row: Vec<f64> = (2..=cell.degree)
                .map(|i| cell.charts.elementary(i, p))
                .collect::<Result<_>>()?;
            ineq.push(row.clone(), cell.mass() * p);
            scale.push(cell.mass() * p);
            rows.push(row);
        }
        let objective = IterationObjective {
            rows: rows.split_off(2),
            weights,
            q: pts,
            mass: cell.mass(),
        };
        Ok(Self { cell, ineq, scale, objective })
    }

    fn feasible_point(&self, start: &[f64]) -> Option<Vec<f64>> {
        if self.ineq.slacks(start).iter().all(|&s| s > 0.0) {
            return Some(start.to_vec());
        }
        let n = self.cell.n();
        let uniform = vec![self.cell.mass() / n as f64; n];
        barrier::phase_one(&self.ineq, &self.scale, &vec![1.0; n], uniform, 1e-3).map(|(x, _)| x)
    }

    fn solve(&self, start: &[f64]) -> Result<(Vec<f64>, f64)> {
        let start = self.feasible_point(start).ok_or_else(|| {
            Error::Infeasible("no λ meets openness and the bit-error budget at this target".into())
        })?;
        let eq = vec![1.0; self.cell.n()];
        let res = barrier::minimize(&self.objective, &self.ineq, &eq, start, BarrierOptions::default(), &|_| false)
            .ok_or_else(|| Error::Infeasible("barrier iteration failed".into()))?;
        Ok((res.z, res.gap))
    }
}

