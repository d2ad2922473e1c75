//! Log-barrier interior-point minimization over linear inequalities and a
//! single linear equality.

use nalgebra::{DMatrix, DVector};

/// Smooth objective evaluated at a point; `None` outside its domain.
pub(crate) trait Objective {
    fn eval(&self, z: &[f64]) -> Option<(f64, Vec<f64>, Vec<Vec<f64>>)>;

    fn value(&self, z: &[f64]) -> Option<f64> {
        self.eval(z).map(|v| v.0)
    }
}

/// Inequalities `rows[k]·z ≤ rhs[k]`.
#[derive(Debug, Clone, Default)]
pub(crate) struct Inequalities {
    pub rows: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
}

impl Inequalities {
    pub fn push(&mut self, row: Vec<f64>, rhs: f64) {
        self.rows.push(row);
        self.rhs.push(rhs);
    }

    pub fn slacks(&self, z: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .zip(&self.rhs)
            .map(|(r, &b)| b - dot(r, z))
            .collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct BarrierOptions {
    pub gap_tolerance: f64,
    pub t0: f64,
    pub growth: f64,
    pub max_newton: usize,
}

impl Default for BarrierOptions {
    fn default() -> Self {
        Self {
            gap_tolerance: 1e-7,
            t0: 1.0,
            growth: 20.0,
            max_newton: 60,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct BarrierResult {
    pub z: Vec<f64>,
    /// Complementarity bound `m / t` at termination.
    pub gap: f64,
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizes `obj` from the strictly feasible `z0`, keeping `eq·z` fixed.
/// `stop` is checked after every Newton step and ends the run early.
pub(crate) fn minimize(
    obj: &dyn Objective,
    ineq: &Inequalities,
    eq: &[f64],
    z0: Vec<f64>,
    opts: BarrierOptions,
    stop: &dyn Fn(&[f64]) -> bool,
) -> Option<BarrierResult> {
    let n = z0.len();
    let m = ineq.rows.len().max(1) as f64;
    let mut z = z0;
    if ineq.slacks(&z).iter().any(|&s| !(s > 0.0)) {
        return None;
    }
    obj.value(&z)?;
    let mut t = opts.t0;

    let phi = |z: &[f64], t: f64| -> Option<f64> {
        let mut acc = t * obj.value(z)?;
        for s in ineq.slacks(z) {
            if !(s > 0.0) {
                return None;
            }
            acc -= s.ln();
        }
        Some(acc)
    };

    loop {
        for _ in 0..opts.max_newton {
            let (_, g, h) = obj.eval(&z)?;
            let slacks = ineq.slacks(&z);
            let mut hess = DMatrix::<f64>::zeros(n + 1, n + 1);
            let mut grad = DVector::<f64>::zeros(n + 1);
            for i in 0..n {
                grad[i] = t * g[i];
                for j in 0..n {
                    hess[(i, j)] = t * h[i][j];
                }
            }
            for (row, &s) in ineq.rows.iter().zip(&slacks) {
                let inv = 1.0 / s;
                for i in 0..n {
                    if row[i] == 0.0 {
                        continue;
                    }
                    grad[i] += row[i] * inv;
                    for j in 0..n {
                        hess[(i, j)] += row[i] * row[j] * inv * inv;
                    }
                }
            }
            let scale = (0..n).map(|i| hess[(i, i)].abs()).fold(0.0, f64::max).max(1e-300);
            for i in 0..n {
                hess[(i, i)] += 1e-13 * scale;
                hess[(i, n)] = eq[i];
                hess[(n, i)] = eq[i];
            }
            let rhs = -grad.clone();
            let sol = hess.clone().lu().solve(&rhs)?;
            let dz: Vec<f64> = sol.iter().take(n).copied().collect();
            let slope: f64 = (0..n).map(|i| grad[i] * dz[i]).sum();
            let decrement = -slope;
            if decrement / 2.0 <= 1e-9 {
                break;
            }
            let base = phi(&z, t)?;
            let mut alpha = 1.0;
            let mut accepted = false;
            for _ in 0..60 {
                let trial: Vec<f64> = z.iter().zip(&dz).map(|(a, b)| a + alpha * b).collect();
                if let Some(v) = phi(&trial, t) {
                    if v <= base + 0.25 * alpha * slope + 1e-14 * base.abs() {
                        z = trial;
                        accepted = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if !accepted {
                break;
            }
            if stop(&z) {
                return Some(BarrierResult { z, gap: m / t });
            }
        }
        if m / t < opts.gap_tolerance {
            break;
        }
        t *= opts.growth;
    }
    Some(BarrierResult { z, gap: m / t })
}

/// Linear objective `c·z`.
pub(crate) struct Linear(pub Vec<f64>);

impl Objective for Linear {
    fn eval(&self, z: &[f64]) -> Option<(f64, Vec<f64>, Vec<Vec<f64>>)> {
        let n = z.len();
        Some((dot(&self.0, z), self.0.clone(), vec![vec![0.0; n]; n]))
    }
}

/// Finds a point with every normalized slack positive, by maximizing the
/// smallest one. Each inequality is divided by `scale[k]` first. Returns the
/// point and its minimum normalized slack, or `None` when the best achievable
/// slack is not positive.
pub(crate) fn phase_one(
    ineq: &Inequalities,
    scale: &[f64],
    eq: &[f64],
    z0: Vec<f64>,
    wanted_margin: f64,
) -> Option<(Vec<f64>, f64)> {
    let n = z0.len();
    // Variables (z, sigma); constraints (row·z - rhs)/scale - sigma ≤ 0.
    let mut relaxed = Inequalities::default();
    for ((row, &b), &s) in ineq.rows.iter().zip(&ineq.rhs).zip(scale) {
        let mut r: Vec<f64> = row.iter().map(|x| x / s).collect();
        r.push(-1.0);
        relaxed.push(r, b / s);
    }
    // Keep sigma bounded below so the problem stays bounded.
    let mut floor = vec![0.0; n];
    floor.push(-1.0);
    relaxed.push(floor, 1.0);
    let worst = ineq
        .rows
        .iter()
        .zip(&ineq.rhs)
        .zip(scale)
        .map(|((r, &b), &s)| (dot(r, &z0) - b) / s)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut start = z0;
    start.push(worst.max(0.0) + 1.0);
    let mut eq_ext = eq.to_vec();
    eq_ext.push(0.0);
    let mut c = vec![0.0; n];
    c.push(1.0);
    let opts = BarrierOptions { gap_tolerance: 1e-9, ..Default::default() };
    let res = minimize(&Linear(c), &relaxed, &eq_ext, start, opts, &|z| z[n] < -wanted_margin)?;
    let mut z = res.z;
    let sigma = z.pop()?;
    let min_slack = ineq
        .slacks(&z)
        .iter()
        .zip(scale)
        .map(|(s, sc)| s / sc)
        .fold(f64::INFINITY, f64::min);
    (sigma < 0.0 && min_slack > 0.0).then_some((z, min_slack))
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Quadratic(Vec<f64>);

    impl Objective for Quadratic {
        fn eval(&self, z: &[f64]) -> Option<(f64, Vec<f64>, Vec<Vec<f64>>)> {
            let n = z.len();
            let v = z.iter().zip(&self.0).map(|(a, b)| (a - b).powi(2)).sum();
            let g = z.iter().zip(&self.0).map(|(a, b)| 2.0 * (a - b)).collect();
            let mut h = vec![vec![0.0; n]; n];
            for (i, row) in h.iter_mut().enumerate() {
                row[i] = 2.0;
            }
            Some((v, g, h))
        }
    }

    fn simplex_bounds(n: usize) -> Inequalities {
        let mut ineq = Inequalities::default();
        for i in 0..n {
            let mut r = vec![0.0; n];
            r[i] = -1.0;
            ineq.push(r, 0.0);
        }
        ineq
    }

    #[test]
    fn projects_onto_simplex() {
        // min |z - (0.8, 0.6, -0.4)|² on the probability simplex → (0.6, 0.4, 0).
        let ineq = simplex_bounds(3);
        let res = minimize(
            &Quadratic(vec![0.8, 0.6, -0.4]),
            &ineq,
            &[1.0, 1.0, 1.0],
            vec![1.0 / 3.0; 3],
            BarrierOptions::default(),
            &|_| false,
        )
        .unwrap();
        assert!((res.z[0] - 0.6).abs() < 1e-6, "{:?}", res.z);
        assert!((res.z[1] - 0.4).abs() < 1e-6);
        assert!(res.z[2].abs() < 1e-6);
        assert!(res.gap < 1e-7);
    }

    #[test]
    fn phase_one_finds_interior_or_reports_infeasible() {
        let mut ineq = simplex_bounds(2);
        // z0 ≥ 0.7 on the simplex.
        ineq.push(vec![-1.0, 0.0], -0.7);
        let (z, slack) = phase_one(&ineq, &[1.0, 1.0, 1.0], &[1.0, 1.0], vec![0.0, 1.0], 1e-3).unwrap();
        assert!(z[0] > 0.7 && z[1] > 0.0 && slack > 0.0);
        assert!((z[0] + z[1] - 1.0).abs() < 1e-9);
        // z0 ≥ 1.2 cannot hold on the simplex.
        ineq.push(vec![-1.0, 0.0], -1.2);
        assert!(phase_one(&ineq, &[1.0; 4], &[1.0, 1.0], vec![0.5, 0.5], 1e-3).is_none());
    }
}
