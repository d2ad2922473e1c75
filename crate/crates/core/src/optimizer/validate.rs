//! Constraint check by direct substitution, independent of the solver.

use super::{iteration_budget, DesignPoint, DesignSpace, VALIDATION_SLACK};
use crate::ensemble::inverse_degree_sum;
use crate::exit::{combine, max_uncoded, message_to_bit_error, ExitChartSet};
use crate::{Error, Result};

fn violated(what: impl Into<String>) -> Error {
    Error::Infeasible(format!("constraint violated: {}", what.into()))
}

/// Re-checks every constraint of the design problem for `point` against
/// `charts`: simplex, `ν`, rate, `L_0` range, openness at each quantization
/// point and the outer-threshold budget. Also confirms the reported
/// iteration count.
pub fn validate_design(point: &DesignPoint, charts: &ExitChartSet, space: &DesignSpace) -> Result<()> {
    let tol = VALIDATION_SLACK;
    let p0 = charts.p0();
    let (r_in, p_sc) = (point.r_in, point.outer.p_sc);
    let l0_max = max_uncoded(p_sc, r_in, p0);
    if point.is_trivial() {
        if l0_max < 1.0 {
            return Err(violated("L0 = 1 while the channel misses the threshold"));
        }
        return Ok(());
    }
    let ens = &point.ensemble;
    let lambda = &ens.lambda;
    let l0 = ens.l0();

    if lambda.iter().any(|&x| x < -tol) || (lambda.iter().sum::<f64>() - 1.0).abs() > tol {
        return Err(violated("λ is not a distribution"));
    }
    if lambda.len() > space.d_v_max + 1 && lambda[space.d_v_max + 1..].iter().any(|&x| x > tol) {
        return Err(violated("λ uses degrees above d_v_max"));
    }
    if (lambda[1] * ens.dc_bar - charts.nu).abs() > tol {
        return Err(violated(format!("λ_1 d̄_c = {} but ν = {}", lambda[1] * ens.dc_bar, charts.nu)));
    }
    if (ens.dc_bar - charts.dc_bar).abs() > tol {
        return Err(violated("d̄_c differs from the chart cell"));
    }
    let rate_rhs = (1.0 - l0) / (ens.dc_bar * (1.0 - r_in));
    if inverse_degree_sum(lambda) < rate_rhs - tol {
        return Err(violated("rate"));
    }
    if l0 < -tol || l0 > l0_max + tol {
        return Err(violated(format!("L0 = {l0} outside [0, {l0_max}]")));
    }

    let pt = point.pt;
    let (pts, weights) = space.quantization.points(p0, pt, space.q_points);
    let mut iq = 0.0;
    for &q in [pt, p0].iter().chain(&pts) {
        let f = combine(lambda, charts, q)?;
        if !(f < q) {
            return Err(violated(format!("openness at p = {q:e}")));
        }
    }
    for (&q, &w) in pts.iter().zip(&weights) {
        iq += w / (q / combine(lambda, charts, q)?).ln();
    }

    let r_c = (r_in - l0) / (1.0 - l0);
    let big_pt = message_to_bit_error(lambda, charts, pt)?;
    if l0 * p0 + (1.0 - l0) * r_c * big_pt > p_sc * r_in + tol {
        return Err(violated("outer-threshold budget"));
    }
    if (iq - point.iq).abs() > 1e-9 * (1.0 + iq) || iteration_budget(iq) != point.iters {
        return Err(violated(format!("iteration count {} vs recomputed {iq}", point.iq)));
    }
    Ok(())
}
