use serde::{Deserialize, Serialize};

use super::{mean_to_p, p_to_mean, ExitChartSet};
use crate::ensemble::{coded_rate, information_weights, node_from_edge};
use crate::{Error, Result};

/// Smallest target message error the functional accepts.
pub const PT_FLOOR: f64 = 1e-7;

/// How `[p_t, p_0]` is quantized for the iteration sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Quantization {
    /// Left Riemann sum on `q_i = p_t + iΔ`, `Δ = (p_0 - p_t)/Q`.
    Uniform,
    /// Midpoint rule in `ln p` with `Q` equal steps.
    #[default]
    Geometric,
}

impl Quantization {
    /// Quantization points and the weight each point carries in the sum,
    /// such that `I_Q = Σ w_j / ln(q_j / f(q_j))`.
    pub fn points(self, p0: f64, pt: f64, q: usize) -> (Vec<f64>, Vec<f64>) {
        let q = q.max(1);
        match self {
            Quantization::Uniform => {
                let delta = (p0 - pt) / q as f64;
                let pts: Vec<f64> = (0..q).map(|i| pt + i as f64 * delta).collect();
                let w = pts.iter().map(|&x| delta / x).collect();
                (pts, w)
            }
            Quantization::Geometric => {
                let h = (p0.ln() - pt.ln()) / q as f64;
                let pts = (0..q).map(|i| (pt.ln() + (i as f64 + 0.5) * h).exp()).collect();
                (pts, vec![h; q])
            }
        }
    }
}

/// Discretized iteration count for an arbitrary EXIT function `f`.
///
/// Openness is required at every quantization point and at both ends of the
/// interval; the first violation is reported.
pub fn iterations_with(
    f: impl Fn(f64) -> Result<f64>,
    p0: f64,
    pt: f64,
    q: usize,
    rule: Quantization,
) -> Result<f64> {
    if !(pt > 0.0) {
        return Err(Error::Domain(format!("target message error {pt} must be positive")));
    }
    if pt >= p0 {
        return Ok(0.0);
    }
    let (pts, weights) = rule.points(p0, pt, q);
    for &x in [pt, p0].iter().chain(&pts) {
        let fx = f(x)?;
        if !(fx < x) {
            return Err(Error::NotOpen { point: x, value: fx });
        }
    }
    let mut total = 0.0;
    for (&x, &w) in pts.iter().zip(&weights) {
        total += w / (x / f(x)?).ln();
    }
    Ok(total)
}

/// Combined chart for the error of messages leaving degree ≥ 2 variables:
/// `f_Λ(p) = Σ_{i≥2} λ_i f_i(p) / (1 - λ_1)`.
///
/// Degree-one neighbours already enter every simulated check as raw channel
/// messages, so their constant `f_1 = p0` is not folded in a second time.
/// An ensemble with every edge on degree one yields `f_1`.
pub fn combine(lambda: &[f64], charts: &ExitChartSet, p: f64) -> Result<f64> {
    let l1 = lambda.get(1).copied().unwrap_or(0.0);
    if l1 >= 1.0 - 1e-15 {
        return charts.elementary(1, p);
    }
    let mut upper = lambda.to_vec();
    if upper.len() > 1 {
        upper[1] = 0.0;
    }
    Ok(charts.weighted(&upper, p)? / (1.0 - l1))
}

pub fn predicted_iterations(
    lambda: &[f64],
    charts: &ExitChartSet,
    pt: f64,
    q: usize,
    rule: Quantization,
) -> Result<f64> {
    iterations_with(|p| combine(lambda, charts, p), charts.p0(), pt, q, rule)
}

/// Number of steps of `p ← f(p)` from `p0` until `p ≤ pt`, or `None` when
/// the recursion stalls within `max_steps`.
pub fn discrete_recursion_iterations(
    f: impl Fn(f64) -> Result<f64>,
    p0: f64,
    pt: f64,
    max_steps: usize,
) -> Result<Option<usize>> {
    let mut p = p0;
    for step in 0..=max_steps {
        if p <= pt {
            return Ok(Some(step));
        }
        p = f(p)?;
    }
    Ok(None)
}

/// A-posteriori error of a degree-`degree` bit with channel mean `m0` and
/// independent check messages of mean `m_check`.
pub fn posterior_error(m0: f64, degree: usize, m_check: f64) -> f64 {
    mean_to_p(m0 + degree as f64 * m_check)
}

/// Information-bit error `P_t` of the coded component once variable messages
/// reach error `pt`: `Σ w_i Q(sqrt((m0 + i m_c)/2))`, where `m_c` is the mean
/// of check-to-variable messages at that point and `w_i` the share of
/// information bits of degree `i` (see [`information_weights`]).
pub fn message_to_bit_error(lambda: &[f64], charts: &ExitChartSet, pt: f64) -> Result<f64> {
    let m0 = charts.snr.llr_mean();
    let m_check = p_to_mean(charts.check_error(pt)?.clamp(1e-300, 0.5))?;
    let r_c = coded_rate(lambda, charts.dc_bar)?;
    let nodes = information_weights(&node_from_edge(lambda, 0.0), r_c);
    Ok(nodes
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, &n)| n > 0.0)
        .map(|(i, &n)| n * posterior_error(m0, i, m_check))
        .sum())
}

/// Largest uncoded fraction that still meets the outer threshold: `p_sc R_in / p0`.
pub fn max_uncoded(p_sc: f64, r_in: f64, p0: f64) -> f64 {
    (p_sc * r_in / p0).clamp(0.0, 1.0)
}

/// Message-error target obtained from the outer-threshold constraint taken
/// with equality. Returns `(p_t, P_t)`.
pub fn target_message_error(
    lambda: &[f64],
    l0: f64,
    charts: &ExitChartSet,
    r_c: f64,
    r_in: f64,
    p_sc: f64,
) -> Result<(f64, f64)> {
    let p0 = charts.p0();
    let budget = (p_sc * r_in - l0 * p0) / ((1.0 - l0) * r_c);
    if !(budget > 0.0) {
        return Err(Error::Infeasible(format!(
            "uncoded fraction {l0} alone exceeds the outer threshold"
        )));
    }
    let at = |p: f64| message_to_bit_error(lambda, charts, p);
    let top = p0.min(charts.grid[charts.grid.len() - 1]);
    if at(top)? <= budget {
        return Ok((top, at(top)?));
    }
    let bottom = charts.grid[0].max(PT_FLOOR);
    if at(bottom)? > budget {
        return Err(Error::Infeasible(format!(
            "bit-error target {budget:e} is below what the chart grid resolves"
        )));
    }
    let (mut lo, mut hi) = (bottom.ln(), top.ln());
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if at(mid.exp())? <= budget {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    let pt = lo.exp();
    Ok((pt, at(pt)?))
}
