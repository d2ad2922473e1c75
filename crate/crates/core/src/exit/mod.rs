//! EXIT analysis of the coded component.
//!
//! Messages are tracked by their error probability under a consistent
//! Gaussian model (mean `m`, variance `2m`). Elementary charts `f_i` are
//! estimated by Monte-Carlo with checks that also see degree-one neighbours,
//! then combined linearly with the edge distribution and fed into the
//! iteration functional.

mod charts;
mod density;
mod functional;

pub use charts::{
    default_grid, estimate_elementary_charts, ChartCache, ChartRequest, ExitChartSet,
    DEFAULT_GRID_POINTS, DEFAULT_SAMPLES, MIN_SAMPLES,
};
pub use density::{population_density_evolution, DensityTrace};
pub use functional::{
    combine, discrete_recursion_iterations, iterations_with, max_uncoded, message_to_bit_error,
    posterior_error, predicted_iterations, target_message_error, Quantization, PT_FLOOR,
};

use statrs::function::erf::{erfc, erfc_inv};

use crate::{Error, Result};

/// Error probability of a consistent Gaussian message with mean `m`: `Q(sqrt(m/2))`.
pub fn mean_to_p(m: f64) -> f64 {
    if m <= 0.0 {
        return 0.5;
    }
    0.5 * erfc(0.5 * m.sqrt())
}

/// Inverse of [`mean_to_p`]: `m = (2 erfc⁻¹(2p))²`.
pub fn p_to_mean(p: f64) -> Result<f64> {
    if !(p > 0.0 && p <= 0.5) {
        return Err(Error::Domain(format!("message error {p} outside (0, 1/2]")));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    // One Newton step on erfc(x) = 2p tightens the inverse to the accuracy of erfc.
    let mut x = erfc_inv(2.0 * p);
    x += (erfc(x) - 2.0 * p) * std::f64::consts::PI.sqrt() * 0.5 * (x * x).exp();
    let r = 2.0 * x;
    Ok(r * r)
}

/// The literal mean expression `(2 erfc⁻¹(p))²`, kept for comparison only.
/// A consistent Gaussian with this mean has error `Q(erfc⁻¹(p)/sqrt 2)`,
/// not `p`; see the round-trip tests.
pub fn p_to_mean_unscaled(p: f64) -> f64 {
    let r = 2.0 * erfc_inv(p);
    r * r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::consistent_gaussian;
    use crate::rng;
    use rand_distr::Distribution;

    #[test]
    fn mean_probability_round_trip() {
        assert_eq!(p_to_mean(0.5).unwrap(), 0.0);
        assert_eq!(mean_to_p(0.0), 0.5);
        for &p in &[1e-6, 1e-4, 0.01, 0.1, 0.4, 0.499] {
            let back = mean_to_p(p_to_mean(p).unwrap());
            assert!((back - p).abs() <= 1e-10 * p.max(1e-3), "{p} -> {back}");
        }
        assert!(p_to_mean(0.0).is_err());
        assert!(p_to_mean(0.6).is_err());
        let mut prev = 0.5;
        for k in 1..200 {
            let q = mean_to_p(k as f64 * 0.2);
            assert!(q < prev);
            prev = q;
        }
    }

    #[test]
    fn sampled_gaussian_error_matches_closed_form() {
        let m = 4.0;
        let d = consistent_gaussian(m);
        let mut r = rng::keyed(3, 0, 0);
        let n = 10_000_000usize;
        let neg = (0..n).filter(|_| d.sample(&mut r) < 0.0).count() as f64 / n as f64;
        let expect = mean_to_p(m);
        assert!((expect - 0.0786).abs() < 1e-4);
        let sd = (expect * (1.0 - expect) / n as f64).sqrt();
        assert!((neg - expect).abs() < 3.0 * sd, "{neg} vs {expect}");
        // The unscaled form does not reproduce its input probability.
        let p = 0.0786;
        assert!((mean_to_p(p_to_mean_unscaled(p)) - p).abs() > 0.01);
    }
}
