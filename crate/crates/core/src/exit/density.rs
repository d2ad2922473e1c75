//! Population-based density evolution: tracks sampled message populations
//! through the actual check and variable updates, without the Gaussian
//! assumption on variable messages. Used as an independent oracle for the
//! chart-based iteration predictions.

use rand::Rng;
use rand_distr::Distribution;

use crate::channel::{consistent_gaussian, SnrPoint};
use crate::ensemble::{information_weights, theta_split, InnerEnsemble};
use crate::llr::{from_half_tanh, half_tanh};
use crate::rng;
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct DensityTrace {
    /// Error of messages leaving degree ≥ 2 variables per iteration (entry 0 is the channel).
    pub message_error: Vec<f64>,
    /// Coded-bit a-posteriori error per iteration, averaged over the information set.
    pub bit_error: Vec<f64>,
}

impl DensityTrace {
    /// First iteration whose message error is at or below `pt`.
    pub fn iterations_to(&self, pt: f64) -> Option<usize> {
        self.message_error.iter().position(|&p| p <= pt)
    }

    pub fn iterations_to_bit_error(&self, target: f64) -> Option<usize> {
        self.bit_error.iter().position(|&p| p <= target)
    }
}

pub fn population_density_evolution(
    ensemble: &InnerEnsemble,
    snr: &SnrPoint,
    population: usize,
    iterations: usize,
    seed: u64,
) -> Result<DensityTrace> {
    let checks = ensemble.check_distribution();
    let split = theta_split(ensemble.nu)?;
    let channel = consistent_gaussian(snr.llr_mean());
    let mut rng = rng::keyed(seed, rng::stream::CHART, u64::MAX);

    // Degree sampling for degree ≥ 2 edges (edge perspective) and coded nodes (node perspective).
    let edge_cdf = cumulative(&ensemble.lambda, 2);
    let info = information_weights(&ensemble.coded_node_fractions(), ensemble.r_c);
    let info_cdf = cumulative(&info, 1);

    let mut vars: Vec<f64> = (0..population).map(|_| channel.sample(&mut rng)).collect();
    let mut checks_out = vec![0.0; population];
    let err = |v: &[f64]| v.iter().filter(|&&x| x < 0.0).count() as f64 / v.len() as f64;

    let mut message_error = vec![err(&vars)];
    let mut bit_error = vec![snr.p0];
    for _ in 0..iterations {
        for out in checks_out.iter_mut() {
            let degree = if rng.random::<f64>() < checks.rho[0] { checks.dc } else { checks.dc + 1 };
            let ones = if split.is_integer() || rng.random::<f64>() < split.theta {
                split.low
            } else {
                split.high
            };
            let ones = ones.min(degree - 1);
            let mut prod = 1.0;
            for _ in 0..ones {
                prod *= half_tanh(channel.sample(&mut rng));
            }
            for _ in 0..(degree - 1 - ones) {
                prod *= half_tanh(vars[rng.random_range(0..population)]);
            }
            *out = from_half_tanh(prod);
        }
        let mut bit_errors = 0usize;
        for _ in 0..population {
            let degree = sample(&info_cdf, rng.random());
            let mut v = channel.sample(&mut rng);
            for _ in 0..degree {
                v += checks_out[rng.random_range(0..population)];
            }
            if v < 0.0 {
                bit_errors += 1;
            }
        }
        for v in vars.iter_mut() {
            let degree = sample(&edge_cdf, rng.random());
            let mut x = channel.sample(&mut rng);
            for _ in 1..degree {
                x += checks_out[rng.random_range(0..population)];
            }
            *v = x;
        }
        message_error.push(err(&vars));
        bit_error.push(bit_errors as f64 / population as f64);
    }
    Ok(DensityTrace { message_error, bit_error })
}

fn cumulative(weights: &[f64], from: usize) -> Vec<(usize, f64)> {
    let total: f64 = weights.iter().skip(from).sum();
    let mut acc = 0.0;
    weights
        .iter()
        .enumerate()
        .skip(from)
        .filter(|(_, &w)| w > 0.0)
        .map(|(i, &w)| {
            acc += w / total;
            (i, acc)
        })
        .collect()
}

fn sample(cdf: &[(usize, f64)], u: f64) -> usize {
    cdf.iter().find(|&&(_, c)| u < c).unwrap_or(&cdf[cdf.len() - 1]).0
}
