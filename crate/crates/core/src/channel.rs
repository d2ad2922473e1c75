//! Gray-labelled QPSK over AWGN, viewed as two independent binary-input
//! channels per symbol with amplitude `1/sqrt(2)` and per-dimension noise
//! variance `sigma2`. SNR is `Es/N0 = -10 log10(2 sigma2)`.

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use std::sync::OnceLock;

use crate::rng;
use crate::{Error, Result};

/// Per-dimension signal amplitude of unit-energy QPSK.
pub const AMPLITUDE: f64 = std::f64::consts::FRAC_1_SQRT_2;

const GAUSS_HERMITE_NODES: usize = 128;

/// Gaussian tail probability `Q(x) = P(N(0,1) > x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrPoint {
    pub es_n0_db: f64,
    pub sigma2: f64,
    pub p0: f64,
}

impl SnrPoint {
    pub fn from_db(es_n0_db: f64) -> Self {
        let sigma2 = snr_to_sigma2(es_n0_db);
        Self {
            es_n0_db,
            sigma2,
            p0: q_function(AMPLITUDE / sigma2.sqrt()),
        }
    }

    /// Mean of the channel LLR under the all-zero convention; its variance is twice this.
    pub fn llr_mean(&self) -> f64 {
        2.0 * AMPLITUDE * AMPLITUDE / self.sigma2
    }
}

pub fn snr_to_sigma2(es_n0_db: f64) -> f64 {
    10f64.powf(-es_n0_db / 10.0) / 2.0
}

pub fn sigma2_to_snr(sigma2: f64) -> f64 {
    -10.0 * (2.0 * sigma2).log10()
}

/// Raw hard-decision bit error rate `Q(1 / (sigma sqrt 2))`.
pub fn channel_ber(sigma2: f64) -> Result<f64> {
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(Error::Domain(format!("noise variance must be positive, got {sigma2}")));
    }
    Ok(q_function(AMPLITUDE / sigma2.sqrt()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlrFrame {
    pub values: Vec<f64>,
    pub seed: u64,
}

/// LLRs for an all-zero transmission: `2a(a + noise) / sigma2`.
pub fn generate_llrs(n: usize, sigma2: f64, seed: u64) -> Result<LlrFrame> {
    if n == 0 {
        return Err(Error::Domain("bit count must be at least 1".into()));
    }
    channel_ber(sigma2)?;
    let mut rng = rng::keyed(seed, rng::stream::CHANNEL, 0);
    let mut values = vec![0.0; n];
    fill_llrs(&mut rng, sigma2, &mut values);
    Ok(LlrFrame { values, seed })
}

pub(crate) fn fill_llrs<R: Rng + ?Sized>(rng: &mut R, sigma2: f64, out: &mut [f64]) {
    let sigma = sigma2.sqrt();
    let scale = 2.0 * AMPLITUDE / sigma2;
    for v in out.iter_mut() {
        let noise: f64 = StandardNormal.sample(rng);
        *v = scale * (AMPLITUDE + sigma * noise);
    }
}

/// Draws a single consistent-Gaussian LLR with the given mean (variance `2 mean`).
pub(crate) fn consistent_gaussian(mean: f64) -> Normal<f64> {
    Normal::new(mean, (2.0 * mean).sqrt()).expect("finite nonnegative mean")
}

/// Nodes and weights for `∫ exp(-x²) g(x) dx`.
fn gauss_hermite() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_hermite_rule(GAUSS_HERMITE_NODES))
}

fn gauss_hermite_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    // Newton iteration on orthonormal Hermite polynomials, roots symmetric about 0.
    let pim4 = std::f64::consts::PI.powf(-0.25);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    let nf = n as f64;
    let mut z = 0.0;
    for i in 0..m {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-0.16667),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = pim4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-14 * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// `ln(1 + e^{-l})` without overflow.
fn softplus_neg(l: f64) -> f64 {
    if l > 0.0 {
        (-l).exp().ln_1p()
    } else {
        -l + l.exp().ln_1p()
    }
}

/// Capacity (bits per channel use) of the binary-input AWGN channel whose
/// LLR is consistent Gaussian with mean `llr_mean`.
pub fn binary_input_capacity(llr_mean: f64) -> f64 {
    if llr_mean <= 0.0 {
        return 0.0;
    }
    let (x, w) = gauss_hermite();
    let spread = 2.0 * llr_mean.sqrt();
    let expectation: f64 = x
        .iter()
        .zip(w)
        .map(|(&xi, &wi)| wi * softplus_neg(llr_mean + spread * xi))
        .sum::<f64>()
        / std::f64::consts::PI.sqrt();
    (1.0 - expectation / std::f64::consts::LN_2).clamp(0.0, 1.0)
}

/// Gray-QPSK constrained capacity in bits per two-dimensional symbol.
pub fn qpsk_constrained_capacity(es_n0_db: f64) -> f64 {
    if es_n0_db == f64::INFINITY {
        return 2.0;
    }
    if es_n0_db == f64::NEG_INFINITY {
        return 0.0;
    }
    2.0 * binary_input_capacity(SnrPoint::from_db(es_n0_db).llr_mean())
}

/// Es/N0 at which the QPSK constrained capacity equals `2 r_cat`.
pub fn shannon_limit_db(r_cat: f64) -> Result<f64> {
    if !(r_cat > 0.0 && r_cat < 1.0) {
        return Err(Error::Domain(format!("rate must lie in (0, 1), got {r_cat}")));
    }
    let target = 2.0 * r_cat;
    let (mut lo, mut hi) = (-40.0, 40.0);
    while hi - lo > 1e-7 {
        let mid = 0.5 * (lo + hi);
        if qpsk_constrained_capacity(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Distance in dB from the constrained Shannon limit at rate `r_cat`.
pub fn shannon_gap(r_cat: f64, es_n0_db: f64) -> Result<f64> {
    Ok(es_n0_db - shannon_limit_db(r_cat)?)
}

/// Operating SNR that sits `gap_db` above the constrained limit.
pub fn snr_at_gap(r_cat: f64, gap_db: f64) -> Result<f64> {
    Ok(shannon_limit_db(r_cat)? + gap_db)
}
