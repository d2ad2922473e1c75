//! Degree-distribution algebra for inner-code ensembles with uncoded
//! (degree-zero) and degree-one variable nodes.
//!
//! Variable distributions are dense vectors indexed by degree: `l[i]` is the
//! fraction of variable nodes of degree `i` (including `l[0]`, the uncoded
//! fraction) and `lambda[i]` the fraction of edges attached to degree-`i`
//! variables (`lambda[0]` is always zero).

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::{Error, Result};

pub const VALIDITY_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_VARIABLE_DEGREE: usize = 20;

/// Edge-perspective coefficients from node-perspective ones: `λ_i = i L_i / L'(1)`.
pub fn edge_from_node(l: &[f64]) -> Result<Vec<f64>> {
    let slope: f64 = l.iter().enumerate().map(|(i, &li)| i as f64 * li).sum();
    if !(slope > 0.0) {
        return Err(Error::DegenerateEnsemble(
            "all variable-node mass sits on degree zero".into(),
        ));
    }
    Ok(l.iter()
        .enumerate()
        .map(|(i, &li)| i as f64 * li / slope)
        .collect())
}

/// Node-perspective coefficients from edge-perspective ones plus the uncoded fraction.
pub fn node_from_edge(lambda: &[f64], l0: f64) -> Vec<f64> {
    let norm = inverse_degree_sum(lambda);
    let mut l: Vec<f64> = lambda
        .iter()
        .enumerate()
        .map(|(i, &x)| if i == 0 { 0.0 } else { (1.0 - l0) * x / i as f64 / norm })
        .collect();
    if l.is_empty() {
        l.push(0.0);
    }
    l[0] = l0;
    l
}

/// `Σ λ_i / i`.
pub fn inverse_degree_sum(lambda: &[f64]) -> f64 {
    lambda
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, &x)| x / i as f64)
        .sum()
}

/// Rate of the coded component: `1 - 1 / (d̄_c Σ λ_i / i)`.
pub fn coded_rate(lambda: &[f64], dc_bar: f64) -> Result<f64> {
    let rc = 1.0 - 1.0 / (dc_bar * inverse_degree_sum(lambda));
    if !(rc > 0.0) {
        return Err(Error::InfeasibleRate(format!(
            "coded-component rate {rc} is not positive"
        )));
    }
    Ok(rc)
}

/// Inner rate from uncoded fraction and coded-component rate.
pub fn inner_rate(l0: f64, r_c: f64) -> f64 {
    l0 + r_c * (1.0 - l0)
}

/// Average number of degree-one neighbours per check.
pub fn nu_of(lambda: &[f64], dc_bar: f64) -> f64 {
    dc_bar * lambda.get(1).copied().unwrap_or(0.0)
}

/// Share of information bits carried by each variable degree.
///
/// Parity positions of a coded component are taken from the lowest degrees
/// first (degree-one bits make natural parity bits), so the information set
/// holds whatever remains. `nodes` are coded node fractions indexed by degree.
pub fn information_weights(nodes: &[f64], r_c: f64) -> Vec<f64> {
    let mut parity = (1.0 - r_c).max(0.0);
    let mut info: Vec<f64> = nodes
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            if i == 0 {
                return 0.0;
            }
            let taken = parity.min(n);
            parity -= taken;
            n - taken
        })
        .collect();
    let total: f64 = info.iter().sum();
    if total > 0.0 {
        info.iter_mut().for_each(|x| *x /= total);
    }
    info
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckDistribution {
    /// Edge fractions on degrees `dc` and `dc + 1`.
    pub rho: [f64; 2],
    pub dc: usize,
    pub dc_bar: f64,
}

impl CheckDistribution {
    /// Node-perspective fractions on degrees `dc` and `dc + 1`.
    pub fn node_fractions(&self) -> [f64; 2] {
        let a = self.rho[0] / self.dc as f64;
        let b = self.rho[1] / (self.dc + 1) as f64;
        [a / (a + b), b / (a + b)]
    }

    /// Average check degree recomputed from the coefficients.
    pub fn mean_degree(&self) -> f64 {
        1.0 / (self.rho[0] / self.dc as f64 + self.rho[1] / (self.dc + 1) as f64)
    }

    pub fn is_single_degree(&self) -> bool {
        self.rho[1] == 0.0
    }

    /// Edge-perspective `(degree, fraction)` pairs with nonzero mass.
    pub fn degrees(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        [(self.dc, self.rho[0]), (self.dc + 1, self.rho[1])]
            .into_iter()
            .filter(|&(_, r)| r > 0.0)
    }
}

pub fn check_distribution_from_mean(dc_bar: f64) -> Result<CheckDistribution> {
    if !(dc_bar >= 2.0) || !dc_bar.is_finite() {
        return Err(Error::Domain(format!("average check degree {dc_bar} below 2")));
    }
    let dc = dc_bar.floor();
    let low = (dc * (dc + 1.0 - dc_bar) / dc_bar).clamp(0.0, 1.0);
    Ok(CheckDistribution {
        rho: [low, if dc == dc_bar { 0.0 } else { 1.0 - low }],
        dc: dc as usize,
        dc_bar,
    })
}

/// Split of degree-one neighbours across checks: a fraction `theta` of the
/// checks carry `low` of them and the rest carry `high`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaSplit {
    pub theta: f64,
    pub low: usize,
    pub high: usize,
}

impl ThetaSplit {
    pub fn is_integer(&self) -> bool {
        self.low == self.high
    }
}

pub fn theta_split(nu: f64) -> Result<ThetaSplit> {
    if !(nu >= 0.0) || !nu.is_finite() {
        return Err(Error::Domain(format!("nu must be nonnegative, got {nu}")));
    }
    let low = nu.floor();
    if low == nu {
        return Ok(ThetaSplit {
            theta: 0.0,
            low: nu as usize,
            high: nu as usize,
        });
    }
    Ok(ThetaSplit {
        theta: low + 1.0 - nu,
        low: low as usize,
        high: low as usize + 1,
    })
}

/// Inner-code data-flow score `(1 - R_in)(d̄_c - ν) I / R_in`.
pub fn inner_complexity(r_in: f64, dc_bar: f64, nu: f64, iters: f64) -> f64 {
    (1.0 - r_in) * (dc_bar - nu) * iters / r_in
}

/// Concatenated score `η_i / R_sc + P`.
pub fn total_complexity(eta_i: f64, r_sc: f64, p_post: f64) -> f64 {
    eta_i / r_sc + p_post
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InnerEnsemble {
    /// Node-perspective coefficients `L_0 ..= L_Dv`.
    pub l: Vec<f64>,
    /// Edge-perspective coefficients, `lambda[0] == 0`.
    pub lambda: Vec<f64>,
    pub dc_bar: f64,
    pub r_in: f64,
    pub r_c: f64,
    pub nu: f64,
}

impl InnerEnsemble {
    pub fn from_node(l: Vec<f64>, dc_bar: f64) -> Result<Self> {
        check_coefficients(&l, "L")?;
        let lambda = edge_from_node(&l)?;
        let r_c = coded_rate(&lambda, dc_bar)?;
        Ok(Self {
            r_in: inner_rate(l[0], r_c),
            nu: nu_of(&lambda, dc_bar),
            l,
            lambda,
            dc_bar,
            r_c,
        })
    }

    pub fn from_edge(lambda: Vec<f64>, l0: f64, dc_bar: f64) -> Result<Self> {
        check_coefficients(&lambda, "lambda")?;
        if !(0.0..1.0).contains(&l0) {
            return Err(Error::Domain(format!("uncoded fraction {l0} outside [0, 1)")));
        }
        let r_c = coded_rate(&lambda, dc_bar)?;
        Ok(Self {
            l: node_from_edge(&lambda, l0),
            r_in: inner_rate(l0, r_c),
            nu: nu_of(&lambda, dc_bar),
            lambda,
            dc_bar,
            r_c,
        })
    }

    pub fn l0(&self) -> f64 {
        self.l[0]
    }

    pub fn max_degree(&self) -> usize {
        self.l.len() - 1
    }

    pub fn check_distribution(&self) -> CheckDistribution {
        check_distribution_from_mean(self.dc_bar).expect("validated at construction")
    }

    /// Node fractions among coded (degree ≥ 1) variables.
    pub fn coded_node_fractions(&self) -> Vec<f64> {
        let coded = 1.0 - self.l0();
        self.l
            .iter()
            .enumerate()
            .map(|(i, &x)| if i == 0 { 0.0 } else { x / coded })
            .collect()
    }

    /// Largest deviation among the rate, `d̄_c` and `ν` identities.
    pub fn identity_residual(&self) -> f64 {
        let eq1 = (self.r_in - inner_rate(self.l0(), self.r_c)).abs();
        let eq2 = (inverse_degree_sum(&self.lambda) - 1.0 / (self.dc_bar * (1.0 - self.r_c))).abs();
        let eq3 = (self.nu - self.dc_bar * self.lambda[1]).abs();
        let sums = (self.l.iter().sum::<f64>() - 1.0)
            .abs()
            .max((self.lambda.iter().sum::<f64>() - 1.0).abs());
        eq1.max(eq2).max(eq3).max(sums)
    }
}

fn check_coefficients(v: &[f64], what: &str) -> Result<()> {
    if v.len() < 2 {
        return Err(Error::Domain(format!("{what} needs at least degrees 0 and 1")));
    }
    if v.iter().any(|&x| !(x >= -VALIDITY_TOL) || !x.is_finite()) {
        return Err(Error::Domain(format!("{what} has a negative coefficient")));
    }
    Ok(())
}

/// An outer staircase code, reduced to what the concatenated design needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaircaseSpec {
    pub name: String,
    pub r_sc: f64,
    pub p_sc: f64,
    /// Staircase block side `M`; a block holds `M²` bits.
    #[serde(rename = "M")]
    pub block_side: usize,
    /// Post-processing operations per information bit.
    #[serde(default)]
    pub p_post: f64,
}

impl StaircaseSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.r_sc > 0.0 && self.r_sc < 1.0) {
            return Err(Error::Config(format!("{}: r_sc outside (0, 1)", self.name)));
        }
        if !(self.p_sc > 0.0 && self.p_sc < 0.5) {
            return Err(Error::Config(format!("{}: p_sc outside (0, 1/2)", self.name)));
        }
        if self.block_side == 0 {
            return Err(Error::Config(format!("{}: M must be positive", self.name)));
        }
        Ok(())
    }

    /// Inner codewords per staircase block, `M² / k_in`.
    pub fn packing_ratio(&self, k_in: usize) -> Result<usize> {
        let block = self.block_side * self.block_side;
        if k_in == 0 || block % k_in != 0 {
            return Err(Error::Domain(format!(
                "inner dimension {k_in} does not divide the staircase block {block}"
            )));
        }
        Ok(block / k_in)
    }

    /// The rate-15/16 code with threshold 5.02e-3 and M = 704.
    pub fn rate_15_16() -> Self {
        Self {
            name: "sc-15/16".into(),
            r_sc: 15.0 / 16.0,
            p_sc: 5.02e-3,
            block_side: 704,
            p_post: 0.0,
        }
    }
}

/// Loads an outer-code table (JSON array of staircase rows).
pub fn load_outer_table(path: &Path) -> Result<Vec<StaircaseSpec>> {
    let text = std::fs::read_to_string(path)?;
    let table: Vec<StaircaseSpec> = serde_json::from_str(&text)?;
    for row in &table {
        row.validate()?;
    }
    Ok(table)
}

pub fn default_outer_table() -> Vec<StaircaseSpec> {
    vec![StaircaseSpec::rate_15_16()]
}

/// Reference example ensembles (coefficients rounded to four decimals).
pub mod examples {
    use super::InnerEnsemble;

    pub const EXAMPLE1_GAP_DB: f64 = 1.27;
    pub const EXAMPLE1_ITERS: usize = 9;
    pub const EXAMPLE1_ETA_I: f64 = 25.59;
    pub const EXAMPLE2_GAP_DB: f64 = 1.00;
    pub const EXAMPLE2_ITERS: usize = 18;
    pub const EXAMPLE2_ETA_I: f64 = 60.24;

    pub fn example1_l() -> Vec<f64> {
        vec![0.1556, 0.1389, 0.0, 0.2941, 0.4113]
    }

    pub fn example2_l() -> Vec<f64> {
        vec![0.1480, 0.1111, 0.0, 0.4539, 0.0911, 0.0, 0.0973, 0.0985]
    }

    pub fn example1() -> InnerEnsemble {
        InnerEnsemble::from_node(example1_l(), 24.0).expect("valid fixture")
    }

    pub fn example2() -> InnerEnsemble {
        InnerEnsemble::from_node(example2_l(), 28.0).expect("valid fixture")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn example1_edge_distribution() {
        let l = examples::example1_l();
        let slope: f64 = l.iter().enumerate().map(|(i, x)| i as f64 * x).sum();
        assert!((slope - 2.6664).abs() < 1e-4);
        let lambda = edge_from_node(&l).unwrap();
        assert!((lambda[1] - 0.0521).abs() < 1e-4);
        assert!((lambda[3] - 0.3309).abs() < 1e-4);
        assert!((lambda[4] - 0.6170).abs() < 1e-4);
        assert_eq!(lambda[0], 0.0);
        assert_eq!(lambda[2], 0.0);
    }

    #[test]
    fn single_degree_and_degenerate() {
        let lambda = edge_from_node(&[0.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(lambda, vec![0.0, 0.0, 0.0, 1.0]);
        assert!(matches!(
            edge_from_node(&[1.0, 0.0]),
            Err(Error::DegenerateEnsemble(_))
        ));
    }

    #[test]
    fn node_from_edge_cases() {
        assert_eq!(node_from_edge(&[0.0, 0.0, 1.0], 0.0), vec![0.0, 0.0, 1.0]);
        assert_eq!(node_from_edge(&[0.0, 1.0], 0.5), vec![0.5, 0.5]);
        let ex = examples::example1();
        let back = node_from_edge(&ex.lambda, 0.1556);
        for (a, b) in back.iter().zip(examples::example1_l()) {
            assert!((a - b).abs() < 1e-3);
        }
    }

    #[test]
    fn coded_rate_cases() {
        let ex = examples::example1();
        assert!((ex.r_c - 0.8684).abs() < 1e-4);
        assert!((ex.r_in - 8.0 / 9.0).abs() < 1e-3);
        assert!((coded_rate(&[0.0, 0.0, 1.0], 4.0).unwrap() - 0.5).abs() < 1e-15);
        assert!(matches!(
            coded_rate(&[0.0, 1.0], 1.0),
            Err(Error::InfeasibleRate(_))
        ));
    }

    #[test]
    fn check_distribution_cases() {
        let c = check_distribution_from_mean(24.0).unwrap();
        assert_eq!(c.dc, 24);
        assert_eq!(c.rho, [1.0, 0.0]);
        assert!(c.is_single_degree());
        let c = check_distribution_from_mean(24.5).unwrap();
        assert_eq!(c.dc, 24);
        assert!((c.rho[0] - 0.4898).abs() < 1e-4);
        assert!((c.rho[1] - 0.5102).abs() < 1e-4);
        for k in 4..200 {
            let d = k as f64 / 2.0 + 0.37;
            let c = check_distribution_from_mean(d).unwrap();
            assert!((c.mean_degree() - d).abs() < 1e-12);
            assert!(c.rho.iter().all(|&r| r >= 0.0));
        }
        assert!(check_distribution_from_mean(1.5).is_err());
    }

    #[test]
    fn nu_and_theta() {
        assert!((examples::example1().nu - 1.250).abs() < 2e-3);
        assert!((examples::example2().nu - 1.00).abs() < 1e-3);
        assert_eq!(nu_of(&[0.0, 0.0, 1.0], 10.0), 0.0);
        let t = theta_split(1.25).unwrap();
        assert!((t.theta - 0.75).abs() < 1e-15);
        assert_eq!((t.low, t.high), (1, 2));
        let t = theta_split(2.0).unwrap();
        assert!(t.is_integer());
        assert_eq!(t.low, 2);
        let t = theta_split(0.5).unwrap();
        assert_eq!((t.theta, t.low, t.high), (0.5, 0, 1));
        assert!(theta_split(-0.1).is_err());
    }

    #[test]
    fn complexity_scores() {
        let eta = inner_complexity(8.0 / 9.0, 24.0, 1.25, 9.0);
        assert!((eta / 25.59 - 1.0).abs() < 0.01, "{eta}");
        let ex2 = examples::example2();
        let eta2 = inner_complexity(8.0 / 9.0, 28.0, ex2.nu, 18.0);
        assert!((eta2 / 60.24 - 1.0).abs() < 0.015, "{eta2}");
        assert_eq!(inner_complexity(0.5, 3.0, 3.0, 10.0), 0.0);
        assert!((total_complexity(25.59, 15.0 / 16.0, 0.0) - 27.296).abs() < 1e-3);
        assert!((total_complexity(0.0, 0.9, 0.006) - 0.006).abs() < 1e-15);
        assert!((total_complexity(60.24, 15.0 / 16.0, 0.0) - 64.256).abs() < 1e-3);
    }

    #[test]
    fn information_weights_skip_low_degrees() {
        let ex = examples::example1();
        let w = information_weights(&ex.coded_node_fractions(), ex.r_c);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let n = ex.coded_node_fractions();
        // Rounded coefficients: the fractions sum to 1 only to about 1e-4.
        let total = n.iter().sum::<f64>() - (1.0 - ex.r_c);
        assert!((w[1] * total - (n[1] - (1.0 - ex.r_c))).abs() < 1e-12);
        assert!((w[4] * total - n[4]).abs() < 1e-12);
        assert_eq!(information_weights(&[0.0, 1.0], 0.5), vec![0.0, 1.0]);
        // Parity spills over into degree 2 once degree one is exhausted.
        let w = information_weights(&[0.0, 0.1, 0.4, 0.5], 0.7);
        assert!((w[2] - 0.2 / 0.7).abs() < 1e-12 && w[1] == 0.0);
    }

    #[test]
    fn staircase_spec() {
        let sc = StaircaseSpec::rate_15_16();
        sc.validate().unwrap();
        assert_eq!(sc.packing_ratio(704 * 704 / 8).unwrap(), 8);
        assert!(sc.packing_ratio(1000).is_err());
        let json = r#"[{"name":"a","r_sc":0.9375,"p_sc":0.00502,"M":704}]"#;
        let rows: Vec<StaircaseSpec> = serde_json::from_str(json).unwrap();
        assert_eq!(rows[0], sc.clone().renamed("a"));
    }

    impl StaircaseSpec {
        fn renamed(mut self, n: &str) -> Self {
            self.name = n.into();
            self
        }
    }

    fn distribution(max: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(0.0f64..1.0, 2..=max).prop_filter_map("nonzero", |mut v| {
            v[0] = 0.0;
            let s: f64 = v.iter().sum();
            (s > 1e-3).then(|| v.iter_mut().map(|x| *x / s).collect())
        })
    }

    proptest! {
        #[test]
        fn edge_node_round_trip(lambda in distribution(21), l0 in 0.0f64..0.95) {
            let l = node_from_edge(&lambda, l0);
            prop_assert!((l.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let back = edge_from_node(&l).unwrap();
            for (a, b) in back.iter().zip(&lambda) {
                prop_assert!((a - b).abs() < 1e-12);
            }
            let l2 = node_from_edge(&back, l0);
            for (a, b) in l2.iter().zip(&l) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn identities_hold(lambda in distribution(21), l0 in 0.0f64..0.9, dc in 10.0f64..40.0) {
            if let Ok(e) = InnerEnsemble::from_edge(lambda, l0, dc) {
                prop_assert!(e.identity_residual() < 1e-9);
            }
        }

        #[test]
        fn complexity_monotone(r in 0.1f64..0.99, d in 2.0f64..40.0, i in 0.0f64..50.0) {
            prop_assert!(inner_complexity(r, d, 1.0, i + 1.0) >= inner_complexity(r, d, 1.0, i));
            prop_assert!(inner_complexity(r, d + 1.0, 1.0, i) >= inner_complexity(r, d, 1.0, i));
            prop_assert!(total_complexity(i + 1.0, r, 0.0) > total_complexity(i, r, 0.0));
        }
    }
}
