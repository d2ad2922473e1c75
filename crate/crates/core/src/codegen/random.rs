use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;

use super::{info_set, largest_remainder, SparseParityCheck};
use crate::ensemble::InnerEnsemble;
use crate::rng::{self, StreamRng};
use crate::{Error, Result};

/// Allowed L1 distance between realized and target column histograms,
/// as a fraction of the edges.
const HISTOGRAM_TOLERANCE: f64 = 0.02;

/// Column degree counts for `n_c` coded bits, with the edge total made
/// compatible with `dc` when the check degree is single-valued.
pub(crate) fn column_counts(ensemble: &InnerEnsemble, n_c: usize) -> Result<Vec<usize>> {
    let fractions = ensemble.coded_node_fractions();
    let mut counts = largest_remainder(&fractions, n_c);
    let checks = ensemble.check_distribution();
    if checks.is_single_degree() {
        let edges: usize = counts.iter().enumerate().map(|(d, n)| d * n).sum();
        let mut excess = edges % checks.dc;
        // Lower the highest-degree columns one step at a time.
        while excess > 0 {
            let top = (2..counts.len()).rev().find(|&d| counts[d] > 0).ok_or_else(|| {
                Error::Unrealizable(format!("edge count {edges} cannot reach a multiple of {}", checks.dc))
            })?;
            counts[top] -= 1;
            counts[top - 1] += 1;
            excess -= 1;
        }
    }
    Ok(counts)
}

/// Row count and per-row degrees for a given edge total.
pub(crate) fn row_degrees(ensemble: &InnerEnsemble, edges: usize) -> Result<Vec<usize>> {
    let checks = ensemble.check_distribution();
    let dc = checks.dc;
    if checks.is_single_degree() {
        if edges % dc != 0 || edges == 0 {
            return Err(Error::Unrealizable(format!("{edges} edges do not split into rows of degree {dc}")));
        }
        return Ok(vec![dc; edges / dc]);
    }
    let lo = edges.div_ceil(dc + 1);
    let hi = edges / dc;
    if lo > hi || hi == 0 {
        return Err(Error::Unrealizable(format!(
            "{edges} edges do not split into rows of degree {dc} and {}",
            dc + 1
        )));
    }
    let m = ((edges as f64 / checks.dc_bar).round() as usize).clamp(lo, hi);
    let high = edges - m * dc;
    Ok((0..m).map(|r| if r < high { dc + 1 } else { dc }).collect())
}

/// Split `ones` degree-one columns across rows as evenly as possible, the
/// extra ones going to randomly chosen rows.
pub(crate) fn spread_degree_one(ones: usize, rows: usize, r: &mut StreamRng) -> Vec<usize> {
    let base = ones / rows;
    let extra = ones % rows;
    let mut per_row: Vec<usize> = (0..rows).map(|i| base + usize::from(i < extra)).collect();
    per_row.shuffle(r);
    per_row
}

/// L1 distance between a realized column histogram and the target
/// fractions, measured in edges over total edges.
pub(crate) fn histogram_distance(counts: &[usize], ensemble: &InnerEnsemble) -> f64 {
    let target = ensemble.coded_node_fractions();
    let n: usize = counts.iter().sum();
    let edges: usize = counts.iter().enumerate().map(|(d, c)| d * c).sum();
    let len = counts.len().max(target.len());
    let diff: f64 = (1..len)
        .map(|d| {
            let got = counts.get(d).copied().unwrap_or(0) as f64;
            let want = target.get(d).copied().unwrap_or(0.0) * n as f64;
            d as f64 * (got - want).abs()
        })
        .sum();
    diff / edges.max(1) as f64
}

/// Random Tanner graph for the coded component of `ensemble` with `n_c`
/// coded bits. Degree-one columns are dealt to checks evenly; the other
/// sockets are matched uniformly and parallel edges are switched away.
pub fn sample_random(ensemble: &InnerEnsemble, n_c: usize, seed: u64) -> Result<SparseParityCheck> {
    if n_c == 0 {
        return Err(Error::Domain("n_c must be positive".into()));
    }
    let mut r = rng::keyed(seed, rng::stream::CODEGEN, n_c as u64);
    let counts = column_counts(ensemble, n_c)?;
    let edges: usize = counts.iter().enumerate().map(|(d, c)| d * c).sum();
    let mut row_deg = row_degrees(ensemble, edges)?;
    row_deg.shuffle(&mut r);
    let m = row_deg.len();
    let ones = counts.get(1).copied().unwrap_or(0);
    let ones_per_row = spread_degree_one(ones, m, &mut r);

    let mut col_deg: Vec<usize> = Vec::with_capacity(n_c);
    for (d, &c) in counts.iter().enumerate().skip(1) {
        col_deg.extend(std::iter::repeat_n(d, c));
    }
    col_deg.shuffle(&mut r);

    let mut fixed = Vec::with_capacity(ones);
    let mut degree_one_cols = (0..n_c).filter(|&c| col_deg[c] == 1);
    for (row, &k) in ones_per_row.iter().enumerate() {
        if k > row_deg[row] {
            return Err(Error::Unrealizable(format!(
                "row {row} needs {k} degree-one neighbours but has degree {}",
                row_deg[row]
            )));
        }
        for _ in 0..k {
            fixed.push((row, degree_one_cols.next().expect("counted")));
        }
    }

    let mut var_sockets: Vec<usize> = Vec::new();
    for (c, &d) in col_deg.iter().enumerate() {
        if d >= 2 {
            var_sockets.extend(std::iter::repeat_n(c, d));
        }
    }
    let mut check_sockets: Vec<usize> = Vec::with_capacity(var_sockets.len());
    for (row, (&d, &k)) in row_deg.iter().zip(&ones_per_row).enumerate() {
        check_sockets.extend(std::iter::repeat_n(row, d - k));
    }
    debug_assert_eq!(var_sockets.len(), check_sockets.len());
    check_sockets.shuffle(&mut r);
    let mut matched: Vec<(usize, usize)> = check_sockets.into_iter().zip(var_sockets).collect();
    remove_parallel_edges(&mut matched, &mut r)?;

    let mut h = SparseParityCheck::from_edges(m, n_c, fixed.into_iter().chain(matched))?;
    let dist = histogram_distance(&h.column_degree_histogram(), ensemble);
    if dist > HISTOGRAM_TOLERANCE {
        return Err(Error::Unrealizable(format!(
            "column histogram is {dist:.4} from the target; n_c = {n_c} is too small"
        )));
    }
    let info = info_set(&h);
    h.set_info_set(info.columns);
    Ok(h)
}

/// Resolve repeated `(row, col)` pairs by swapping rows with random partner
/// edges. Degrees are unchanged.
fn remove_parallel_edges(edges: &mut [(usize, usize)], r: &mut StreamRng) -> Result<()> {
    let mut mult: HashMap<(usize, usize), u32> = HashMap::new();
    for &e in edges.iter() {
        *mult.entry(e).or_default() += 1;
    }
    let mut bad: Vec<usize> = (0..edges.len()).filter(|&i| mult[&edges[i]] > 1).collect();
    let budget = 1000 * (bad.len() + 10);
    let mut tries = 0;
    while let Some(&i) = bad.last() {
        if mult[&edges[i]] <= 1 {
            bad.pop();
            continue;
        }
        tries += 1;
        if tries > budget || edges.len() < 2 {
            return Err(Error::Unrealizable("could not remove parallel edges".into()));
        }
        let j = r.random_range(0..edges.len());
        let (r1, c1) = edges[i];
        let (r2, c2) = edges[j];
        if r1 == r2 || c1 == c2 || mult.contains_key(&(r2, c1)) || mult.contains_key(&(r1, c2)) {
            continue;
        }
        for old in [(r1, c1), (r2, c2)] {
            let e = mult.get_mut(&old).expect("present");
            *e -= 1;
            if *e == 0 {
                mult.remove(&old);
            }
        }
        edges[i] = (r2, c1);
        edges[j] = (r1, c2);
        mult.insert((r2, c1), 1);
        mult.insert((r1, c2), 1);
        bad.pop();
    }
    Ok(())
}
