use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use super::random::{column_counts, row_degrees, spread_degree_one};
use super::{girth_from_roots, info_set, Girth, SparseParityCheck};
use crate::ensemble::InnerEnsemble;
use crate::rng::{self, StreamRng};
use crate::{Error, Result};

/// Largest edge-distribution error accepted for a base matrix.
const PROFILE_TOLERANCE: f64 = 0.02;
/// Smallest circulant size considered.
const MIN_LIFT: usize = 16;
/// Base sizes tried before settling for the best girth seen.
const MAX_CANDIDATES: usize = 4;
/// Independent shift searches per base size.
const RESTARTS: usize = 2;
/// Tabu moves per shift search.
const MOVE_BUDGET: usize = 100_000;
/// Moves without a new best state before a search gives up.
const STALL: usize = 5_000;
/// Base tabu tenure in moves.
const TENURE: usize = 10;

/// Base matrix of circulant shifts; `-1` marks an empty block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QcProtograph {
    pub base: Vec<Vec<i32>>,
    pub z: usize,
    pub girth: Girth,
}

impl QcProtograph {
    pub fn base_rows(&self) -> usize {
        self.base.len()
    }

    pub fn base_cols(&self) -> usize {
        self.base.first().map_or(0, Vec::len)
    }

    pub fn lifted_cols(&self) -> usize {
        self.base_cols() * self.z
    }

    pub fn expand(&self) -> Result<SparseParityCheck> {
        expand_protograph(&self.base, self.z)
    }

    /// Header `m_b n_b Z girth` (girth `inf` for forests), then the shift grid.
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{} {} {} {}", self.base_rows(), self.base_cols(), self.z, self.girth)?;
        for row in &self.base {
            let line: Vec<String> = row.iter().map(i32::to_string).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines().filter(|l| l.as_ref().map_or(true, |s| !super::skip_line(s)));
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty protograph file".into()))??;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(Error::Parse(format!("bad protograph header {header:?}")));
        }
        let num = |s: &str| s.parse::<usize>().map_err(|_| Error::Parse(format!("bad number {s:?}")));
        let (m, n, z) = (num(fields[0])?, num(fields[1])?, num(fields[2])?);
        let girth = match fields[3] {
            "inf" => Girth::Infinite,
            g => Girth::Finite(num(g)?),
        };
        let mut base = Vec::with_capacity(m);
        for line in lines {
            let row: std::result::Result<Vec<i32>, _> =
                line?.split_whitespace().map(str::parse::<i32>).collect();
            let row = row.map_err(|e| Error::Parse(format!("bad shift: {e}")))?;
            if row.len() != n {
                return Err(Error::Parse(format!("expected {n} shifts per row, got {}", row.len())));
            }
            base.push(row);
        }
        if base.len() != m {
            return Err(Error::Parse(format!("expected {m} base rows, got {}", base.len())));
        }
        check_shifts(&base, z)?;
        Ok(Self { base, z, girth })
    }
}

fn check_shifts(base: &[Vec<i32>], z: usize) -> Result<()> {
    if z == 0 {
        return Err(Error::Domain("lifting size must be positive".into()));
    }
    let n = base.first().map_or(0, Vec::len);
    for row in base {
        if row.len() != n {
            return Err(Error::Domain("ragged base matrix".into()));
        }
        if let Some(&s) = row.iter().find(|&&s| s < -1 || s >= z as i32) {
            return Err(Error::Domain(format!("shift {s} outside -1..{z}")));
        }
    }
    Ok(())
}

/// Circulant lifting: entry `s` joins row `i` of its block row to column
/// `(i + s) mod Z` of its block column.
pub fn expand_protograph(base: &[Vec<i32>], z: usize) -> Result<SparseParityCheck> {
    check_shifts(base, z)?;
    let m = base.len();
    let n = base.first().map_or(0, Vec::len);
    let mut edges = Vec::new();
    for (br, row) in base.iter().enumerate() {
        for (bc, &s) in row.iter().enumerate() {
            if s < 0 {
                continue;
            }
            for i in 0..z {
                edges.push((br * z + i, bc * z + (i + s as usize) % z));
            }
        }
    }
    let mut h = SparseParityCheck::from_edges(m * z, n * z, edges)?;
    h.set_block_size(z);
    Ok(h)
}

/// Inverse of [`expand_protograph`]; fails unless every block is empty or
/// a single cyclically shifted identity.
pub fn contract_protograph(h: &SparseParityCheck, z: usize) -> Result<Vec<Vec<i32>>> {
    if z == 0 || h.n_rows() % z != 0 || h.n_cols() % z != 0 {
        return Err(Error::Domain(format!(
            "{} x {} matrix is not a lifting of size {z}",
            h.n_rows(),
            h.n_cols()
        )));
    }
    let (m, n) = (h.n_rows() / z, h.n_cols() / z);
    let mut base = vec![vec![-1i32; n]; m];
    let mut count = vec![vec![0usize; n]; m];
    for (r, c) in h.edges() {
        let (br, bc) = (r / z, c / z);
        let s = ((c % z) + z - (r % z)) % z;
        if base[br][bc] == -1 {
            base[br][bc] = s as i32;
        } else if base[br][bc] != s as i32 {
            return Err(Error::Domain(format!("block ({br}, {bc}) is not a circulant permutation")));
        }
        count[br][bc] += 1;
    }
    for br in 0..m {
        for bc in 0..n {
            if base[br][bc] >= 0 && count[br][bc] != z {
                return Err(Error::Domain(format!("block ({br}, {bc}) is a partial circulant")));
            }
        }
    }
    Ok(base)
}

/// A finished QC construction and how it met its targets.
#[derive(Debug, Clone, Serialize)]
pub struct QcBuild {
    pub protograph: QcProtograph,
    #[serde(skip)]
    pub matrix: SparseParityCheck,
    pub target_n: usize,
    pub girth_target: usize,
    pub girth_met: bool,
    /// Edge-distribution L1 distance from the ensemble.
    pub lambda_distance: f64,
    /// `|n - target| / target`.
    pub length_error: f64,
}

/// Base dimensions and column profile for one lifting size.
#[derive(Debug, Clone)]
struct Sizing {
    z: usize,
    col_deg: Vec<usize>,
    row_deg: Vec<usize>,
    lambda_distance: f64,
}

fn sizings(ensemble: &InnerEnsemble, target_n: usize, tolerance: f64) -> Vec<Sizing> {
    let dc = ensemble.check_distribution().dc;
    let slack = tolerance * target_n as f64;
    let mut out = Vec::new();
    for n_b in (dc + 1)..=(target_n / MIN_LIFT) {
        let z = (target_n as f64 / n_b as f64).round() as usize;
        if z < MIN_LIFT || ((n_b * z) as f64 - target_n as f64).abs() > slack {
            continue;
        }
        let Ok(counts) = column_counts(ensemble, n_b) else { continue };
        let edges: usize = counts.iter().enumerate().map(|(d, c)| d * c).sum();
        let Ok(row_deg) = row_degrees(ensemble, edges) else { continue };
        let m_b = row_deg.len();
        let multi: usize = counts.iter().skip(2).sum();
        let ones = counts.get(1).copied().unwrap_or(0);
        if counts.len() - 1 > m_b || ones.div_ceil(m_b) + multi < *row_deg.iter().max().unwrap_or(&0) {
            continue;
        }
        let lambda_distance: f64 = (1..counts.len().max(ensemble.lambda.len()))
            .map(|d| {
                let got = d as f64 * counts.get(d).copied().unwrap_or(0) as f64 / edges as f64;
                (got - ensemble.lambda.get(d).copied().unwrap_or(0.0)).abs()
            })
            .sum();
        if lambda_distance > PROFILE_TOLERANCE {
            continue;
        }
        let col_deg = counts
            .iter()
            .enumerate()
            .skip(1)
            .flat_map(|(d, &c)| std::iter::repeat_n(d, c))
            .collect();
        out.push(Sizing { z, col_deg, row_deg, lambda_distance });
    }
    out
}

/// Girth-targeted QC realization of `ensemble` near `target_n` coded bits.
///
/// Base widths are tried from the widest circulant down. When no base
/// reaches `girth_target` the best girth found is returned with
/// `girth_met = false`; girth 4 is never accepted.
pub fn build_qc(
    ensemble: &InnerEnsemble,
    target_n: usize,
    length_tolerance: f64,
    girth_target: usize,
    seed: u64,
) -> Result<QcBuild> {
    if target_n < 1000 {
        return Err(Error::Domain(format!("target length {target_n} below 1000")));
    }
    if !(length_tolerance > 0.0 && length_tolerance < 1.0) {
        return Err(Error::Domain(format!(
            "length tolerance {length_tolerance} must lie in (0, 1)"
        )));
    }
    if girth_target > 8 {
        return Err(Error::Config(format!("girth target {girth_target} above 8 is not supported")));
    }
    let want = girth_target.max(6);
    let candidates = sizings(ensemble, target_n, length_tolerance);
    if candidates.is_empty() {
        return Err(Error::Unrealizable(format!(
            "no base matrix within {:.1}% of length {target_n} matches the profile",
            100.0 * length_tolerance
        )));
    }
    let mut best: Option<(Girth, QcProtograph, f64)> = None;
    // A girth-8 search that fails everywhere falls back to a 4-cycle-free one.
    let passes: &[usize] = if want > 6 { &[8, 6] } else { &[6] };
    'passes: for (pass, &goal) in passes.iter().enumerate() {
        let tries = candidates.iter().take(MAX_CANDIDATES).flat_map(|s| std::iter::repeat_n(s, RESTARTS));
        for (k, sizing) in tries.enumerate() {
            let mut r = rng::keyed2(seed, rng::stream::QC, pass as u64, k as u64);
            let Some(mut proto) = search(sizing, goal, &mut r) else { continue };
            let h = proto.expand()?;
            let g = girth_from_roots(&h, (0..proto.base_cols()).map(|bc| bc * proto.z));
            proto.girth = g;
            if best.as_ref().map_or(true, |(bg, _, _)| g > *bg) {
                best = Some((g, proto, sizing.lambda_distance));
            }
            if g.at_least(goal) {
                break 'passes;
            }
        }
    }
    let Some((g, protograph, lambda_distance)) = best.filter(|(g, _, _)| g.at_least(6)) else {
        return Err(Error::Unrealizable(format!(
            "no 4-cycle-free lifting found near length {target_n}"
        )));
    };
    let mut matrix = protograph.expand()?;
    let info = info_set(&matrix);
    matrix.set_info_set(info.columns);
    let n = protograph.lifted_cols();
    Ok(QcBuild {
        girth_met: g.at_least(want),
        length_error: (n as f64 - target_n as f64).abs() / target_n as f64,
        protograph,
        matrix,
        target_n,
        girth_target,
        lambda_distance,
    })
}

/// Shift search on one base matrix; `None` when the base itself cannot be
/// wired without parallel entries.
fn search(sizing: &Sizing, want: usize, r: &mut StreamRng) -> Option<QcProtograph> {
    let wiring = Wiring::new(sizing, r)?;
    let mut t = Tabu::new(&wiring, sizing.z, want, r);
    t.run(MOVE_BUDGET, r);
    Some(QcProtograph { base: wiring.base(&t.shift), z: sizing.z, girth: Girth::Infinite })
}

const EMPTY: i32 = -1;
/// Degree-one entry, fixed at shift 0.
const FIXED: i32 = -2;
const WEIGHT_4: u32 = 8;

/// Base wiring. Degree-one columns never lie on cycles; every other entry
/// is a search variable.
struct Wiring {
    m: usize,
    n: usize,
    /// Flat `m x n`: `EMPTY`, `FIXED` or an entry index.
    cell: Vec<i32>,
    entries: Vec<(usize, usize)>,
    row_cols: Vec<Vec<usize>>,
    col_rows: Vec<Vec<usize>>,
}

impl Wiring {
    fn new(sizing: &Sizing, r: &mut StreamRng) -> Option<Self> {
        let m = sizing.row_deg.len();
        let n = sizing.col_deg.len();
        let ones = sizing.col_deg.iter().filter(|&&d| d == 1).count();
        let ones_per_row = spread_degree_one(ones, m, r);
        let mut cap: Vec<usize> = sizing.row_deg.iter().zip(&ones_per_row).map(|(d, k)| d - k).collect();
        let mut cell = vec![EMPTY; m * n];
        let mut one_cols = (0..n).filter(|&c| sizing.col_deg[c] == 1);
        for (row, &k) in ones_per_row.iter().enumerate() {
            for _ in 0..k {
                cell[row * n + one_cols.next()?] = FIXED;
            }
        }

        // Highest residual capacity first; among equals, least overlap with
        // rows already chosen for this column.
        let mut order: Vec<usize> = (0..n).filter(|&c| sizing.col_deg[c] >= 2).collect();
        order.shuffle(r);
        order.sort_by_key(|&c| std::cmp::Reverse(sizing.col_deg[c]));
        let mut overlap = vec![0u32; m * m];
        let mut col_rows = vec![Vec::new(); n];
        for &c in &order {
            let mut chosen: Vec<usize> = Vec::with_capacity(sizing.col_deg[c]);
            for _ in 0..sizing.col_deg[c] {
                let pick = (0..m)
                    .filter(|row| cap[*row] > 0 && !chosen.contains(row))
                    .map(|row| {
                        let ov: u32 = chosen.iter().map(|&o| overlap[row * m + o]).sum();
                        (std::cmp::Reverse(cap[row]), ov, r.random::<u32>(), row)
                    })
                    .min()?
                    .3;
                chosen.push(pick);
            }
            for &a in &chosen {
                cap[a] -= 1;
                for &b in &chosen {
                    if a != b {
                        overlap[a * m + b] += 1;
                    }
                }
            }
            chosen.sort_unstable();
            col_rows[c] = chosen;
        }
        if cap.iter().any(|&x| x != 0) {
            return None;
        }
        let mut entries = Vec::new();
        let mut row_cols = vec![Vec::new(); m];
        for row in 0..m {
            for c in 0..n {
                if col_rows[c].binary_search(&row).is_ok() {
                    cell[row * n + c] = entries.len() as i32;
                    entries.push((row, c));
                    row_cols[row].push(c);
                }
            }
        }
        Some(Self { m, n, cell, entries, row_cols, col_rows })
    }

    fn entry(&self, row: usize, col: usize) -> Option<u32> {
        u32::try_from(self.cell[row * self.n + col]).ok()
    }

    /// Every base 4-cycle, and every 6-cycle when `want >= 8`. Entries are
    /// listed in walk order, alternating in sign.
    fn cycles(&self, want: usize) -> Vec<Cycle> {
        let e = |r: usize, c: usize| self.entry(r, c).expect("wired entry");
        let mut out = Vec::new();
        for r1 in 0..self.m {
            for r2 in r1 + 1..self.m {
                let common: Vec<usize> =
                    self.row_cols[r1].iter().copied().filter(|&c| self.entry(r2, c).is_some()).collect();
                for (i, &c1) in common.iter().enumerate() {
                    for &c2 in &common[i + 1..] {
                        out.push(Cycle {
                            len: 4,
                            w: WEIGHT_4,
                            e: [e(r1, c1), e(r2, c1), e(r2, c2), e(r1, c2), 0, 0],
                        });
                    }
                }
            }
        }
        if want < 8 {
            return out;
        }
        // The smallest row starts the walk, towards its smaller column.
        for r1 in 0..self.m {
            for &c1 in &self.row_cols[r1] {
                for &r2 in self.col_rows[c1].iter().filter(|&&x| x > r1) {
                    for &c2 in self.row_cols[r2].iter().filter(|&&x| x != c1) {
                        for &r3 in self.col_rows[c2].iter().filter(|&&x| x > r1 && x != r2) {
                            for &c3 in self.row_cols[r3].iter().filter(|&&x| x > c1 && x != c2) {
                                if let Some(last) = self.entry(r1, c3) {
                                    out.push(Cycle {
                                        len: 6,
                                        w: 1,
                                        e: [e(r1, c1), e(r2, c1), e(r2, c2), e(r3, c2), e(r3, c3), last],
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }

    fn base(&self, shift: &[u32]) -> Vec<Vec<i32>> {
        (0..self.m)
            .map(|row| {
                (0..self.n)
                    .map(|c| match self.cell[row * self.n + c] {
                        EMPTY => EMPTY,
                        FIXED => 0,
                        k => shift[k as usize] as i32,
                    })
                    .collect()
            })
            .collect()
    }
}

/// A base cycle lifts to short cycles exactly when its alternating shift
/// sum is 0 mod Z.
struct Cycle {
    len: u8,
    w: u32,
    e: [u32; 6],
}

/// Tabu search over shifts. `hits[e * z + v]` is the weight of cycles
/// through entry `e` that would close if `e` took shift `v`; it is kept
/// current after every move.
struct Tabu {
    z: usize,
    cycles: Vec<Cycle>,
    by_entry: Vec<Vec<(u32, u8)>>,
    shift: Vec<u32>,
    sum: Vec<u32>,
    hits: Vec<u32>,
}

impl Tabu {
    fn new(w: &Wiring, z: usize, want: usize, r: &mut StreamRng) -> Self {
        let cycles = w.cycles(want);
        let n = w.entries.len();
        let mut by_entry = vec![Vec::new(); n];
        for (k, c) in cycles.iter().enumerate() {
            for pos in 0..c.len as usize {
                by_entry[c.e[pos] as usize].push((k as u32, pos as u8));
            }
        }
        let shift: Vec<u32> = (0..n).map(|_| r.random_range(0..z as u32)).collect();
        let mut t = Self { z, cycles, by_entry, shift, sum: Vec::new(), hits: vec![0; n * z] };
        t.sum = t.cycles.iter().map(|c| t.alternating_sum(c)).collect();
        for (k, c) in t.cycles.iter().enumerate() {
            for pos in 0..c.len as usize {
                let f = c.e[pos] as usize;
                let v = t.closing(f, pos, t.sum[k]);
                t.hits[f * z + v] += c.w;
            }
        }
        t
    }

    fn alternating_sum(&self, c: &Cycle) -> u32 {
        let z = self.z as u32;
        (0..c.len as usize).fold(0, |acc, pos| {
            let s = self.shift[c.e[pos] as usize];
            if pos % 2 == 0 { (acc + s) % z } else { (acc + z - s) % z }
        })
    }

    /// Shift of entry `f` (at `pos` in a cycle with sum `sum`) that zeroes
    /// the sum.
    fn closing(&self, f: usize, pos: usize, sum: u32) -> usize {
        let z = self.z as u32;
        let s = self.shift[f];
        (if pos % 2 == 0 { (s + z - sum) % z } else { (s + sum) % z }) as usize
    }

    fn energy(&self) -> i64 {
        self.cycles.iter().zip(&self.sum).filter(|(_, &s)| s == 0).map(|(c, _)| c.w as i64).sum()
    }

    fn apply(&mut self, e: usize, v: u32) {
        let z = self.z as u32;
        let delta = (v + z - self.shift[e]) % z;
        for i in 0..self.by_entry[e].len() {
            let (k, pos_e) = self.by_entry[e][i];
            let k = k as usize;
            let old = self.sum[k];
            let new = if pos_e % 2 == 0 { (old + delta) % z } else { (old + z - delta) % z };
            let (len, w) = (self.cycles[k].len as usize, self.cycles[k].w);
            for pos in 0..len {
                let f = self.cycles[k].e[pos] as usize;
                if f == e {
                    continue;
                }
                let before = self.closing(f, pos, old);
                let after = self.closing(f, pos, new);
                self.hits[f * self.z + before] -= w;
                self.hits[f * self.z + after] += w;
            }
            self.sum[k] = new;
        }
        self.shift[e] = v;
    }

    /// Best non-tabu move on a conflicted entry each step; a tabu move is
    /// taken only when it beats the best state so far. Stops after `budget`
    /// moves or `STALL` moves without progress, holding the best state seen.
    fn run(&mut self, budget: usize, r: &mut StreamRng) -> bool {
        let z = self.z;
        let n = self.shift.len();
        let mut energy = self.energy();
        let mut best = (energy, self.shift.clone());
        let mut tabu = vec![0usize; n * z];
        let mut last_best = 0;
        for it in 0..budget {
            if energy == 0 {
                return true;
            }
            if it - last_best > STALL {
                break;
            }
            let mut pick = None;
            let mut pick_delta = i64::MAX;
            let mut ties = 0u32;
            let mut conflicted = 0;
            for e in 0..n {
                let cur = self.shift[e] as usize;
                let here = self.hits[e * z + cur] as i64;
                if here == 0 {
                    continue;
                }
                conflicted += 1;
                for (v, &h) in self.hits[e * z..(e + 1) * z].iter().enumerate() {
                    let delta = h as i64 - here;
                    if v == cur || delta > pick_delta || (tabu[e * z + v] > it && energy + delta >= best.0) {
                        continue;
                    }
                    if delta < pick_delta {
                        pick_delta = delta;
                        ties = 0;
                    }
                    ties += 1;
                    if r.random_range(0..ties) == 0 {
                        pick = Some((e, v));
                    }
                }
            }
            let Some((e, v)) = pick else { break };
            let old = self.shift[e] as usize;
            self.apply(e, v as u32);
            energy += pick_delta;
            tabu[e * z + old] = it + TENURE + r.random_range(0..TENURE) + conflicted * 3 / 5;
            if energy < best.0 {
                best = (energy, self.shift.clone());
                last_best = it;
            }
        }
        if energy != best.0 {
            for e in 0..n {
                if self.shift[e] != best.1[e] {
                    self.apply(e, best.1[e]);
                }
            }
        }
        best.0 == 0
    }
}
