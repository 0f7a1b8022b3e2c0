//! Brute-force enumeration of consistent index tuples.
//!
//! A `k`-tuple of consistent pairs `P_i = (p_i, q_i)` with `q_i = p_{i+1}`
//! (cyclically) is the closed walk `(p_1, ..., p_k)` on `{1, ..., n}`. Each walk
//! induces a partition of `{1, ..., k}` by equal offsets `|q_i - p_i|`; walks
//! whose partition is a pairing `pi` form `S_n(pi)`. Within it, `S_n*(pi)` keeps
//! the walks whose paired steps run in opposite directions
//! (`q_i - p_i = p_j - q_j`). For each walk in `S_n*(pi)` the oracle records
//! `m`, the number of position pairs reading the same matrix cell
//! (`{p_i, q_i} = {p_j, q_j}`), and for every block `{i, j}` whether
//! `p_i = q_j, q_i = p_j`.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::partitions::{enumerate_pair_partitions, PairPartition};

/// Largest number of walks a single classification may enumerate.
pub const MAX_WALKS: u64 = 100_000_000;
/// Largest tuple length handled by the oracle.
pub const MAX_K: usize = 12;

/// Pass thresholds for the finite-n checks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OracleThresholds {
    /// A decaying ratio must end below this fraction of its first value.
    pub max_final_fraction: f64,
}

impl Default for OracleThresholds {
    fn default() -> Self {
        Self {
            max_final_fraction: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PartitionCounts {
    pub partition: PairPartition,
    pub height: usize,
    pub crossing: bool,
    /// `|S_n(pi)|`
    pub sn: u64,
    /// `|S_n*(pi)|`
    pub sn_star: u64,
    /// `m_histogram[m]` = walks in `S_n*(pi)` with `m` shared cells.
    pub m_histogram: Vec<u64>,
    /// Per block (in canonical order): walks in `S_n*(pi)` with
    /// `p_i = q_j, q_i = p_j` on that block.
    pub block_reversed: Vec<u64>,
    /// Walks in `S_n*(pi)` with `m < height`.
    pub height_violations: u64,
    pub first_violation: Option<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleCounts {
    pub n: usize,
    pub k: usize,
    pub walks: u64,
    /// Walks whose offset partition is not a pairing.
    pub non_pair_walks: u64,
    pub partitions: Vec<PartitionCounts>,
}

impl OracleCounts {
    fn scale(&self) -> f64 {
        (self.n as f64).powi(self.k as i32 / 2 + 1)
    }

    pub fn get(&self, p: &PairPartition) -> Option<&PartitionCounts> {
        self.partitions.iter().find(|c| &c.partition == p)
    }

    /// `|S_n*(pi)| / n^(k/2+1)`
    pub fn sn_star_ratio(&self, p: &PairPartition) -> Option<f64> {
        self.get(p).map(|c| c.sn_star as f64 / self.scale())
    }

    /// `|S_n(pi) \ S_n*(pi)| / n^(k/2+1)`
    pub fn excess_ratio(&self, p: &PairPartition) -> Option<f64> {
        self.get(p)
            .map(|c| (c.sn - c.sn_star) as f64 / self.scale())
    }

    /// `|S_n*(pi; i, j)| / n^(k/2+1)` for block `(i, j)` of `pi`.
    pub fn block_reversed_ratio(&self, p: &PairPartition, block: (usize, usize)) -> Option<f64> {
        let c = self.get(p)?;
        let idx = p.blocks().iter().position(|&b| b == block)?;
        Some(c.block_reversed[idx] as f64 / self.scale())
    }
}

fn check_cost(n: usize, k: usize) -> Result<u64> {
    if k == 0 || !k.is_multiple_of(2) || k > MAX_K {
        return invalid(format!("oracle needs even k in 2..={MAX_K}, got {k}"));
    }
    if n == 0 {
        return invalid("oracle needs n >= 1");
    }
    let walks = (n as u64).checked_pow(k as u32).filter(|&w| w <= MAX_WALKS);
    walks.ok_or_else(|| {
        crate::Error::InvalidArgument(format!(
            "n^k = {n}^{k} exceeds the enumeration budget of {MAX_WALKS} walks"
        ))
    })
}

// partner list packed 5 bits per position
fn pack(partner: &[usize]) -> u64 {
    partner.iter().fold(0, |acc, &x| (acc << 5) | x as u64)
}

struct Classifier {
    k: usize,
    index: HashMap<u64, usize>,
    blocks: Vec<Vec<(usize, usize)>>,
    heights: Vec<usize>,
}

#[derive(Clone)]
struct Tally {
    non_pair: u64,
    sn: Vec<u64>,
    sn_star: Vec<u64>,
    m_hist: Vec<Vec<u64>>,
    block_reversed: Vec<Vec<u64>>,
    violations: Vec<u64>,
    first_violation: Vec<Option<Vec<usize>>>,
}

impl Tally {
    fn new(parts: usize, k: usize) -> Self {
        Self {
            non_pair: 0,
            sn: vec![0; parts],
            sn_star: vec![0; parts],
            m_hist: vec![vec![0; k / 2 + 1]; parts],
            block_reversed: vec![vec![0; k / 2]; parts],
            violations: vec![0; parts],
            first_violation: vec![None; parts],
        }
    }

    // Integer addition, so merge order does not matter; the kept
    // counterexample is the one from the smallest starting vertex.
    fn merge(mut self, other: Tally) -> Tally {
        self.non_pair += other.non_pair;
        for p in 0..self.sn.len() {
            self.sn[p] += other.sn[p];
            self.sn_star[p] += other.sn_star[p];
            self.violations[p] += other.violations[p];
            for (a, b) in self.m_hist[p].iter_mut().zip(&other.m_hist[p]) {
                *a += b;
            }
            for (a, b) in self.block_reversed[p]
                .iter_mut()
                .zip(&other.block_reversed[p])
            {
                *a += b;
            }
            self.first_violation[p] = match (
                self.first_violation[p].take(),
                other.first_violation[p].clone(),
            ) {
                (Some(a), Some(b)) => Some(a.min(b)),
                (a, b) => a.or(b),
            };
        }
        self
    }
}

impl Classifier {
    fn new(k: usize) -> Result<(Self, Vec<PairPartition>)> {
        let parts = enumerate_pair_partitions(k)?;
        let mut index = HashMap::with_capacity(parts.len());
        for (idx, p) in parts.iter().enumerate() {
            let partner: Vec<usize> = p.partners()[1..].to_vec();
            index.insert(pack(&partner), idx);
        }
        let blocks = parts.iter().map(|p| p.blocks().to_vec()).collect();
        let heights = parts.iter().map(PairPartition::height).collect();
        Ok((
            Self {
                k,
                index,
                blocks,
                heights,
            },
            parts,
        ))
    }

    fn visit(&self, walk: &[usize], steps: &mut [i64], partner: &mut [usize], tally: &mut Tally) {
        let k = self.k;
        for i in 0..k {
            steps[i] = walk[(i + 1) % k] as i64 - walk[i] as i64;
        }
        for i in 0..k {
            let mut found = 0;
            for j in 0..k {
                if j != i && steps[j].abs() == steps[i].abs() {
                    found += 1;
                    partner[i] = j + 1;
                }
            }
            if found != 1 {
                tally.non_pair += 1;
                return;
            }
        }
        let idx = self.index[&pack(partner)];
        tally.sn[idx] += 1;
        let blocks = &self.blocks[idx];
        if !blocks.iter().all(|&(i, j)| steps[i - 1] == -steps[j - 1]) {
            return;
        }
        tally.sn_star[idx] += 1;

        // cell of position i (1-based) is {p_i, q_i} = {walk[i-1], walk[i % k]}
        let cell = |i: usize| {
            let (a, b) = (walk[i - 1], walk[i % k]);
            (a.min(b), a.max(b))
        };
        let mut m = 0;
        for i in 1..=k {
            for j in i + 1..=k {
                m += (cell(i) == cell(j)) as usize;
            }
        }
        tally.m_hist[idx][m] += 1;
        for (b, &(i, j)) in blocks.iter().enumerate() {
            // p_i = q_j and q_i = p_j
            if walk[i - 1] == walk[j % k] && walk[i % k] == walk[j - 1] {
                tally.block_reversed[idx][b] += 1;
            }
        }
        if m < self.heights[idx] {
            tally.violations[idx] += 1;
            if tally.first_violation[idx].is_none() {
                tally.first_violation[idx] = Some(walk.to_vec());
            }
        }
    }

    fn walks_from(&self, n: usize, first: usize) -> Tally {
        let k = self.k;
        let mut tally = Tally::new(self.blocks.len(), k);
        let mut walk = vec![1; k];
        walk[0] = first;
        let mut steps = vec![0; k];
        let mut partner = vec![0; k];
        loop {
            self.visit(&walk, &mut steps, &mut partner, &mut tally);
            // odometer over positions 2..=k
            let mut pos = k - 1;
            loop {
                if pos == 0 {
                    return tally;
                }
                if walk[pos] < n {
                    walk[pos] += 1;
                    break;
                }
                walk[pos] = 1;
                pos -= 1;
            }
        }
    }
}

/// Classifies all `n^k` closed walks.
pub fn classify_tuples(n: usize, k: usize) -> Result<OracleCounts> {
    let walks = check_cost(n, k)?;
    let (classifier, parts) = Classifier::new(k)?;
    let tally = (1..=n)
        .into_par_iter()
        .map(|first| classifier.walks_from(n, first))
        .reduce(|| Tally::new(parts.len(), k), Tally::merge);

    let partitions = parts
        .into_iter()
        .enumerate()
        .map(|(idx, partition)| PartitionCounts {
            height: classifier.heights[idx],
            crossing: partition.is_crossing(),
            partition,
            sn: tally.sn[idx],
            sn_star: tally.sn_star[idx],
            m_histogram: tally.m_hist[idx].clone(),
            block_reversed: tally.block_reversed[idx].clone(),
            height_violations: tally.violations[idx],
            first_violation: tally.first_violation[idx].clone(),
        })
        .collect();
    Ok(OracleCounts {
        n,
        k,
        walks,
        non_pair_walks: tally.non_pair,
        partitions,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HeightLemmaReport {
    pub n: usize,
    pub k: usize,
    /// Walks checked, i.e. the total size of all `S_n*(pi)`.
    pub checked: u64,
    pub violations: u64,
    /// `(partition, walk)` of the first violation found.
    pub counterexample: Option<(String, Vec<usize>)>,
    pub passed: bool,
}

/// Checks `m >= h(pi)` on every walk of every `S_n*(pi)`.
pub fn check_height_lemma(n: usize, k: usize) -> Result<HeightLemmaReport> {
    Ok(height_lemma_report(&classify_tuples(n, k)?))
}

pub fn height_lemma_report(counts: &OracleCounts) -> HeightLemmaReport {
    let checked = counts.partitions.iter().map(|c| c.sn_star).sum();
    let violations = counts.partitions.iter().map(|c| c.height_violations).sum();
    let counterexample = counts.partitions.iter().find_map(|c| {
        c.first_violation
            .as_ref()
            .map(|w| (c.partition.to_string(), w.clone()))
    });
    HeightLemmaReport {
        n: counts.n,
        k: counts.k,
        checked,
        violations,
        counterexample,
        passed: violations == 0,
    }
}

/// A normalized count tracked across a grid of `n`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayReport {
    pub label: String,
    pub ratios: Vec<(usize, f64)>,
    /// Every ratio is zero: the counted set is empty on the whole grid.
    pub identically_zero: bool,
    pub strictly_decreasing: bool,
    pub halved: bool,
    pub passed: bool,
}

impl DecayReport {
    pub fn new(label: String, ratios: Vec<(usize, f64)>, thresholds: &OracleThresholds) -> Self {
        let identically_zero = ratios.iter().all(|r| r.1 == 0.0);
        let strictly_decreasing = ratios.windows(2).all(|w| w[1].1 < w[0].1);
        let halved = match (ratios.first(), ratios.last()) {
            (Some(a), Some(b)) => b.1 < thresholds.max_final_fraction * a.1,
            _ => false,
        };
        let passed = identically_zero || (strictly_decreasing && halved);
        Self {
            label,
            ratios,
            identically_zero,
            strictly_decreasing,
            halved,
            passed,
        }
    }
}

fn check_grid(ns: &[usize]) -> Result<()> {
    if ns.len() < 2 || ns.windows(2).any(|w| w[1] <= w[0]) {
        return invalid("decay checks need an increasing grid of at least two n values");
    }
    Ok(())
}

/// Whether block `(i, j)` of `p` is crossed by another block.
pub fn block_is_crossed(p: &PairPartition, (i, j): (usize, usize)) -> bool {
    p.blocks()
        .iter()
        .any(|&(a, b)| (i < a && a < j && j < b) || (a < i && i < b && b < j))
}

/// `|S_n*(pi; i, j)| / n^(k/2+1)` across `ns` for a crossed block `(i, j)`.
pub fn check_excess_crossing_decay(
    ns: &[usize],
    p: &PairPartition,
    block: (usize, usize),
    thresholds: &OracleThresholds,
) -> Result<DecayReport> {
    check_grid(ns)?;
    if !p.blocks().contains(&block) {
        return invalid(format!("{{{},{}}} is not a block of {p}", block.0, block.1));
    }
    if !block_is_crossed(p, block) {
        return invalid(format!(
            "block {{{},{}}} of {p} is not crossed by any other block",
            block.0, block.1
        ));
    }
    let mut ratios = Vec::with_capacity(ns.len());
    for &n in ns {
        let counts = classify_tuples(n, p.k())?;
        ratios.push((n, counts.block_reversed_ratio(p, block).unwrap_or(0.0)));
    }
    Ok(DecayReport::new(
        format!("{p} block {}-{}", block.0, block.1),
        ratios,
        thresholds,
    ))
}

/// `|S_n(pi) \ S_n*(pi)| / n^(k/2+1)` across `ns`, one report per pairing.
pub fn check_sn_minus_snstar_decay(
    ns: &[usize],
    k: usize,
    thresholds: &OracleThresholds,
) -> Result<Vec<DecayReport>> {
    check_grid(ns)?;
    let all: Vec<OracleCounts> = ns
        .iter()
        .map(|&n| classify_tuples(n, k))
        .collect::<Result<_>>()?;
    Ok(enumerate_pair_partitions(k)?
        .iter()
        .map(|p| {
            let ratios = all
                .iter()
                .map(|c| (c.n, c.excess_ratio(p).unwrap_or(0.0)))
                .collect();
            DecayReport::new(p.to_string(), ratios, thresholds)
        })
        .collect())
}

/// Extrapolates a ratio behaving like `r + a/n` from two grid points.
pub fn extrapolate_ratio((n1, r1): (usize, f64), (n2, r2): (usize, f64)) -> f64 {
    let (n1, n2) = (n1 as f64, n2 as f64);
    (n2 * r2 - n1 * r1) / (n2 - n1)
}
