//! Toeplitz volumes of pair partitions.
//!
//! Each block `{i, j}`, `i < j`, of a pairing of `{1, ..., k}` contributes the
//! linear constraint `x_i - x_{i-1} + x_j - x_{j-1} = 0` on unknowns
//! `x_0, ..., x_k`. Solving for the larger element of every block leaves
//! `k/2 + 1` free variables; the volume is the probability that uniformly
//! drawn free variables put every determined variable back in `[0, 1]`.
//!
//! Non-crossing partitions have volume exactly 1. Crossing partitions are
//! estimated by Monte Carlo. Samples are drawn in fixed-size chunks and chunk
//! `c` reads ChaCha stream `c` of a seed derived from the base seed and the
//! canonical partition string, so sample `s` always maps to the same point
//! regardless of thread count, and a run with `2N` samples extends the run
//! with `N` samples whenever `N` is a multiple of the chunk size.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rand::Rng;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::partitions::PairPartition;
use crate::seed;

/// Samples per Monte Carlo chunk (one ChaCha stream each).
pub const CHUNK_SAMPLES: u64 = 1 << 16;

/// An integer linear form over the free variables of a [`SolvedSystem`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineForm {
    /// One coefficient per entry of `SolvedSystem::free_vars`.
    pub coefficients: Vec<i64>,
    pub constant: i64,
}

impl AffineForm {
    pub fn eval(&self, free_values: &[f64]) -> f64 {
        self.constant as f64
            + self
                .coefficients
                .iter()
                .zip(free_values)
                .map(|(&c, &x)| c as f64 * x)
                .sum::<f64>()
    }
}

/// Solution of the block constraints of a partition, with the larger element
/// of every block expressed through the free variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolvedSystem {
    pub k: usize,
    pub free_vars: Vec<usize>,
    pub determined: BTreeMap<usize, AffineForm>,
    blocks: Vec<(usize, usize)>,
}

/// Eliminates `x_j` for every block `{i, j}`, `i < j`, in increasing order of
/// `j`, using `x_j = x_{j-1} - x_i + x_{i-1}`. Indices below `j` are either free
/// or were eliminated earlier, so each form references free variables only.
pub fn solve_partition_system(p: &PairPartition) -> SolvedSystem {
    let k = p.k();
    let mut is_determined = vec![false; k + 1];
    for &(_, j) in p.blocks() {
        is_determined[j] = true;
    }
    let free_vars: Vec<usize> = (0..=k).filter(|&x| !is_determined[x]).collect();
    let width = free_vars.len();

    let mut forms: Vec<Vec<i64>> = vec![vec![0; width]; k + 1];
    for (slot, &x) in free_vars.iter().enumerate() {
        forms[x][slot] = 1;
    }
    let mut by_larger: Vec<(usize, usize)> = p.blocks().to_vec();
    by_larger.sort_unstable_by_key(|&(_, j)| j);

    let mut determined = BTreeMap::new();
    for &(i, j) in &by_larger {
        let form: Vec<i64> = (0..width)
            .map(|s| forms[j - 1][s] - forms[i][s] + forms[i - 1][s])
            .collect();
        forms[j] = form.clone();
        determined.insert(
            j,
            AffineForm {
                coefficients: form,
                constant: 0,
            },
        );
    }

    SolvedSystem {
        k,
        free_vars,
        determined,
        blocks: by_larger,
    }
}

impl SolvedSystem {
    /// Full assignment `x_0, ..., x_k` induced by values of the free variables.
    pub fn substitute(&self, free_values: &[f64]) -> Vec<f64> {
        assert_eq!(free_values.len(), self.free_vars.len());
        let mut x = vec![0.0; self.k + 1];
        for (&v, &val) in self.free_vars.iter().zip(free_values) {
            x[v] = val;
        }
        for (&j, form) in &self.determined {
            x[j] = form.eval(free_values);
        }
        x
    }

    /// Left-hand sides of the `k/2` distinct block equations at `x`.
    pub fn residuals(&self, x: &[f64]) -> Vec<f64> {
        self.blocks
            .iter()
            .map(|&(i, j)| x[i] - x[i - 1] + x[j] - x[j - 1])
            .collect()
    }

    /// Whether every determined variable lies in the closed unit interval.
    pub fn feasible(&self, free_values: &[f64]) -> bool {
        self.determined.values().all(|f| {
            let v = f.eval(free_values);
            (0.0..=1.0).contains(&v)
        })
    }
}

/// Monte Carlo (or exact) value of a Toeplitz volume.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VolumeEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: u64,
    pub seed: u64,
    pub exact: bool,
}

impl VolumeEstimate {
    fn exact_one(samples: u64, seed: u64) -> Self {
        Self {
            value: 1.0,
            std_error: 0.0,
            samples,
            seed,
            exact: true,
        }
    }

    fn from_hits(hits: u64, samples: u64, seed: u64) -> Self {
        let value = hits as f64 / samples as f64;
        Self {
            value,
            std_error: (value * (1.0 - value) / samples as f64).sqrt(),
            samples,
            seed,
            exact: false,
        }
    }
}

pub fn toeplitz_volume(p: &PairPartition, samples: u64, seed: u64) -> Result<VolumeEstimate> {
    if samples == 0 {
        return invalid("volume estimation needs samples >= 1");
    }
    if !p.is_crossing() {
        return Ok(VolumeEstimate::exact_one(samples, seed));
    }
    let system = solve_partition_system(p);
    let hits = count_feasible(&system, samples, stream_key(p), seed, true);
    Ok(VolumeEstimate::from_hits(hits, samples, seed))
}

fn stream_key(p: &PairPartition) -> u64 {
    seed::hash_str(&p.to_string())
}

// Dense f64 coefficient rows for the inner loop.
struct CompiledForms {
    width: usize,
    rows: Vec<f64>,
}

impl CompiledForms {
    fn new(system: &SolvedSystem) -> Self {
        let width = system.free_vars.len();
        let rows = system
            .determined
            .values()
            .flat_map(|f| f.coefficients.iter().map(|&c| c as f64))
            .collect();
        Self { width, rows }
    }

    #[inline]
    fn feasible(&self, point: &[f64]) -> bool {
        self.rows.chunks_exact(self.width).all(|row| {
            let v: f64 = row.iter().zip(point).map(|(c, x)| c * x).sum();
            (0.0..=1.0).contains(&v)
        })
    }
}

/// Number of feasible points among the first `samples` points of the stream.
pub(crate) fn count_feasible(
    system: &SolvedSystem,
    samples: u64,
    key: u64,
    seed: u64,
    parallel: bool,
) -> u64 {
    let forms = CompiledForms::new(system);
    let chunks = samples.div_ceil(CHUNK_SAMPLES);
    let run_chunk = |chunk: u64| -> u64 {
        let mut rng = seed::chunk_rng(seed, &[key], chunk);
        let len = CHUNK_SAMPLES.min(samples - chunk * CHUNK_SAMPLES);
        let mut point = vec![0.0; forms.width];
        let mut hits = 0;
        for _ in 0..len {
            point.iter_mut().for_each(|x| *x = rng.random::<f64>());
            hits += forms.feasible(&point) as u64;
        }
        hits
    };
    if parallel {
        (0..chunks).into_par_iter().map(run_chunk).sum()
    } else {
        (0..chunks).map(run_chunk).sum()
    }
}

/// Volume estimates keyed by canonical partition.
///
/// On disk, one whitespace-separated record per line:
/// `partition samples seed value std_error exact`, with `#` comment lines.
/// Floats use Rust's shortest round-trip formatting, so a written cache reads
/// back bit-identically.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct VolumeCache {
    entries: BTreeMap<PairPartition, VolumeEstimate>,
}

impl VolumeCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, p: &PairPartition) -> Option<&VolumeEstimate> {
        self.entries.get(p)
    }

    pub fn insert(&mut self, p: PairPartition, v: VolumeEstimate) {
        self.entries.insert(p, v);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PairPartition, &VolumeEstimate)> {
        self.entries.iter()
    }

    /// Estimates every partition in `parts` that is not cached yet.
    pub fn fill<'a>(
        &mut self,
        parts: impl IntoIterator<Item = &'a PairPartition>,
        samples: u64,
        seed: u64,
    ) -> Result<()> {
        for p in parts {
            if !self.entries.contains_key(p) {
                let v = toeplitz_volume(p, samples, seed)?;
                self.entries.insert(p.clone(), v);
            }
        }
        Ok(())
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "# partition samples seed value std_error exact")?;
        for (p, v) in &self.entries {
            writeln!(
                w,
                "{p} {} {} {} {} {}",
                v.samples, v.seed, v.value, v.std_error, v.exact
            )?;
        }
        Ok(())
    }

    pub fn read_from(r: impl BufRead) -> Result<Self> {
        let mut cache = Self::new();
        for (idx, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |msg: String| Error::Parse { line: idx + 1, msg };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 6 {
                return Err(bad(format!("expected 6 fields, found {}", fields.len())));
            }
            let p: PairPartition = fields[0].parse().map_err(|e: Error| bad(e.to_string()))?;
            let num = |s: &str, what: &str| -> Result<f64> {
                s.parse::<f64>().map_err(|e| bad(format!("{what}: {e}")))
            };
            let int = |s: &str, what: &str| -> Result<u64> {
                s.parse::<u64>().map_err(|e| bad(format!("{what}: {e}")))
            };
            let v = VolumeEstimate {
                samples: int(fields[1], "samples")?,
                seed: int(fields[2], "seed")?,
                value: num(fields[3], "value")?,
                std_error: num(fields[4], "std_error")?,
                exact: fields[5]
                    .parse::<bool>()
                    .map_err(|e| bad(format!("exact: {e}")))?,
            };
            if !(0.0..=1.0).contains(&v.value) || v.std_error < 0.0 {
                return Err(bad(format!(
                    "value {} / std_error {} out of range",
                    v.value, v.std_error
                )));
            }
            cache.entries.insert(p, v);
        }
        Ok(cache)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partitions::enumerate_pair_partitions;

    fn pp(s: &str) -> PairPartition {
        s.parse().unwrap()
    }

    fn form(system: &SolvedSystem, j: usize) -> Vec<(usize, i64)> {
        system.determined[&j]
            .coefficients
            .iter()
            .zip(&system.free_vars)
            .filter(|(&c, _)| c != 0)
            .map(|(&c, &v)| (v, c))
            .collect()
    }

    #[test]
    fn hand_eliminations() {
        let s = solve_partition_system(&pp("1-2,3-4"));
        assert_eq!(s.free_vars, vec![0, 1, 3]);
        assert_eq!(form(&s, 2), vec![(0, 1)]);
        assert_eq!(form(&s, 4), vec![(0, 1)]);

        let s = solve_partition_system(&pp("1-3,2-4"));
        assert_eq!(s.free_vars, vec![0, 1, 2]);
        assert_eq!(form(&s, 3), vec![(0, 1), (1, -1), (2, 1)]);
        assert_eq!(form(&s, 4), vec![(0, 1)]);

        let s = solve_partition_system(&pp("1-2"));
        assert_eq!(s.free_vars, vec![0, 1]);
        assert_eq!(form(&s, 2), vec![(0, 1)]);
    }

    #[test]
    fn structural_invariants() {
        for k in [2, 4, 6, 8] {
            for p in enumerate_pair_partitions(k).unwrap() {
                let s = solve_partition_system(&p);
                assert_eq!(s.free_vars.len(), k / 2 + 1);
                assert_eq!(s.free_vars.len() + s.determined.len(), k + 1);
                for (j, f) in &s.determined {
                    assert!(!s.free_vars.contains(j));
                    assert_eq!(f.constant, 0);
                    assert_eq!(f.coefficients.iter().sum::<i64>(), 1, "{p} x_{j}");
                }
            }
        }
    }

    #[test]
    fn zero_samples_rejected() {
        assert!(matches!(
            toeplitz_volume(&pp("1-3,2-4"), 0, 1),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn noncrossing_is_exact() {
        let v = toeplitz_volume(&pp("1-4,2-3"), 10, 3).unwrap();
        assert!(v.exact);
        assert_eq!(v.value, 1.0);
        assert_eq!(v.std_error, 0.0);
    }

    #[test]
    fn parallel_and_serial_counts_agree() {
        let p = pp("1-4,2-6,3-5");
        let s = solve_partition_system(&p);
        let n = 3 * CHUNK_SAMPLES + 123;
        assert_eq!(
            count_feasible(&s, n, 11, 5, true),
            count_feasible(&s, n, 11, 5, false)
        );
    }

    #[test]
    fn cache_round_trip() {
        let mut cache = VolumeCache::new();
        let parts = enumerate_pair_partitions(4).unwrap();
        cache.fill(&parts, 5000, 9).unwrap();
        let mut buf = Vec::new();
        cache.write_to(&mut buf).unwrap();
        let back = VolumeCache::read_from(buf.as_slice()).unwrap();
        assert_eq!(back, cache);
    }

    #[test]
    fn cache_rejects_malformed_records() {
        for text in [
            "1-2 10 1 0.5 0.1",
            "1-2 10 1 1.5 0.1 false",
            "1-3 10 1 0.5 0.1 false",
        ] {
            assert!(VolumeCache::read_from(text.as_bytes()).is_err(), "{text}");
        }
    }
}
