//! Pair partitions of `{1, ..., k}`: enumeration, crossing structure and height.

use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};

/// Default ceiling on `k` for exhaustive enumeration; `(15)!! = 2_027_025` pairings.
pub const DEFAULT_MAX_K: usize = 16;

/// A perfect pairing of `{1, ..., k}`.
///
/// Blocks are stored as `(i, j)` with `i < j`, sorted by `i`. Every constructor
/// normalizes to this form, so structural equality is partition equality.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PairPartition {
    k: usize,
    blocks: Vec<(usize, usize)>,
}

/// Crossing flag and height of a pair partition.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PartitionClass {
    pub crossing: bool,
    pub height: usize,
}

fn window_closed(partner: &[usize], i: usize, j: usize) -> bool {
    let window = i + 1..j;
    let closed = window.clone().all(|x| window.contains(&partner[x]));
    // a closed window holds whole pairs, so its length is even
    debug_assert!(!closed || (j - i - 1).is_multiple_of(2));
    closed
}

fn check_k(k: usize, max_k: usize) -> Result<()> {
    if k == 0 || !k.is_multiple_of(2) {
        return invalid(format!("k must be even and positive, got {k}"));
    }
    if k > max_k {
        return invalid(format!("k = {k} exceeds the enumeration cap {max_k}"));
    }
    Ok(())
}

impl PairPartition {
    /// Builds a partition from arbitrary-order blocks, validating the pairing.
    pub fn new(k: usize, blocks: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if k == 0 || !k.is_multiple_of(2) {
            return invalid(format!("k must be even and positive, got {k}"));
        }
        let mut seen = vec![false; k + 1];
        let mut normalized = Vec::with_capacity(k / 2);
        for (a, b) in blocks {
            let (i, j) = if a < b { (a, b) } else { (b, a) };
            if i == j || i == 0 || j > k {
                return invalid(format!("block {{{a},{b}}} is not a pair in 1..={k}"));
            }
            for x in [i, j] {
                if std::mem::replace(&mut seen[x], true) {
                    return invalid(format!("element {x} appears in more than one block"));
                }
            }
            normalized.push((i, j));
        }
        if normalized.len() != k / 2 {
            return invalid(format!(
                "expected {} blocks for k = {k}, got {}",
                k / 2,
                normalized.len()
            ));
        }
        normalized.sort_unstable();
        Ok(Self {
            k,
            blocks: normalized,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn blocks(&self) -> &[(usize, usize)] {
        &self.blocks
    }

    /// `partners()[x]` is the element paired with `x`; index 0 is unused.
    pub fn partners(&self) -> Vec<usize> {
        let mut partner = vec![0; self.k + 1];
        for &(i, j) in &self.blocks {
            partner[i] = j;
            partner[j] = i;
        }
        partner
    }

    pub fn is_crossing(&self) -> bool {
        self.blocks.iter().enumerate().any(|(n, &(a, b))| {
            self.blocks[n + 1..]
                .iter()
                .any(|&(c, d)| a < c && c < b && b < d)
        })
    }

    /// Whether block `(i, j)` counts toward the height: either `j = i + 1`, or
    /// every element strictly between `i` and `j` is paired inside that window.
    pub fn encloses_pairing(&self, i: usize, j: usize) -> bool {
        window_closed(&self.partners(), i, j)
    }

    pub fn height(&self) -> usize {
        let partner = self.partners();
        self.blocks
            .iter()
            .filter(|&&(i, j)| window_closed(&partner, i, j))
            .count()
    }

    pub fn classify(&self) -> PartitionClass {
        PartitionClass {
            crossing: self.is_crossing(),
            height: self.height(),
        }
    }

    /// Image under the reflection `x -> k + 1 - x` of the ground set.
    pub fn reflect(&self) -> Self {
        let k = self.k;
        Self::new(k, self.blocks.iter().map(|&(i, j)| (k + 1 - j, k + 1 - i)))
            .expect("reflection of a pairing is a pairing")
    }
}

impl fmt::Display for PairPartition {
    /// Canonical encoding, e.g. `1-3,2-4`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (n, (i, j)) in self.blocks.iter().enumerate() {
            if n > 0 {
                f.write_str(",")?;
            }
            write!(f, "{i}-{j}")?;
        }
        Ok(())
    }
}

impl serde::Serialize for PairPartition {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl FromStr for PairPartition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut blocks = Vec::new();
        for part in s.trim().split(',') {
            let (a, b) = part
                .split_once('-')
                .ok_or_else(|| Error::InvalidArgument(format!("malformed block {part:?}")))?;
            let parse = |t: &str| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|e| Error::InvalidArgument(format!("malformed block {part:?}: {e}")))
            };
            blocks.push((parse(a)?, parse(b)?));
        }
        let k = 2 * blocks.len();
        Self::new(k, blocks)
    }
}

/// All pair partitions of `{1, ..., k}` in lexicographic order of block lists.
pub fn enumerate_pair_partitions(k: usize) -> Result<Vec<PairPartition>> {
    enumerate_pair_partitions_capped(k, DEFAULT_MAX_K)
}

pub fn enumerate_pair_partitions_capped(k: usize, max_k: usize) -> Result<Vec<PairPartition>> {
    check_k(k, max_k)?;
    let mut out = Vec::with_capacity(double_factorial(k - 1) as usize);
    let mut unpaired: Vec<usize> = (1..=k).collect();
    let mut current = Vec::with_capacity(k / 2);
    pair_smallest(&mut unpaired, &mut current, &mut |blocks| {
        out.push(PairPartition {
            k,
            blocks: blocks.to_vec(),
        })
    });
    Ok(out)
}

// Pairs the smallest unpaired element with each larger candidate in turn.
// Blocks are emitted in order of their smaller element, hence already canonical.
fn pair_smallest(
    unpaired: &mut Vec<usize>,
    current: &mut Vec<(usize, usize)>,
    emit: &mut impl FnMut(&[(usize, usize)]),
) {
    if unpaired.is_empty() {
        emit(current);
        return;
    }
    let first = unpaired.remove(0);
    for idx in 0..unpaired.len() {
        let partner = unpaired.remove(idx);
        current.push((first, partner));
        pair_smallest(unpaired, current, emit);
        current.pop();
        unpaired.insert(idx, partner);
    }
    unpaired.insert(0, first);
}

pub fn count_noncrossing(k: usize) -> Result<u64> {
    Ok(enumerate_pair_partitions(k)?
        .iter()
        .filter(|p| !p.is_crossing())
        .count() as u64)
}

/// `n!!` for odd or even `n`; `(-1)!! = 0!! = 1`.
pub fn double_factorial(n: usize) -> u64 {
    (1..=n as u64).rev().step_by(2).product()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pp(s: &str) -> PairPartition {
        s.parse().unwrap()
    }

    #[test]
    fn small_enumerations() {
        let two = enumerate_pair_partitions(2).unwrap();
        assert_eq!(two, vec![pp("1-2")]);

        let four = enumerate_pair_partitions(4).unwrap();
        assert_eq!(four, vec![pp("1-2,3-4"), pp("1-3,2-4"), pp("1-4,2-3")]);

        assert_eq!(enumerate_pair_partitions(6).unwrap().len(), 15);
    }

    #[test]
    fn enumeration_rejects_bad_k() {
        for k in [0, 3, 7] {
            let err = enumerate_pair_partitions(k).unwrap_err().to_string();
            assert!(err.contains("even"), "{err}");
        }
        assert!(enumerate_pair_partitions(18).is_err());
        assert!(enumerate_pair_partitions_capped(10, 8).is_err());
        assert_eq!(enumerate_pair_partitions_capped(10, 10).unwrap().len(), 945);
    }

    #[test]
    fn enumeration_is_sorted_and_distinct() {
        let all = enumerate_pair_partitions(8).unwrap();
        assert!(all.windows(2).all(|w| w[0].blocks() < w[1].blocks()));
    }

    #[test]
    fn crossing_examples() {
        assert!(!pp("1-2,3-4").is_crossing());
        assert!(pp("1-3,2-4").is_crossing());
        assert!(!pp("1-4,2-3").is_crossing());
    }

    #[test]
    fn height_examples() {
        assert_eq!(pp("1-6,2-4,3-5").height(), 1);
        assert_eq!(pp("1-2,3-4,5-6").height(), 3);
        assert_eq!(pp("1-4,2-5,3-6").height(), 0);
        assert_eq!(pp("1-3,2-4").height(), 0);
        assert_eq!(pp("1-4,2-3").height(), 2);
    }

    #[test]
    fn noncrossing_counts() {
        assert_eq!(count_noncrossing(2).unwrap(), 1);
        assert_eq!(count_noncrossing(4).unwrap(), 2);
        assert_eq!(count_noncrossing(6).unwrap(), 5);
    }

    #[test]
    fn parse_and_display() {
        let p: PairPartition = "2-4, 3-1".parse().unwrap();
        assert_eq!(p.to_string(), "1-3,2-4");
        assert!("1-2,2-3".parse::<PairPartition>().is_err());
        assert!("1-5,2-3".parse::<PairPartition>().is_err());
        assert!("1+2".parse::<PairPartition>().is_err());
    }

    #[test]
    fn double_factorials() {
        assert_eq!(double_factorial(0), 1);
        assert_eq!(double_factorial(1), 1);
        assert_eq!(double_factorial(5), 15);
        assert_eq!(double_factorial(11), 10395);
    }
}
