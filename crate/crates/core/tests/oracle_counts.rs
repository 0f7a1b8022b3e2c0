use std::collections::HashMap;

use corrdiag::oracle::{
    check_excess_crossing_decay, check_height_lemma, classify_tuples, OracleThresholds,
};
use corrdiag::partitions::{enumerate_pair_partitions, PairPartition};

#[derive(Default, Debug, PartialEq)]
struct Tally {
    sn: u64,
    sn_star: u64,
    m_hist: HashMap<usize, u64>,
}

/// Straightforward recount: every closed walk, partition by |step|, orientation
/// by signed steps, shared cells by unordered endpoint pairs.
fn brute(n: usize, k: usize) -> (HashMap<String, Tally>, u64) {
    let mut out: HashMap<String, Tally> = HashMap::new();
    let mut other = 0;
    let mut walk = vec![0usize; k];
    let total = n.pow(k as u32);
    for code in 0..total {
        let mut c = code;
        for w in walk.iter_mut() {
            *w = c % n;
            c /= n;
        }
        let step = |i: usize| walk[(i + 1) % k] as i64 - walk[i] as i64;
        let mut blocks = Vec::new();
        let mut ok = true;
        for i in 0..k {
            let same: Vec<usize> = (0..k)
                .filter(|&j| j != i && step(j).abs() == step(i).abs())
                .collect();
            if same.len() != 1 {
                ok = false;
                break;
            }
            if i < same[0] {
                blocks.push((i + 1, same[0] + 1));
            }
        }
        if !ok {
            other += 1;
            continue;
        }
        let p = PairPartition::new(k, blocks.iter().copied()).unwrap();
        let t = out.entry(p.to_string()).or_default();
        t.sn += 1;
        if blocks.iter().all(|&(a, b)| step(a - 1) == -step(b - 1)) {
            t.sn_star += 1;
            let cell = |i: usize| {
                let (x, y) = (walk[i], walk[(i + 1) % k]);
                (x.min(y), x.max(y))
            };
            let m = (0..k)
                .flat_map(|i| (i + 1..k).map(move |j| (i, j)))
                .filter(|&(i, j)| cell(i) == cell(j))
                .count();
            *t.m_hist.entry(m).or_default() += 1;
        }
    }
    (out, other)
}

fn compare(n: usize, k: usize) {
    let lib = classify_tuples(n, k).unwrap();
    let (expected, other) = brute(n, k);
    assert_eq!(lib.non_pair_walks, other, "n={n} k={k}");
    for c in &lib.partitions {
        let e = expected.get(&c.partition.to_string());
        let (sn, star) = e.map_or((0, 0), |t| (t.sn, t.sn_star));
        assert_eq!((c.sn, c.sn_star), (sn, star), "{} n={n}", c.partition);
        for (m, &count) in c.m_histogram.iter().enumerate() {
            let want = e.and_then(|t| t.m_hist.get(&m)).copied().unwrap_or(0);
            assert_eq!(count, want, "{} n={n} m={m}", c.partition);
        }
    }
}

#[test]
fn library_counts_match_recount() {
    compare(7, 2);
    compare(9, 4);
    compare(6, 6);
}

#[test]
fn k2_star_set_is_every_back_and_forth_walk() {
    for n in [1, 5, 20] {
        let c = classify_tuples(n, 2).unwrap();
        assert_eq!(c.partitions[0].sn_star, (n * n) as u64);
        assert_eq!(c.partitions[0].sn, c.partitions[0].sn_star);
        assert_eq!(c.partitions[0].m_histogram[1], (n * n) as u64);
    }
}

#[test]
fn classes_partition_all_walks() {
    for (n, k) in [(10, 4), (8, 6)] {
        let c = classify_tuples(n, k).unwrap();
        let pairs: u64 = c.partitions.iter().map(|p| p.sn).sum();
        assert_eq!(pairs + c.non_pair_walks, (n as u64).pow(k as u32));
        assert!(c.partitions.iter().all(|p| p.sn_star <= p.sn));
    }
}

#[test]
fn noncrossing_star_walks_reverse_every_block() {
    for (n, k) in [(10, 4), (10, 6)] {
        let c = classify_tuples(n, k).unwrap();
        for p in c.partitions.iter().filter(|p| !p.crossing) {
            assert!(
                p.block_reversed.iter().all(|&r| r == p.sn_star),
                "{}",
                p.partition
            );
            let full = k / 2;
            assert_eq!(
                p.m_histogram.iter().sum::<u64>(),
                p.m_histogram[full],
                "{}",
                p.partition
            );
        }
    }
}

#[test]
fn height_lemma_holds_exhaustively() {
    for (n, k) in [(10, 4), (8, 6), (20, 2)] {
        let r = check_height_lemma(n, k).unwrap();
        assert!(r.passed && r.violations == 0, "{r:?}");
        assert!(r.checked > 0);
    }
}

#[test]
fn shared_cells_above_height_become_rare() {
    let p: PairPartition = "1-3,2-4".parse().unwrap();
    let frac = |n| {
        let c = classify_tuples(n, 4).unwrap();
        let e = c.get(&p).unwrap();
        e.m_histogram[1..].iter().sum::<u64>() as f64 / e.sn_star as f64
    };
    let (a, b, c) = (frac(10), frac(20), frac(40));
    assert!(a > b && b > c, "{a} {b} {c}");
}

#[test]
fn crossing_block_ratio_decays_at_k4() {
    let p: PairPartition = "1-3,2-4".parse().unwrap();
    for block in [(1, 3), (2, 4)] {
        let r = check_excess_crossing_decay(&[10, 20, 40], &p, block, &OracleThresholds::default())
            .unwrap();
        assert!(r.passed && r.strictly_decreasing && r.halved, "{r:?}");
    }
    let nc: PairPartition = "1-2,3-4".parse().unwrap();
    assert!(
        check_excess_crossing_decay(&[10, 20], &nc, (1, 2), &OracleThresholds::default()).is_err()
    );
}

#[test]
fn pair_partition_lists_agree() {
    let c = classify_tuples(4, 6).unwrap();
    let listed: Vec<_> = c.partitions.iter().map(|p| p.partition.clone()).collect();
    assert_eq!(listed, enumerate_pair_partitions(6).unwrap());
}
