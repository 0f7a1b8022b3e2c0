use corrdiag::partitions::{enumerate_pair_partitions, PairPartition};
use corrdiag::toeplitz_volume::solve_partition_system;
use proptest::prelude::*;

/// A uniformly shuffled pairing of {1..k}: consecutive entries of a permutation.
fn pairing() -> impl Strategy<Value = PairPartition> {
    (1usize..=7)
        .prop_flat_map(|half| Just((1..=2 * half).collect::<Vec<_>>()).prop_shuffle())
        .prop_map(|perm| {
            let blocks = perm.chunks(2).map(|c| (c[0].min(c[1]), c[0].max(c[1])));
            PairPartition::new(perm.len(), blocks).unwrap()
        })
}

fn crosses(p: &PairPartition) -> bool {
    let b = p.blocks();
    b.iter()
        .any(|&(a, c)| b.iter().any(|&(x, y)| a < x && x < c && c < y))
}

proptest! {
    #[test]
    fn full_height_iff_noncrossing(p in pairing()) {
        prop_assert_eq!(p.height() == p.k() / 2, !crosses(&p));
        prop_assert_eq!(p.is_crossing(), crosses(&p));
    }

    #[test]
    fn reflection_preserves_structure(p in pairing()) {
        let r = p.reflect();
        prop_assert_eq!(r.height(), p.height());
        prop_assert_eq!(r.is_crossing(), p.is_crossing());
        prop_assert_eq!(r.reflect(), p);
    }

    #[test]
    fn text_round_trip(p in pairing()) {
        let back: PairPartition = p.to_string().parse().unwrap();
        prop_assert_eq!(back, p);
    }

    #[test]
    fn back_substitution_solves_every_block(p in pairing(), seed in any::<u64>()) {
        let sys = solve_partition_system(&p);
        prop_assert_eq!(sys.free_vars.len(), p.k() / 2 + 1);
        let mut state = seed | 1;
        for _ in 0..100 {
            let free: Vec<f64> = sys
                .free_vars
                .iter()
                .map(|_| {
                    state ^= state << 13;
                    state ^= state >> 7;
                    state ^= state << 17;
                    (state >> 11) as f64 / (1u64 << 53) as f64
                })
                .collect();
            let x = sys.substitute(&free);
            for r in sys.residuals(&x) {
                prop_assert!(r.abs() < 1e-12, "residual {r} for {p}");
            }
        }
    }

    #[test]
    fn constant_assignment_is_feasible(p in pairing(), t in 0.0f64..=1.0) {
        let sys = solve_partition_system(&p);
        let free = vec![t; sys.free_vars.len()];
        prop_assert!(sys.feasible(&free));
        prop_assert!(sys.substitute(&free).iter().all(|&x| (x - t).abs() < 1e-12));
    }
}

#[test]
fn every_pairing_up_to_twelve() {
    for k in (2..=12).step_by(2) {
        for p in enumerate_pair_partitions(k).unwrap() {
            assert_eq!(p.height() == k / 2, !crosses(&p), "{p}");
            assert_eq!(p.reflect().height(), p.height(), "{p}");
        }
    }
}
