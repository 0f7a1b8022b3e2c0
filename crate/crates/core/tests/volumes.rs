use corrdiag::partitions::{enumerate_pair_partitions, PairPartition};
use corrdiag::toeplitz_volume::{toeplitz_volume, VolumeCache};

fn pp(s: &str) -> PairPartition {
    s.parse().unwrap()
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let n = 2000;
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n)
        .map(|i| f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 })
        .sum();
    (f(a) + f(b) + inner) * h / 3.0
}

#[test]
fn crossing_pair_matches_quadrature() {
    // P(0 <= U1 + U3 - U2 <= 1)
    let tri = |s: f64| if s <= 1.0 { s } else { 2.0 - s };
    let len = |s: f64| (s.min(1.0) - (s - 1.0).max(0.0)).max(0.0);
    let exact = simpson(|s| tri(s) * len(s), 0.0, 1.0) + simpson(|s| tri(s) * len(s), 1.0, 2.0);
    assert!((exact - 2.0 / 3.0).abs() < 1e-12);
    let v = toeplitz_volume(&pp("1-3,2-4"), 1_000_000, 42).unwrap();
    assert!((v.value - exact).abs() <= 3.0 * v.std_error, "{v:?}");
}

#[test]
fn triple_crossing_matches_quadrature() {
    let exact = simpson(|s| (1.0 - s.abs()).powi(3), -1.0, 0.0)
        + simpson(|s| (1.0 - s.abs()).powi(3), 0.0, 1.0);
    assert!((exact - 0.5).abs() < 1e-12);
    let v = toeplitz_volume(&pp("1-4,2-5,3-6"), 1_000_000, 7).unwrap();
    assert!((v.value - exact).abs() <= 3.0 * v.std_error, "{v:?}");
}

#[test]
fn sixth_toeplitz_moment() {
    // the limit law of scaled Toeplitz matrices has sixth moment 11
    let parts = enumerate_pair_partitions(6).unwrap();
    let mut cache = VolumeCache::new();
    cache.fill(&parts, 400_000, 3).unwrap();
    let (sum, var) = cache.iter().fold((0.0, 0.0), |(s, v), (_, e)| {
        (s + e.value, v + e.std_error * e.std_error)
    });
    assert!(
        (sum - 11.0).abs() <= 3.0 * var.sqrt(),
        "{sum} +/- {}",
        var.sqrt()
    );
}

#[test]
fn factorizing_pairings_share_the_crossing_value() {
    // a crossing pair next to a nearest-neighbour block has volume 2/3
    for s in ["1-2,3-5,4-6", "1-3,2-4,5-6", "1-6,2-4,3-5"] {
        let v = toeplitz_volume(&pp(s), 400_000, 11).unwrap();
        assert!(
            (v.value - 2.0 / 3.0).abs() <= 3.5 * v.std_error,
            "{s}: {v:?}"
        );
    }
}

#[test]
fn reflection_keeps_volume() {
    for p in enumerate_pair_partitions(8)
        .unwrap()
        .into_iter()
        .filter(|p| p.is_crossing())
        .step_by(9)
    {
        let a = toeplitz_volume(&p, 200_000, 5).unwrap();
        let b = toeplitz_volume(&p.reflect(), 200_000, 6).unwrap();
        let se = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
        assert!(
            (a.value - b.value).abs() <= 4.0 * se,
            "{p}: {} vs {}",
            a.value,
            b.value
        );
    }
}

#[test]
fn more_samples_agree_with_fewer() {
    let parts: Vec<_> = enumerate_pair_partitions(8)
        .unwrap()
        .into_iter()
        .filter(|p| p.is_crossing())
        .take(20)
        .collect();
    for p in parts {
        let coarse = toeplitz_volume(&p, 50_000, 1).unwrap();
        let fine = toeplitz_volume(&p, 400_000, 2).unwrap();
        let se = (coarse.std_error.powi(2) + fine.std_error.powi(2)).sqrt();
        assert!((coarse.value - fine.value).abs() <= 4.0 * se, "{p}");
        assert!(fine.std_error < coarse.std_error, "{p}");
        assert!(fine.value > 0.0 && fine.value < 1.0, "{p}");
    }
}

#[test]
fn seeded_runs_repeat() {
    let p = pp("1-4,2-6,3-5");
    assert_eq!(
        toeplitz_volume(&p, 123_457, 9).unwrap(),
        toeplitz_volume(&p, 123_457, 9).unwrap()
    );
    assert_ne!(
        toeplitz_volume(&p, 123_457, 9).unwrap().value,
        toeplitz_volume(&p, 123_457, 10).unwrap().value
    );
}

#[test]
fn cache_file_round_trip_is_lossless() {
    let parts = enumerate_pair_partitions(6).unwrap();
    let mut cache = VolumeCache::new();
    cache.fill(&parts, 10_000, 4).unwrap();
    let mut buf = Vec::new();
    cache.write_to(&mut buf).unwrap();
    let back = VolumeCache::read_from(&buf[..]).unwrap();
    assert_eq!(back.len(), 15);
    for (p, v) in cache.iter() {
        assert_eq!(back.get(p), Some(v));
    }
}
