//! Curie-Weiss spins: exact magnetization law, finite-n covariance and the
//! limiting correlation with its transition at `beta = 1`.
//!
//! The limiting magnetization `m(beta)` is taken as the positive root of the
//! mean-field equation `m = tanh(beta * m)`; it is 0 for `beta <= 1`, increases
//! on `(1, inf)` and tends to 1.

use rand::seq::index;
use rand::Rng;

use crate::error::{invalid, Result};
use crate::seed;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurieWeissParams {
    pub beta: f64,
    pub n: usize,
}

impl CurieWeissParams {
    pub fn new(beta: f64, n: usize) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return invalid(format!(
                "inverse temperature must be positive and finite, got {beta}"
            ));
        }
        if n == 0 {
            return invalid("Curie-Weiss model needs n >= 1 spins");
        }
        Ok(Self { beta, n })
    }
}

/// Law of the number `j` of up spins, reported as total spin `s = 2j - n`.
#[derive(Clone, Debug, PartialEq)]
pub struct MagnetizationLaw {
    pub n: usize,
    /// `(total_spin, probability)` for `j = 0, ..., n`.
    pub levels: Vec<(i64, f64)>,
}

/// `P(j) ∝ binom(n, j) * exp(beta * (2j - n)^2 / (2n))`, normalized in the log
/// domain. Weights are computed for `j <= n/2` and mirrored, so the law is
/// exactly symmetric under `s -> -s`.
pub fn magnetization_levels(p: CurieWeissParams) -> MagnetizationLaw {
    let n = p.n;
    let half = n / 2;
    let mut log_w = Vec::with_capacity(n + 1);
    let mut log_binom = 0.0_f64;
    for j in 0..=half {
        let s = (2 * j) as f64 - n as f64;
        log_w.push(log_binom + p.beta * s * s / (2.0 * n as f64));
        log_binom += ((n - j) as f64).ln() - ((j + 1) as f64).ln();
    }
    for j in half + 1..=n {
        log_w.push(log_w[n - j]);
    }
    let max = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = log_w.iter().map(|&l| (l - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    let levels = weights
        .iter()
        .enumerate()
        .map(|(j, &w)| (2 * j as i64 - n as i64, w / total))
        .collect();
    MagnetizationLaw { n, levels }
}

/// `Cov(x(1), x(2)) = n/(n-1) E[m_n^2] - 1/(n-1)` from the exact level law.
pub fn exact_cn(p: CurieWeissParams) -> Result<f64> {
    let n = p.n;
    if n < 2 {
        return invalid("covariance needs two spins (n >= 2)");
    }
    let law = magnetization_levels(p);
    let nf = n as f64;
    let second: f64 = law
        .levels
        .iter()
        .map(|&(s, prob)| prob * (s as f64 / nf).powi(2))
        .sum();
    Ok((nf * second - 1.0) / (nf - 1.0))
}

/// Positive root of `m = tanh(beta m)` for `beta > 1`, else 0.
pub fn spontaneous_magnetization(beta: f64) -> f64 {
    if beta <= 1.0 {
        return 0.0;
    }
    const TOL: f64 = 1e-13;
    // From m = 1 the iteration decreases monotonically onto the positive root.
    let mut m = 1.0_f64;
    for _ in 0..500 {
        let next = (beta * m).tanh();
        let step = (m - next).abs();
        m = next;
        let contraction = beta * (1.0 - m * m);
        if contraction < 1.0 && step * contraction / (1.0 - contraction) < TOL {
            return m;
        }
    }
    // slow contraction near the critical point
    let f = |m: f64| (beta * m).tanh() - m;
    // f > 0 on (0, root) and f < 0 on (root, 1]
    let (mut lo, mut hi) = (0.0, 1.0);
    while hi - lo > 1e-15 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Limiting same-diagonal correlation `c(beta)`: 0 for `beta <= 1`, `m(beta)^2` above.
pub fn limiting_c(beta: f64) -> f64 {
    spontaneous_magnetization(beta).powi(2)
}

/// Exact sampler for one `(n, beta)`: draws a level by inverse CDF, then picks
/// which `j` coordinates are up uniformly at random.
#[derive(Clone, Debug)]
pub struct SpinSampler {
    n: usize,
    cdf: Vec<f64>,
}

impl SpinSampler {
    pub fn new(p: CurieWeissParams) -> Self {
        let law = magnetization_levels(p);
        let mut acc = 0.0;
        let cdf = law
            .levels
            .iter()
            .map(|&(_, prob)| {
                acc += prob;
                acc
            })
            .collect();
        Self { n: p.n, cdf }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of up spins for a uniform draw `u` in `[0, 1)`.
    pub fn level_for(&self, u: f64) -> usize {
        self.cdf.partition_point(|&c| c <= u).min(self.n)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<i8> {
        let up = self.level_for(rng.random::<f64>());
        let mut spins = vec![-1_i8; self.n];
        for idx in index::sample(rng, self.n, up).iter() {
            spins[idx] = 1;
        }
        spins
    }
}

pub fn sample_spins(p: CurieWeissParams, rng_seed: u64) -> Vec<i8> {
    SpinSampler::new(p).sample(&mut seed::stream_rng(rng_seed, &[]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(beta: f64, n: usize) -> CurieWeissParams {
        CurieWeissParams::new(beta, n).unwrap()
    }

    #[test]
    fn rejects_bad_params() {
        assert!(CurieWeissParams::new(0.0, 3).is_err());
        assert!(CurieWeissParams::new(-1.0, 3).is_err());
        assert!(CurieWeissParams::new(f64::NAN, 3).is_err());
        assert!(CurieWeissParams::new(1.0, 0).is_err());
        assert!(exact_cn(params(1.0, 1)).is_err());
    }

    #[test]
    fn two_spin_law() {
        let beta = 0.8_f64;
        let law = magnetization_levels(params(beta, 2));
        let z = 2.0 * beta.exp() + 2.0;
        let expected = [(-2, beta.exp() / z), (0, 2.0 / z), (2, beta.exp() / z)];
        for ((s, p), (es, ep)) in law.levels.iter().zip(expected) {
            assert_eq!(*s, es);
            assert!((p - ep).abs() < 1e-15);
        }
    }

    #[test]
    fn one_spin_is_fair() {
        let law = magnetization_levels(params(3.0, 1));
        assert_eq!(law.levels, vec![(-1, 0.5), (1, 0.5)]);
    }

    #[test]
    fn tiny_beta_is_binomial() {
        let n = 10;
        let law = magnetization_levels(params(1e-12, n));
        let mut binom = 1.0;
        for (j, &(_, p)) in law.levels.iter().enumerate() {
            assert!((p - binom / 1024.0).abs() < 1e-12, "j = {j}");
            binom = binom * (n - j) as f64 / (j + 1) as f64;
        }
    }

    #[test]
    fn law_is_normalized_and_symmetric_at_scale() {
        let law = magnetization_levels(params(2.5, 100_000));
        let total: f64 = law.levels.iter().map(|l| l.1).sum();
        assert!((total - 1.0).abs() < 1e-12);
        let n = law.levels.len();
        for j in 0..n {
            assert_eq!(law.levels[j].1, law.levels[n - 1 - j].1);
            assert!(law.levels[j].1.is_finite() && law.levels[j].1 >= 0.0);
        }
    }

    #[test]
    fn covariance_limits() {
        assert!(exact_cn(params(1e-14, 50)).unwrap().abs() < 1e-12);
        let c = exact_cn(params(2.0, 1000)).unwrap();
        assert!((c - limiting_c(2.0)).abs() < 0.05);
    }

    #[test]
    fn magnetization_near_critical_point() {
        assert_eq!(limiting_c(1.0), 0.0);
        assert_eq!(limiting_c(0.5), 0.0);
        let m = spontaneous_magnetization(1.0001);
        assert!(m > 0.0 && m < 0.03, "{m}");
        assert!(((1.0001 * m).tanh() - m).abs() < 1e-13);
        assert!(limiting_c(50.0) >= 1.0 - 1e-12);
    }

    #[test]
    fn level_lookup_covers_the_support() {
        let s = SpinSampler::new(params(1.0, 4));
        assert_eq!(s.level_for(0.0), 0);
        assert_eq!(s.level_for(0.999_999_999_999), 4);
    }

    #[test]
    fn samples_have_drawn_number_of_up_spins() {
        let p = params(1.7, 37);
        let s = SpinSampler::new(p);
        let mut rng = seed::stream_rng(3, &[]);
        for _ in 0..200 {
            let v = s.sample(&mut rng);
            assert_eq!(v.len(), 37);
            assert!(v.iter().all(|&x| x == 1 || x == -1));
        }
        assert_eq!(sample_spins(p, 9), sample_spins(p, 9));
    }
}
