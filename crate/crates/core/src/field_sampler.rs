//! Diagonal processes and the scaled symmetric matrix they fill.
//!
//! Diagonal `r` of realization `t` is drawn from its own stream seeded with
//! `derive_seed(base, [t, r])`, so diagonals are independent and any subset of
//! them can be regenerated in any order. Entries on every diagonal, the main
//! one included, have mean 0 and variance 1; entry `(p, p + r)` of the matrix
//! is `a(p, p + r) / sqrt(n)`.
//!
//! Normal variates come from `rand_distr::StandardNormal` (ziggurat) on a
//! `ChaCha8Rng`; results are bit-reproducible for fixed crate versions.
//!
//! Curie-Weiss diagonals of length `L` are `L`-spin Curie-Weiss vectors, so
//! their same-diagonal covariance is `exact_cn(L, beta)` and varies with `r`;
//! all of them share the limit `limiting_c(beta)`.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::curie_weiss::{exact_cn, CurieWeissParams, SpinSampler};
use crate::error::{invalid, Result};
use crate::seed;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GeneratorKind {
    Independent,
    Equicorrelated(f64),
    CurieWeiss(f64),
    Toeplitz,
}

impl fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeneratorKind::Independent => write!(f, "independent"),
            GeneratorKind::Equicorrelated(c) => write!(f, "equicorrelated(c={c})"),
            GeneratorKind::CurieWeiss(beta) => write!(f, "curie-weiss(beta={beta})"),
            GeneratorKind::Toeplitz => write!(f, "toeplitz"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn new(kind: GeneratorKind, seed: u64) -> Result<Self> {
        match kind {
            GeneratorKind::Equicorrelated(c) if !(0.0..=1.0).contains(&c) => invalid(format!(
                "equicorrelated generator needs c in [0, 1], got {c}"
            )),
            GeneratorKind::CurieWeiss(beta) => {
                CurieWeissParams::new(beta, 1)?;
                Ok(Self { kind, seed })
            }
            _ => Ok(Self { kind, seed }),
        }
    }

    /// Covariance of two distinct entries on a diagonal of length `len >= 2`.
    pub fn same_diagonal_covariance(&self, len: usize) -> Result<f64> {
        if len < 2 {
            return invalid("a diagonal of length < 2 has no covariance");
        }
        Ok(match self.kind {
            GeneratorKind::Independent => 0.0,
            GeneratorKind::Equicorrelated(c) => c,
            GeneratorKind::CurieWeiss(beta) => exact_cn(CurieWeissParams::new(beta, len)?)?,
            GeneratorKind::Toeplitz => 1.0,
        })
    }

    pub fn diagonal_seed(&self, realization: u64, offset: usize) -> u64 {
        seed::derive_seed(self.seed, &[realization, offset as u64])
    }
}

/// A generator prepared for diagonals up to a given length. Curie-Weiss level
/// laws are built once per length and reused across realizations.
#[derive(Clone, Debug)]
pub struct DiagonalSampler {
    spec: GeneratorSpec,
    spins: BTreeMap<usize, SpinSampler>,
}

impl DiagonalSampler {
    /// Prepares lengths `1..=max_len`.
    pub fn new(spec: GeneratorSpec, max_len: usize) -> Result<Self> {
        Self::for_lengths(spec, 1..=max_len)
    }

    pub fn for_lengths(
        spec: GeneratorSpec,
        lengths: impl IntoIterator<Item = usize>,
    ) -> Result<Self> {
        let spec = GeneratorSpec::new(spec.kind, spec.seed)?;
        let mut spins = BTreeMap::new();
        if let GeneratorKind::CurieWeiss(beta) = spec.kind {
            let lengths: Vec<usize> = lengths.into_iter().collect();
            let built: Vec<(usize, SpinSampler)> = lengths
                .par_iter()
                .map(|&len| Ok((len, SpinSampler::new(CurieWeissParams::new(beta, len)?))))
                .collect::<Result<_>>()?;
            spins.extend(built);
        }
        Ok(Self { spec, spins })
    }

    pub fn spec(&self) -> &GeneratorSpec {
        &self.spec
    }

    /// One diagonal of length `len` (unscaled entries).
    pub fn sample<R: Rng + ?Sized>(&self, len: usize, rng: &mut R) -> Vec<f64> {
        match self.spec.kind {
            GeneratorKind::Independent => (0..len).map(|_| rng.sample(StandardNormal)).collect(),
            GeneratorKind::Equicorrelated(c) => {
                let shared: f64 = rng.sample(StandardNormal);
                let (a, b) = (c.sqrt(), (1.0 - c).sqrt());
                (0..len)
                    .map(|_| a * shared + b * rng.sample::<f64, _>(StandardNormal))
                    .collect()
            }
            GeneratorKind::CurieWeiss(_) => {
                let sampler = self
                    .spins
                    .get(&len)
                    .unwrap_or_else(|| panic!("Curie-Weiss law for length {len} was not prepared"));
                sampler.sample(rng).into_iter().map(f64::from).collect()
            }
            GeneratorKind::Toeplitz => {
                let value: f64 = rng.sample(StandardNormal);
                vec![value; len]
            }
        }
    }

    /// Diagonal `offset` of realization `realization` of an `n x n` matrix.
    pub fn diagonal(&self, n: usize, realization: u64, offset: usize) -> Vec<f64> {
        let mut rng = seed::stream_rng(self.spec.seed, &[realization, offset as u64]);
        self.sample(n - offset, &mut rng)
    }

    pub fn build_matrix(&self, n: usize, realization: u64) -> SymmetricMatrix {
        let scale = 1.0 / (n as f64).sqrt();
        let diagonals: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|r| self.diagonal(n, realization, r))
            .collect();
        let mut data = vec![0.0; n * n];
        for (r, diag) in diagonals.iter().enumerate() {
            for (p, &a) in diag.iter().enumerate() {
                let v = a * scale;
                data[p * n + p + r] = v;
                data[(p + r) * n + p] = v;
            }
        }
        SymmetricMatrix { n, data }
    }
}

/// Diagonal `offset` of length `len`, drawn from the stream of `realization`.
pub fn sample_diagonal(
    g: GeneratorSpec,
    offset: usize,
    len: usize,
    realization: u64,
) -> Result<Vec<f64>> {
    if len == 0 {
        return invalid("diagonal length must be >= 1");
    }
    let sampler = DiagonalSampler::for_lengths(g, [len])?;
    let mut rng = seed::stream_rng(g.seed, &[realization, offset as u64]);
    Ok(sampler.sample(len, &mut rng))
}

pub fn build_matrix(n: usize, g: GeneratorSpec, realization: u64) -> Result<SymmetricMatrix> {
    if n == 0 {
        return invalid("matrix dimension must be >= 1");
    }
    Ok(DiagonalSampler::new(g, n)?.build_matrix(n, realization))
}

/// Dense symmetric matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymmetricMatrix {
    /// Builds from the upper triangle given row by row (`n(n+1)/2` values).
    pub fn from_upper(n: usize, upper: &[f64]) -> Result<Self> {
        if upper.len() != n * (n + 1) / 2 {
            return invalid(format!(
                "upper triangle of a {n}x{n} matrix has {} entries, got {}",
                n * (n + 1) / 2,
                upper.len()
            ));
        }
        let mut data = vec![0.0; n * n];
        let mut it = upper.iter();
        for p in 0..n {
            for q in p..n {
                let v = *it.next().expect("length checked");
                data[p * n + q] = v;
                data[q * n + p] = v;
            }
        }
        Ok(Self { n, data })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = vec![0.0; n * n];
        for p in 0..n {
            for q in p..n {
                let v = f(p, q);
                data[p * n + q] = v;
                data[q * n + p] = v;
            }
        }
        Self { n, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, p: usize, q: usize) -> f64 {
        self.data[p * self.n + q]
    }

    pub fn row(&self, p: usize) -> &[f64] {
        &self.data[p * self.n..(p + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|p| self.get(p, p)).sum()
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }

    /// Binary dump: `n` as little-endian `u64`, then the upper triangle row by
    /// row as little-endian `f64`.
    pub fn write_upper_triangle(&self, mut w: impl Write) -> Result<()> {
        w.write_all(&(self.n as u64).to_le_bytes())?;
        for p in 0..self.n {
            for &v in &self.row(p)[p..] {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }
}

/// Empirical moments of one diagonal across independent draws.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagonalCheck {
    pub offset: usize,
    pub len: usize,
    pub mean: f64,
    pub mean_ok: bool,
    /// Second moment about zero, `E[x^2]`.
    pub variance: f64,
    pub variance_ok: bool,
    /// Empirical `Cov(a_1, a_2)` on this diagonal and its target, if `len >= 2`.
    pub same_covariance: Option<(f64, f64)>,
    pub same_covariance_ok: bool,
    /// Empirical `Cov(a_1 on r, a_1 on r + 1)`, if diagonal `r + 1` exists.
    pub cross_covariance: Option<f64>,
    pub cross_covariance_ok: bool,
}

impl DiagonalCheck {
    pub fn passed(&self) -> bool {
        self.mean_ok && self.variance_ok && self.same_covariance_ok && self.cross_covariance_ok
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionReport {
    pub generator: GeneratorKind,
    pub n: usize,
    pub draws: usize,
    /// Flags fail beyond this many standard errors.
    pub z_limit: f64,
    pub diagonals: Vec<DiagonalCheck>,
}

impl ConditionReport {
    pub fn passed(&self) -> bool {
        self.diagonals.iter().all(DiagonalCheck::passed)
    }
}

struct Moments {
    mean: f64,
    var: f64,
}

fn moments(xs: &[f64]) -> Moments {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Moments { mean, var }
}

// Covariance estimate and its standard error.
fn covariance(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let mx = moments(xs).mean;
    let my = moments(ys).mean;
    let prods: Vec<f64> = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (x - mx) * (y - my))
        .collect();
    let m = moments(&prods);
    (m.mean, (m.var / prods.len() as f64).sqrt())
}

/// Checks mean 0, variance 1, same-diagonal covariance `c_n` and cross-diagonal
/// independence on diagonals `0`, `1` and `n/2` by repeated draws. Draw `t`
/// uses the streams of realization `t`.
pub fn validate_conditions(g: GeneratorSpec, n: usize, draws: usize) -> Result<ConditionReport> {
    if draws < 1000 {
        return invalid(format!(
            "condition checks need at least 1000 draws, got {draws}"
        ));
    }
    if n == 0 {
        return invalid("matrix dimension must be >= 1");
    }
    let z_limit = 4.0;
    let mut offsets = vec![0, 1, n / 2];
    offsets.retain(|&r| r < n);
    offsets.dedup();
    let mut lengths: Vec<usize> = offsets
        .iter()
        .flat_map(|&r| [n - r, n - r - 1])
        .filter(|&l| l > 0)
        .collect();
    lengths.sort_unstable();
    lengths.dedup();
    let sampler = DiagonalSampler::for_lengths(g, lengths)?;

    let mut diagonals = Vec::new();
    for &r in &offsets {
        let len = n - r;
        let mut first = Vec::with_capacity(draws);
        let mut second = Vec::with_capacity(draws);
        let mut next_diag = Vec::with_capacity(draws);
        for t in 0..draws as u64 {
            let d = sampler.diagonal(n, t, r);
            first.push(d[0]);
            if len >= 2 {
                second.push(d[1]);
            }
            if r + 1 < n {
                next_diag.push(sampler.diagonal(n, t, r + 1)[0]);
            }
        }
        let m = moments(&first);
        let mean_ok = m.mean.abs() < z_limit / (draws as f64).sqrt();
        // second moment about zero; exactly 1 for +-1 spins
        let squares: Vec<f64> = first.iter().map(|x| x * x).collect();
        let sq = moments(&squares);
        let variance_ok = (sq.mean - 1.0).abs() <= z_limit * (sq.var / draws as f64).sqrt() + 1e-9;

        let (same_covariance, same_covariance_ok) = if len >= 2 {
            let target = g.same_diagonal_covariance(len)?;
            let (cov, se) = covariance(&first, &second);
            (
                Some((cov, target)),
                (cov - target).abs() <= z_limit * se + 1e-9,
            )
        } else {
            (None, true)
        };
        let (cross_covariance, cross_covariance_ok) = if r + 1 < n {
            let (cov, se) = covariance(&first, &next_diag);
            (Some(cov), cov.abs() <= z_limit * se + 1e-9)
        } else {
            (None, true)
        };
        diagonals.push(DiagonalCheck {
            offset: r,
            len,
            mean: m.mean,
            mean_ok,
            variance: sq.mean,
            variance_ok,
            same_covariance,
            same_covariance_ok,
            cross_covariance,
            cross_covariance_ok,
        });
    }
    Ok(ConditionReport {
        generator: g.kind,
        n,
        draws,
        z_limit,
        diagonals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(kind: GeneratorKind) -> GeneratorSpec {
        GeneratorSpec::new(kind, 42).unwrap()
    }

    #[test]
    fn rejects_out_of_range_parameters() {
        assert!(GeneratorSpec::new(GeneratorKind::Equicorrelated(1.2), 0).is_err());
        assert!(GeneratorSpec::new(GeneratorKind::Equicorrelated(-0.1), 0).is_err());
        assert!(GeneratorSpec::new(GeneratorKind::CurieWeiss(0.0), 0).is_err());
        assert!(sample_diagonal(spec(GeneratorKind::Toeplitz), 0, 0, 0).is_err());
    }

    #[test]
    fn fully_correlated_diagonal_is_constant() {
        let d = sample_diagonal(spec(GeneratorKind::Equicorrelated(1.0)), 3, 20, 7).unwrap();
        assert!(d.iter().all(|&x| x == d[0]));
        let d = sample_diagonal(spec(GeneratorKind::Toeplitz), 3, 20, 7).unwrap();
        assert!(d.iter().all(|&x| x == d[0]));
    }

    #[test]
    fn toeplitz_matrix_depends_on_offset_only() {
        let m = build_matrix(50, spec(GeneratorKind::Toeplitz), 0).unwrap();
        for p in 0..50 {
            for q in 0..50 {
                assert_eq!(m.get(p, q), m.get(0, p.abs_diff(q)));
            }
        }
    }

    #[test]
    fn one_by_one_matrix() {
        let m = build_matrix(1, spec(GeneratorKind::CurieWeiss(2.0)), 0).unwrap();
        assert!(m.get(0, 0).abs() == 1.0);
        let m = build_matrix(1, spec(GeneratorKind::Independent), 0).unwrap();
        assert!(m.get(0, 0).is_finite());
    }

    #[test]
    fn realizations_are_reproducible_and_distinct() {
        for kind in [
            GeneratorKind::Independent,
            GeneratorKind::Equicorrelated(0.3),
            GeneratorKind::CurieWeiss(1.5),
            GeneratorKind::Toeplitz,
        ] {
            let a = build_matrix(30, spec(kind), 4).unwrap();
            let b = build_matrix(30, spec(kind), 4).unwrap();
            let c = build_matrix(30, spec(kind), 5).unwrap();
            assert_eq!(a, b);
            assert_ne!(a, c);
            for p in 0..30 {
                for q in 0..30 {
                    assert_eq!(a.get(p, q).to_bits(), a.get(q, p).to_bits());
                }
            }
        }
    }

    #[test]
    fn upper_triangle_dump_layout() {
        let m = SymmetricMatrix::from_upper(2, &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(m.as_slice(), &[1.0, 2.0, 2.0, 3.0]);
        let mut buf = Vec::new();
        m.write_upper_triangle(&mut buf).unwrap();
        assert_eq!(buf.len(), 8 + 3 * 8);
        assert_eq!(&buf[..8], &2u64.to_le_bytes());
        assert_eq!(&buf[16..24], &2.0f64.to_le_bytes());
        assert!(SymmetricMatrix::from_upper(2, &[1.0]).is_err());
    }

    #[test]
    fn condition_report_needs_enough_draws() {
        assert!(validate_conditions(spec(GeneratorKind::Independent), 10, 999).is_err());
    }
}
