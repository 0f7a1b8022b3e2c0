//! Eigenvalues, empirical spectral moments, histograms and ensemble runs.

use std::io::Write;

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;

use crate::eigen;
use crate::error::{invalid, Result};
use crate::field_sampler::{DiagonalSampler, GeneratorSpec, SymmetricMatrix};
use crate::seed;

/// Largest moment order handled by the direct trace route.
pub const MAX_TRACE_K: usize = 12;
/// Largest dimension handled by the direct trace route.
pub const MAX_TRACE_N: usize = 500;

/// Sorted eigenvalues of one matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralSample {
    pub n: usize,
    pub eigenvalues: Vec<f64>,
}

pub fn eigenvalues_symmetric(m: &SymmetricMatrix) -> Result<SpectralSample> {
    if let Some(x) = m.as_slice().iter().find(|x| !x.is_finite()) {
        return invalid(format!("matrix has a non-finite entry {x}"));
    }
    Ok(SpectralSample {
        n: m.n(),
        eigenvalues: eigen::symmetric_eigenvalues(m.as_slice(), m.n())?,
    })
}

/// `|sum(lambda) - tr(M)|` and `|sum(lambda^2) - ||M||_F^2|`.
pub fn identity_gaps(s: &SpectralSample, m: &SymmetricMatrix) -> (f64, f64) {
    let sum: f64 = s.eigenvalues.iter().sum();
    let sum_sq: f64 = s.eigenvalues.iter().map(|x| x * x).sum();
    ((sum - m.trace()).abs(), (sum_sq - m.frobenius_sq()).abs())
}

/// Largest `||M v - lambda v|| / ||M||_F` over `count` randomly chosen
/// eigenvalues, with `v` obtained by inverse iteration at the eigenvalue.
pub fn residual_spot_check(
    m: &SymmetricMatrix,
    s: &SpectralSample,
    count: usize,
    rng_seed: u64,
) -> f64 {
    let n = m.n();
    if n == 0 {
        return 0.0;
    }
    let mut rng = seed::stream_rng(rng_seed, &[]);
    let dense = DMatrix::from_row_slice(n, n, m.as_slice());
    let norm = m.frobenius_sq().sqrt().max(f64::MIN_POSITIVE);
    (0..count)
        .map(|_| {
            let lambda = s.eigenvalues[rng.random_range(0..n)];
            let mut v = nalgebra::DVector::from_fn(n, |_, _| rng.random::<f64>() - 0.5);
            let mut shift = lambda;
            let mut bump = norm * 1e-14;
            for _ in 0..3 {
                let shifted = &dense - DMatrix::identity(n, n) * shift;
                match shifted.lu().solve(&v) {
                    Some(x) if x.iter().all(|t| t.is_finite()) && x.norm() > 0.0 => {
                        v = x.normalize()
                    }
                    _ => {
                        // exactly singular at this shift; step off the eigenvalue
                        shift = lambda + bump;
                        bump *= 10.0;
                    }
                }
            }
            let v = v.normalize();
            (&dense * &v - &v * lambda).norm() / norm
        })
        .fold(0.0, f64::max)
}

/// `m_k = (1/n) sum lambda^k` for `k = 1..=max_k` (index `k - 1`).
pub fn empirical_moments(s: &SpectralSample, max_k: usize) -> Result<Vec<f64>> {
    if max_k == 0 {
        return invalid("moment order K must be >= 1");
    }
    let mut sums = vec![0.0; max_k];
    for &x in &s.eigenvalues {
        let mut power = 1.0;
        for sum in sums.iter_mut() {
            power *= x;
            *sum += power;
        }
    }
    let n = s.n.max(1) as f64;
    Ok(sums.into_iter().map(|t| t / n).collect())
}

fn matmul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        let row = &mut out[i * n..(i + 1) * n];
        for l in 0..n {
            let ail = a[i * n + l];
            if ail == 0.0 {
                continue;
            }
            for (o, &blj) in row.iter_mut().zip(&b[l * n..(l + 1) * n]) {
                *o += ail * blj;
            }
        }
    }
    out
}

/// `(1/n) tr(M^k)` by repeated matrix products, independent of the eigensolver.
pub fn trace_moment_direct(m: &SymmetricMatrix, k: usize) -> Result<f64> {
    let n = m.n();
    if k == 0 || k > MAX_TRACE_K {
        return invalid(format!(
            "trace route supports 1 <= k <= {MAX_TRACE_K}, got {k}"
        ));
    }
    if n == 0 || n > MAX_TRACE_N {
        return invalid(format!(
            "trace route supports 1 <= n <= {MAX_TRACE_N}, got {n}"
        ));
    }
    if k == 1 {
        return Ok(m.trace() / n as f64);
    }
    // tr(M^k) = tr(P Q) with P = M^(k/2), Q = M^(k - k/2)
    let base = m.as_slice();
    let mut half = base.to_vec();
    for _ in 1..k / 2 {
        half = matmul(&half, base, n);
    }
    let other = if k.is_multiple_of(2) {
        half.clone()
    } else {
        matmul(&half, base, n)
    };
    // tr(P Q) = sum_ij P_ij Q_ji, and Q is symmetric
    let tr: f64 = half.iter().zip(&other).map(|(p, q)| p * q).sum();
    Ok(tr / n as f64)
}

/// Fixed-width histogram with underflow and overflow counts.
#[derive(Clone, Debug, PartialEq)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
    pub underflow: u64,
    pub overflow: u64,
}

impl Histogram {
    pub fn new(lo: f64, hi: f64, bins: usize) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() || lo >= hi {
            return invalid(format!(
                "histogram range [{lo}, {hi}] is empty or not finite"
            ));
        }
        if bins == 0 {
            return invalid("histogram needs at least one bin");
        }
        Ok(Self {
            lo,
            hi,
            counts: vec![0; bins],
            underflow: 0,
            overflow: 0,
        })
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.counts.len() as f64
    }

    pub fn add(&mut self, x: f64) {
        if x < self.lo {
            self.underflow += 1;
        } else if x >= self.hi {
            self.overflow += 1;
        } else {
            let last = self.counts.len() - 1;
            let bin = ((x - self.lo) / self.width()) as usize;
            self.counts[bin.min(last)] += 1;
        }
    }

    pub fn merge(&mut self, other: &Histogram) {
        assert!(
            self.lo == other.lo && self.hi == other.hi && self.counts.len() == other.counts.len()
        );
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.underflow += other.underflow;
        self.overflow += other.overflow;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.underflow + self.overflow
    }

    /// CSV with columns `bin_left,bin_right,count,density`; underflow and
    /// overflow rows use infinite edges and density 0.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        let total = self.total().max(1) as f64;
        let width = self.width();
        writeln!(w, "bin_left,bin_right,count,density")?;
        writeln!(w, "-inf,{},{},0", self.lo, self.underflow)?;
        for (i, &c) in self.counts.iter().enumerate() {
            let left = self.lo + i as f64 * width;
            let right = if i + 1 == self.counts.len() {
                self.hi
            } else {
                left + width
            };
            writeln!(w, "{left},{right},{c},{}", c as f64 / (total * width))?;
        }
        writeln!(w, "{},inf,{},0", self.hi, self.overflow)?;
        Ok(())
    }
}

/// Neumaier-compensated sum.
pub fn compensated_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0_f64, 0.0_f64);
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Mean and standard error of the mean.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = compensated_sum(xs.iter().copied()) / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = compensated_sum(xs.iter().map(|x| (x - mean).powi(2))) / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnsembleConfig {
    pub n: usize,
    pub generator: GeneratorSpec,
    pub realizations: usize,
    pub max_k: usize,
    pub bins: usize,
    pub range: (f64, f64),
}

impl EnsembleConfig {
    pub fn new(n: usize, generator: GeneratorSpec, realizations: usize) -> Self {
        Self {
            n,
            generator,
            realizations,
            max_k: 12,
            bins: 100,
            range: (-5.0, 5.0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentEstimate {
    pub k: usize,
    pub mean: f64,
    /// Standard error across realizations.
    pub se: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleStats {
    pub n: usize,
    pub realizations: usize,
    pub moments: Vec<MomentEstimate>,
    pub histogram: Histogram,
    /// `per_realization[t][k - 1]` is `m_k` of realization `t`.
    pub per_realization: Vec<Vec<f64>>,
}

impl EnsembleStats {
    pub fn moment(&self, k: usize) -> &MomentEstimate {
        &self.moments[k - 1]
    }

    /// Aggregates per-realization moment vectors and histograms.
    pub fn aggregate(n: usize, per_realization: Vec<Vec<f64>>, histograms: &[Histogram]) -> Self {
        let max_k = per_realization.first().map_or(0, Vec::len);
        let moments = (1..=max_k)
            .map(|k| {
                let xs: Vec<f64> = per_realization.iter().map(|m| m[k - 1]).collect();
                let (mean, se) = mean_and_se(&xs);
                MomentEstimate { k, mean, se }
            })
            .collect();
        let mut histogram = histograms[0].clone();
        for h in &histograms[1..] {
            histogram.merge(h);
        }
        Self {
            n,
            realizations: per_realization.len(),
            moments,
            histogram,
            per_realization,
        }
    }
}

/// Simulates `realizations` independent matrices; realization `t` uses the
/// generator streams with index `t`.
pub fn run_ensemble(cfg: &EnsembleConfig) -> Result<EnsembleStats> {
    if cfg.realizations == 0 {
        return invalid("ensemble needs at least one realization");
    }
    if cfg.n == 0 {
        return invalid("matrix dimension must be >= 1");
    }
    let sampler = DiagonalSampler::new(cfg.generator, cfg.n)?;
    let empty = Histogram::new(cfg.range.0, cfg.range.1, cfg.bins)?;
    let results: Vec<(Vec<f64>, Histogram)> = (0..cfg.realizations as u64)
        .into_par_iter()
        .map(|t| {
            let m = sampler.build_matrix(cfg.n, t);
            let s = eigenvalues_symmetric(&m)?;
            let mut h = empty.clone();
            s.eigenvalues.iter().for_each(|&x| h.add(x));
            Ok((empirical_moments(&s, cfg.max_k)?, h))
        })
        .collect::<Result<_>>()?;
    let (per_realization, histograms): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    Ok(EnsembleStats::aggregate(
        cfg.n,
        per_realization,
        &histograms,
    ))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConcentrationReport {
    pub k: usize,
    /// `(n, estimated E[(tr X^k - mean)^4])`
    pub points: Vec<(usize, f64)>,
    pub slope: f64,
    pub max_slope: f64,
    /// Every fourth moment is at rounding level relative to the trace, so the
    /// trace is deterministic and the slope carries no information.
    pub degenerate: bool,
    pub passed: bool,
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let m = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / m;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Fourth central moment of `tr(X_n^k)` across realizations for each `n`,
/// and the log-log growth rate, which should not exceed `max_slope`.
pub fn concentration_probe(
    ns: &[usize],
    g: GeneratorSpec,
    k: usize,
    realizations: usize,
    max_slope: f64,
) -> Result<ConcentrationReport> {
    if ns.len() < 3 {
        return invalid("concentration probe needs at least 3 dimensions");
    }
    if realizations < 200 {
        return invalid("concentration probe needs at least 200 realizations");
    }
    if k == 0 {
        return invalid("moment order k must be >= 1");
    }
    let mut points = Vec::with_capacity(ns.len());
    let mut degenerate = true;
    for &n in ns {
        let sampler = DiagonalSampler::new(g, n)?;
        let traces: Vec<f64> = (0..realizations as u64)
            .into_par_iter()
            .map(|t| {
                let s = eigenvalues_symmetric(&sampler.build_matrix(n, t))?;
                Ok(compensated_sum(
                    s.eigenvalues.iter().map(|x| x.powi(k as i32)),
                ))
            })
            .collect::<Result<_>>()?;
        let mean = compensated_sum(traces.iter().copied()) / traces.len() as f64;
        let fourth =
            compensated_sum(traces.iter().map(|x| (x - mean).powi(4))) / traces.len() as f64;
        degenerate &= fourth <= (1e-10 * mean.abs().max(1.0)).powi(4);
        points.push((n, fourth));
    }
    let slope = log_log_slope(
        &points
            .iter()
            .map(|&(n, y)| (n as f64, y))
            .collect::<Vec<_>>(),
    );
    Ok(ConcentrationReport {
        k,
        points,
        slope,
        max_slope,
        degenerate,
        passed: degenerate || slope <= max_slope,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field_sampler::{build_matrix, GeneratorKind};

    #[test]
    fn exchange_matrix() {
        let m = SymmetricMatrix::from_upper(2, &[0.0, 1.0, 0.0]).unwrap();
        let s = eigenvalues_symmetric(&m).unwrap();
        assert!((s.eigenvalues[0] + 1.0).abs() < 1e-15);
        assert!((s.eigenvalues[1] - 1.0).abs() < 1e-15);
        let mom = empirical_moments(&s, 2).unwrap();
        assert!(mom[0].abs() < 1e-15);
        assert!((mom[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn scaled_exchange_moments() {
        let r = 0.5_f64.sqrt();
        let m = SymmetricMatrix::from_upper(2, &[0.0, r, 0.0]).unwrap();
        let s = eigenvalues_symmetric(&m).unwrap();
        let mom = empirical_moments(&s, 2).unwrap();
        assert!(mom[0].abs() < 1e-15);
        assert!((mom[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn non_finite_rejected() {
        let m = SymmetricMatrix::from_upper(2, &[0.0, f64::NAN, 0.0]).unwrap();
        assert!(eigenvalues_symmetric(&m).is_err());
    }

    #[test]
    fn trace_route_guards_and_small_cases() {
        let g = GeneratorSpec::new(GeneratorKind::Independent, 1).unwrap();
        let m = build_matrix(20, g, 0).unwrap();
        assert!(trace_moment_direct(&m, 0).is_err());
        assert!(trace_moment_direct(&m, 13).is_err());
        let big = build_matrix(501, g, 0).unwrap();
        assert!(trace_moment_direct(&big, 2).is_err());
        assert!((trace_moment_direct(&m, 1).unwrap() - m.trace() / 20.0).abs() < 1e-15);
        assert!((trace_moment_direct(&m, 2).unwrap() - m.frobenius_sq() / 20.0).abs() < 1e-13);
    }

    #[test]
    fn histogram_counts_everything() {
        let mut h = Histogram::new(-1.0, 1.0, 4).unwrap();
        for x in [-2.0, -1.0, -0.5, 0.0, 0.99, 1.0, 7.0] {
            h.add(x);
        }
        assert_eq!(h.underflow, 1);
        assert_eq!(h.overflow, 2);
        assert_eq!(h.counts, vec![1, 1, 1, 1]);
        assert_eq!(h.total(), 7);
        let mut buf = Vec::new();
        h.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 4 + 2);
        assert!(text.starts_with("bin_left,bin_right,count,density\n-inf,-1,1,0\n"));
        assert!(Histogram::new(1.0, 1.0, 3).is_err());
        assert!(Histogram::new(0.0, 1.0, 0).is_err());
    }

    #[test]
    fn compensated_sum_handles_cancellation() {
        let xs = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(xs), 2.0);
    }

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = [10.0, 20.0, 40.0]
            .iter()
            .map(|&x: &f64| (x, 3.0 * x.powi(2)))
            .collect();
        assert!((log_log_slope(&pts) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn ensemble_rejects_bad_config() {
        let g = GeneratorSpec::new(GeneratorKind::Independent, 1).unwrap();
        assert!(run_ensemble(&EnsembleConfig::new(10, g, 0)).is_err());
        assert!(concentration_probe(&[10, 20], g, 2, 200, 2.5).is_err());
        assert!(concentration_probe(&[10, 20, 40], g, 2, 100, 2.5).is_err());
    }

    #[test]
    fn single_dimension_ensemble() {
        let g = GeneratorSpec::new(GeneratorKind::Independent, 1).unwrap();
        let stats = run_ensemble(&EnsembleConfig::new(1, g, 3)).unwrap();
        assert_eq!(stats.histogram.total(), 3);
        assert_eq!(stats.moments.len(), 12);
    }
}
