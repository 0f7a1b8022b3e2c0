//! Moments of the limiting spectral distribution for diagonal correlation `c`.
//!
//! For even `k` the `k`-th moment is `sum_pi p_T(pi) * c^(k/2 - h(pi))` over all
//! pair partitions. Non-crossing partitions have height `k/2` and volume 1, so
//! the same value splits as `C_{k/2}` plus a sum over crossing partitions.
//! Odd moments vanish.

use std::fmt;
use std::io::Write;

use crate::error::{invalid, Error, Result};
use crate::partitions::{enumerate_pair_partitions, PairPartition};
use crate::toeplitz_volume::{toeplitz_volume, VolumeCache};

/// Largest `m` for which `catalan(m)` is computed exactly.
pub const MAX_CATALAN: u64 = 30;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MomentForm {
    CatalanPlusCrossing,
    AllPartitions,
}

impl fmt::Display for MomentForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MomentForm::CatalanPlusCrossing => "catalan_plus_crossing",
            MomentForm::AllPartitions => "all_partitions",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentValue {
    pub k: usize,
    pub c: f64,
    pub value: f64,
    pub std_error: f64,
    pub form: MomentForm,
    /// `c` lies outside `[0, 1]`; no bundled generator attains it.
    pub outside_generator_range: bool,
}

pub fn catalan(m: u64) -> Result<u64> {
    if m > MAX_CATALAN {
        return invalid(format!(
            "catalan({m}) exceeds the exact range m <= {MAX_CATALAN}"
        ));
    }
    // C_{i+1} = C_i * 2(2i+1) / (i+2), exact at every step
    let mut c: u128 = 1;
    for i in 0..m as u128 {
        c = c * 2 * (2 * i + 1) / (i + 2);
    }
    Ok(c as u64)
}

pub fn semicircle_moment(k: usize) -> f64 {
    if k % 2 == 1 {
        0.0
    } else {
        catalan(k as u64 / 2).expect("semicircle moment order within exact Catalan range") as f64
    }
}

fn weight(c: f64, p: &PairPartition) -> f64 {
    let exponent = p.k() / 2 - p.height();
    c.powi(exponent as i32)
}

/// Moment `k` of the limit law at correlation `c`.
///
/// Volumes missing from `volumes` are estimated with `samples` Monte Carlo
/// points and inserted; with `samples == 0` a missing volume is an error.
/// Terms whose weight is exactly zero (crossing partitions at `c = 0`) need no
/// volume.
pub fn nu_c_moment(
    k: usize,
    c: f64,
    volumes: &mut VolumeCache,
    samples: u64,
    seed: u64,
    form: MomentForm,
) -> Result<MomentValue> {
    if k == 0 {
        return invalid("moment order k must be >= 1");
    }
    if !c.is_finite() {
        return invalid(format!("correlation c must be finite, got {c}"));
    }
    let mut out = MomentValue {
        k,
        c,
        value: 0.0,
        std_error: 0.0,
        form,
        outside_generator_range: !(0.0..=1.0).contains(&c),
    };
    if k % 2 == 1 {
        return Ok(out);
    }

    let parts = enumerate_pair_partitions(k)?;
    let mut value = match form {
        MomentForm::CatalanPlusCrossing => catalan(k as u64 / 2)? as f64,
        MomentForm::AllPartitions => 0.0,
    };
    let mut variance = 0.0;
    for p in &parts {
        if form == MomentForm::CatalanPlusCrossing && !p.is_crossing() {
            continue;
        }
        let w = weight(c, p);
        if w == 0.0 {
            continue;
        }
        let v = match volumes.get(p) {
            Some(v) => *v,
            None if samples == 0 => return Err(Error::MissingVolume(p.to_string())),
            None => {
                let v = toeplitz_volume(p, samples, seed)?;
                volumes.insert(p.clone(), v);
                v
            }
        };
        value += w * v.value;
        variance += (w * v.std_error).powi(2);
    }
    out.value = value;
    out.std_error = variance.sqrt();
    Ok(out)
}

/// Writes a moment table with columns `k,c,value,std_error,form`.
pub fn write_moment_csv<'a>(
    rows: impl IntoIterator<Item = &'a MomentValue>,
    mut w: impl Write,
) -> Result<()> {
    writeln!(w, "k,c,value,std_error,form")?;
    for m in rows {
        writeln!(w, "{},{},{},{},{}", m.k, m.c, m.value, m.std_error, m.form)?;
    }
    Ok(())
}
