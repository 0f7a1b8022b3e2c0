//! Dense symmetric eigenvalues: Householder reduction to tridiagonal form,
//! then implicit-shift QL on the tridiagonal matrix. Eigenvectors are not
//! accumulated.

use crate::error::{Error, Result};

/// Reduces the symmetric `n x n` row-major matrix `a` (only the lower triangle
/// is read and updated) to tridiagonal form. Returns `(diagonal, off_diagonal)`
/// where `off_diagonal[i]` couples `i` and `i + 1` and the last entry is 0.
pub fn tridiagonalize(mut a: Vec<f64>, n: usize) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(a.len(), n * n);
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];

    for k in 0..n.saturating_sub(2) {
        d[k] = a[k * n + k];
        let lo = k + 1;
        // column k below the diagonal, read from rows of the lower triangle
        for i in lo..n {
            v[i] = a[i * n + k];
        }
        let tail_sq: f64 = v[lo + 1..n].iter().map(|x| x * x).sum();
        if tail_sq == 0.0 {
            e[k] = v[lo];
            continue;
        }
        let norm = (v[lo] * v[lo] + tail_sq).sqrt();
        let alpha = if v[lo] > 0.0 { -norm } else { norm };
        e[k] = alpha;
        v[lo] -= alpha;
        let beta = 2.0 / (v[lo] * v[lo] + tail_sq);

        // p = beta * A22 v, using the lower triangle only
        p[lo..n].iter_mut().for_each(|x| *x = 0.0);
        for i in lo..n {
            let row = &a[i * n + lo..i * n + i];
            let vi = v[i];
            let mut acc = 0.0;
            for ((&aij, &vj), pj) in row.iter().zip(&v[lo..i]).zip(&mut p[lo..i]) {
                acc += aij * vj;
                *pj += aij * vi;
            }
            p[i] += acc + a[i * n + i] * vi;
        }
        for x in &mut p[lo..n] {
            *x *= beta;
        }
        let vp: f64 = v[lo..n].iter().zip(&p[lo..n]).map(|(a, b)| a * b).sum();
        let half = 0.5 * beta * vp;
        for i in lo..n {
            p[i] -= half * v[i];
        }
        // A22 -= v w' + w v' with w = p
        for i in lo..n {
            let (vi, wi) = (v[i], p[i]);
            let row = &mut a[i * n + lo..i * n + i + 1];
            for ((aij, &vj), &wj) in row.iter_mut().zip(&v[lo..=i]).zip(&p[lo..=i]) {
                *aij -= vi * wj + wi * vj;
            }
        }
    }
    if n >= 2 {
        d[n - 2] = a[(n - 2) * n + n - 2];
        e[n - 2] = a[(n - 1) * n + n - 2];
    }
    if n >= 1 {
        d[n - 1] = a[(n - 1) * n + n - 1];
        e[n - 1] = 0.0;
    }
    (d, e)
}

/// Eigenvalues of a symmetric tridiagonal matrix by implicit-shift QL.
pub fn tridiagonal_eigenvalues(mut d: Vec<f64>, mut e: Vec<f64>) -> Result<Vec<f64>> {
    let n = d.len();
    assert_eq!(e.len(), n);
    const MAX_SWEEPS: usize = 60;
    for l in 0..n {
        let mut sweeps = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let scale = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * scale {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            sweeps += 1;
            if sweeps > MAX_SWEEPS {
                return Err(Error::NoConvergence(format!(
                    "QL iteration for eigenvalue {l} did not converge in {MAX_SWEEPS} sweeps"
                )));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0_f64, 1.0_f64, 0.0_f64);
            let mut deflated = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// All eigenvalues of a symmetric row-major matrix, ascending.
pub fn symmetric_eigenvalues(a: &[f64], n: usize) -> Result<Vec<f64>> {
    let (d, e) = tridiagonalize(a.to_vec(), n);
    tridiagonal_eigenvalues(d, e)
}
