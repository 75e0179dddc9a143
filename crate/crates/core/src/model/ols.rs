// SPDX-License-Identifier: Apache-2.0

//! Ordinary least squares with an intercept, via Householder QR.

use alloc::vec;
use alloc::vec::Vec;

/// Relative size below which a pivot marks the column as linearly dependent
/// on the ones before it.
const RANK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    pub intercept: f64,
    pub weights: Vec<f64>,
    /// Root of the mean squared residual.
    pub rmse: f64,
}

/// Why a fit could not be produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rank {
    /// Column `n` (0-based among `columns`) is collinear with earlier ones
    /// or with the intercept.
    Deficient(usize),
    /// Fewer rows than coefficients.
    Underdetermined,
}

pub fn intercept_only(y: &[f64]) -> OlsFit {
    let n = y.len() as f64;
    let mean = match y.first() {
        Some(&first) if y.iter().all(|&v| v == first) => first,
        _ => y.iter().sum::<f64>() / n,
    };
    let ss: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    OlsFit { intercept: mean, weights: Vec::new(), rmse: libm::sqrt(ss / n) }
}

/// Fits `y ≈ b + Σ w_j columns[j]`.
pub fn fit(columns: &[&[f64]], y: &[f64]) -> Result<OlsFit, Rank> {
    if columns.is_empty() {
        return Ok(intercept_only(y));
    }
    let n = y.len();
    let p = columns.len() + 1;
    if n < p {
        return Err(Rank::Underdetermined);
    }
    // Column-major design matrix with the intercept column first.
    let mut a: Vec<f64> = Vec::with_capacity(n * p);
    a.extend(core::iter::repeat_n(1.0, n));
    for c in columns {
        debug_assert_eq!(c.len(), n);
        a.extend_from_slice(c);
    }
    let norms: Vec<f64> = (0..p).map(|j| libm::sqrt(a[j * n..(j + 1) * n].iter().map(|v| v * v).sum())).collect();
    let mut qty = y.to_vec();
    let mut diag = vec![0.0; p];

    for j in 0..p {
        let (done, rest) = a.split_at_mut((j + 1) * n);
        let col = &mut done[j * n..];
        let alpha_norm = libm::sqrt(col[j..].iter().map(|v| v * v).sum());
        if norms[j] == 0.0 || alpha_norm <= RANK_TOL * norms[j] {
            return Err(if j == 0 { Rank::Underdetermined } else { Rank::Deficient(j - 1) });
        }
        let alpha = if col[j] > 0.0 { -alpha_norm } else { alpha_norm };
        // v = x - alpha e1, stored in place; R_jj = alpha.
        col[j] -= alpha;
        let vnorm2: f64 = col[j..].iter().map(|v| v * v).sum();
        diag[j] = alpha;
        let reflect = |target: &mut [f64]| {
            let dot: f64 = col[j..].iter().zip(&target[j..]).map(|(v, t)| v * t).sum();
            let s = 2.0 * dot / vnorm2;
            for (t, v) in target[j..].iter_mut().zip(&col[j..]) {
                *t -= s * v;
            }
        };
        for k in 0..(p - j - 1) {
            reflect(&mut rest[k * n..(k + 1) * n]);
        }
        reflect(&mut qty);
    }

    // Back substitution on R (upper triangle lives above the diagonal of `a`).
    let mut beta = vec![0.0; p];
    for i in (0..p).rev() {
        let mut s = qty[i];
        for k in (i + 1)..p {
            s -= a[k * n + i] * beta[k];
        }
        beta[i] = s / diag[i];
    }

    let mut ss = 0.0;
    for (r, &yr) in y.iter().enumerate() {
        let mut pred = beta[0];
        for (c, w) in columns.iter().zip(&beta[1..]) {
            pred += w * c[r];
        }
        ss += (yr - pred) * (yr - pred);
    }
    Ok(OlsFit { intercept: beta[0], weights: beta[1..].to_vec(), rmse: libm::sqrt(ss / n as f64) })
}
