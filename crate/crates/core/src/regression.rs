//! Ordinary least squares via Householder QR, with fit-quality reporting.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearFit<T> {
    pub coefficients: Vec<T>,
    /// Coefficient of determination against the mean of `y`, clamped to
    /// `[0, 1]`. A constant response that is fitted exactly reports 1.
    pub r_squared: T,
    pub rmse: T,
    pub n: usize,
}

/// Solves `min ||X b - y||` where `rows[i]` is the i-th row of `X`.
///
/// Rank-deficient designs are rejected rather than regularized.
pub fn least_squares<T: Scalar>(rows: &[Vec<T>], y: &[T]) -> Result<LinearFit<T>> {
    let n = rows.len();
    if n != y.len() {
        return Err(Error::InvalidInput(format!(
            "{n} design rows but {} responses",
            y.len()
        )));
    }
    let p = rows.first().map_or(0, Vec::len);
    if p == 0 || rows.iter().any(|r| r.len() != p) {
        return Err(Error::InvalidInput("design rows must share a non-zero width".into()));
    }
    if n < p {
        return Err(Error::SingularFit(format!(
            "{n} samples cannot determine {p} coefficients"
        )));
    }

    // Column-major working copy.
    let mut a: Vec<Vec<T>> = (0..p).map(|j| rows.iter().map(|r| r[j]).collect()).collect();
    let mut qty = y.to_vec();
    let mut diag = vec![T::zero(); p];

    for k in 0..p {
        let norm = a[k][k..].iter().fold(T::zero(), |s, &v| s + v * v).sqrt();
        if norm == T::zero() {
            diag[k] = T::zero();
            continue;
        }
        let alpha = if a[k][k] > T::zero() { -norm } else { norm };
        let mut v: Vec<T> = a[k][k..].to_vec();
        v[0] -= alpha;
        let vnorm2 = v.iter().fold(T::zero(), |s, &x| s + x * x);
        if vnorm2 == T::zero() {
            diag[k] = a[k][k];
            continue;
        }
        let two = T::lit(2.0);
        for col in a.iter_mut().skip(k) {
            let dot = v.iter().zip(&col[k..]).fold(T::zero(), |s, (&vi, &ci)| s + vi * ci);
            let f = two * dot / vnorm2;
            for (c, &vi) in col[k..].iter_mut().zip(&v) {
                *c -= f * vi;
            }
        }
        let dot = v.iter().zip(&qty[k..]).fold(T::zero(), |s, (&vi, &ci)| s + vi * ci);
        let f = two * dot / vnorm2;
        for (c, &vi) in qty[k..].iter_mut().zip(&v) {
            *c -= f * vi;
        }
        diag[k] = a[k][k];
    }

    let scale = diag.iter().fold(T::zero(), |m, d| m.max(d.abs()));
    let tol = scale * T::from_usize_lossy(n.max(p)) * T::epsilon() * T::lit(64.0);
    if let Some(j) = diag.iter().position(|d| d.abs() <= tol) {
        return Err(Error::SingularFit(format!(
            "design matrix is rank deficient (column {j} is dependent on the others)"
        )));
    }

    let mut coef = vec![T::zero(); p];
    for i in (0..p).rev() {
        let mut s = qty[i];
        for j in i + 1..p {
            s -= a[j][i] * coef[j];
        }
        coef[i] = s / a[i][i];
    }

    let (r_squared, rmse) = fit_quality(rows, y, &coef);
    Ok(LinearFit {
        coefficients: coef,
        r_squared,
        rmse,
        n,
    })
}

pub(crate) fn fit_quality<T: Scalar>(rows: &[Vec<T>], y: &[T], coef: &[T]) -> (T, T) {
    let n = T::from_usize_lossy(y.len());
    let mean = y.iter().fold(T::zero(), |s, &v| s + v) / n;
    let mut ss_res = T::zero();
    let mut ss_tot = T::zero();
    for (row, &yi) in rows.iter().zip(y) {
        let pred = row.iter().zip(coef).fold(T::zero(), |s, (&x, &b)| s + x * b);
        ss_res += (yi - pred) * (yi - pred);
        ss_tot += (yi - mean) * (yi - mean);
    }
    let rmse = (ss_res / n).sqrt();
    let tiny = T::epsilon() * T::lit(1e3) * (T::one() + mean * mean) * n;
    let r2 = if ss_tot <= tiny {
        if ss_res <= tiny {
            T::one()
        } else {
            T::zero()
        }
    } else {
        T::one() - ss_res / ss_tot
    };
    (crate::scalar::clamp_unit(r2), rmse)
}

/// Straight line `y = intercept + slope * x` with fit quality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit<T> {
    pub slope: T,
    pub intercept: T,
    pub r_squared: T,
    pub rmse: T,
    pub n: usize,
}

pub fn fit_line<T: Scalar>(x: &[T], y: &[T]) -> Result<LineFit<T>> {
    if x.len() < 2 {
        return Err(Error::SingularFit(format!(
            "a line needs at least 2 points, got {}",
            x.len()
        )));
    }
    let first = x[0];
    if x.iter().all(|&v| v == first) {
        return Err(Error::SingularFit("all abscissae are equal".into()));
    }
    let rows: Vec<Vec<T>> = x.iter().map(|&xi| vec![T::one(), xi]).collect();
    let fit = least_squares(&rows, y)?;
    Ok(LineFit {
        intercept: fit.coefficients[0],
        slope: fit.coefficients[1],
        r_squared: fit.r_squared,
        rmse: fit.rmse,
        n: fit.n,
    })
}

/// Line through the origin `y = slope * x`. R² is reported against the mean
/// of `y`, like every other fit in the crate.
pub fn fit_proportional<T: Scalar>(x: &[T], y: &[T]) -> Result<LineFit<T>> {
    let rows: Vec<Vec<T>> = x.iter().map(|&xi| vec![xi]).collect();
    let fit = least_squares(&rows, y)?;
    Ok(LineFit {
        slope: fit.coefficients[0],
        intercept: T::zero(),
        r_squared: fit.r_squared,
        rmse: fit.rmse,
        n: fit.n,
    })
}
