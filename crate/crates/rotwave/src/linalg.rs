//! Small dense helpers on top of faer.

use faer::{Mat, Side};
use num_complex::Complex64 as C64;

use crate::{Error, Result};

pub type CMat = Mat<C64>;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn from_rows(rows: &[Vec<C64>]) -> CMat {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    Mat::from_fn(n, m, |i, j| rows[i][j])
}

pub fn from_real_rows(rows: &[Vec<f64>]) -> CMat {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    Mat::from_fn(n, m, |i, j| c(rows[i][j], 0.0))
}

pub fn to_rows(m: &CMat) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub fn identity(n: usize) -> CMat {
    Mat::identity(n, n)
}

pub fn scaled(m: &CMat, s: C64) -> CMat {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * s)
}

pub fn adjoint(m: &CMat) -> CMat {
    m.adjoint().to_owned()
}

pub fn fro(m: &CMat) -> f64 {
    m.norm_l2()
}

pub fn max_abs(m: &CMat) -> f64 {
    let mut r = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            r = r.max(m[(i, j)].norm());
        }
    }
    r
}

pub fn is_real(m: &CMat) -> bool {
    (0..m.nrows()).all(|i| (0..m.ncols()).all(|j| m[(i, j)].im == 0.0))
}

pub fn hermitian_part(m: &CMat) -> CMat {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5)
}

/// Eigenvalues of the Hermitian part, ascending.
pub fn hermitian_part_eigenvalues(m: &CMat) -> Result<Vec<f64>> {
    let mut v = hermitian_part(m)
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Eigensolve(format!("{e:?}")))?;
    v.sort_by(f64::total_cmp);
    Ok(v)
}

pub fn eigenvalues(m: &CMat) -> Result<Vec<C64>> {
    m.eigenvalues().map_err(|e| Error::Eigensolve(format!("{e:?}")))
}

/// Eigenvalues and unit-norm eigenvectors (columns).
pub fn eigen(m: &CMat) -> Result<(Vec<C64>, CMat)> {
    let e = m.eigen().map_err(|e| Error::Eigensolve(format!("{e:?}")))?;
    let s = e.S().column_vector();
    let vals = (0..m.nrows()).map(|i| s[i]).collect();
    let mut u = e.U().to_owned();
    for j in 0..u.ncols() {
        let n = u.col(j).norm_l2();
        if n > 0.0 {
            for i in 0..u.nrows() {
                u[(i, j)] /= n;
            }
        }
    }
    Ok((vals, u))
}

pub fn singular_values(m: &CMat) -> Result<Vec<f64>> {
    m.singular_values().map_err(|e| Error::Eigensolve(format!("{e:?}")))
}

/// 2-norm condition number; infinite for rank-deficient input.
pub fn cond2(m: &CMat) -> Result<f64> {
    let s = singular_values(m)?;
    let hi = s.iter().cloned().fold(0.0, f64::max);
    let lo = s.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(if lo == 0.0 { f64::INFINITY } else { hi / lo })
}

pub fn inverse(m: &CMat) -> Result<CMat> {
    use faer::linalg::solvers::DenseSolveCore;
    if !cond2(m)?.is_finite() || cond2(m)? > 1e14 {
        return Err(Error::Invalid("singular matrix".into()));
    }
    Ok(m.partial_piv_lu().inverse())
}

pub fn spectral_radius(m: &CMat) -> Result<f64> {
    Ok(eigenvalues(m)?.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// Spectral abscissa max Re(eig).
pub fn spectral_abscissa(m: &CMat) -> Result<f64> {
    Ok(eigenvalues(m)?.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max))
}

pub fn commutator_norm(a: &CMat, b: &CMat) -> f64 {
    fro(&(a * b - b * a))
}

pub fn is_normal(m: &CMat) -> bool {
    let n = fro(m);
    n == 0.0 || fro(&(m * m.adjoint() - m.adjoint() * m)) <= 1e-12 * n * n
}

pub fn matvec(m: &CMat, x: &[C64]) -> Vec<C64> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)] * x[j]).sum())
        .collect()
}

pub fn dot(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

pub fn norm(x: &[C64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Matrix exponential of a real skew-symmetric matrix, through its unitary
/// diagonalization.
pub fn expm_skew(s: &[Vec<f64>], t: f64) -> Result<Vec<Vec<f64>>> {
    let sp = crate::symmetry::skew_eigendecomposition(s)?;
    let d = s.len();
    let u = &sp.u;
    let mut out = vec![vec![0.0; d]; d];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for l in 0..d {
                acc += u[(i, l)] * (sp.lambda[l] * t).exp() * u[(j, l)].conj();
            }
            *x = acc.re;
        }
    }
    Ok(out)
}
