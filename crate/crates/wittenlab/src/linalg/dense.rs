use faer::{Mat, MatRef, Side};

use crate::error::{Error, Result};

/// Eigen-decomposition of the symmetric part of `a`, eigenvalues ascending.
pub fn sym_eigen(a: MatRef<'_, f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    super::init();
    let n = a.nrows();
    let s = Mat::from_fn(n, n, |i, j| 0.5 * (a[(i, j)] + a[(j, i)]));
    let e = s
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numeric(format!("dense eigen-decomposition failed: {e:?}")))?;
    let vals: Vec<f64> = (0..n).map(|i| e.S()[i]).collect();
    Ok((vals, e.U().to_owned()))
}

/// Singular values (descending) with thin factors.
pub fn svd(a: MatRef<'_, f64>) -> Result<(Vec<f64>, Mat<f64>, Mat<f64>)> {
    super::init();
    let s = a.thin_svd().map_err(|e| Error::Numeric(format!("dense SVD failed: {e:?}")))?;
    let k = a.nrows().min(a.ncols());
    let vals: Vec<f64> = (0..k).map(|i| s.S()[i]).collect();
    Ok((vals, s.U().to_owned(), s.V().to_owned()))
}

pub fn singular_values(a: MatRef<'_, f64>) -> Result<Vec<f64>> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Ok(Vec::new());
    }
    Ok(svd(a)?.0)
}

pub fn spectral_norm(a: MatRef<'_, f64>) -> Result<f64> {
    Ok(singular_values(a)?.first().copied().unwrap_or(0.0))
}

/// `sqrt(det(aᵀa))`, the Gram-determinant volume of the columns of `a`.
pub fn gram_volume(a: MatRef<'_, f64>) -> Result<f64> {
    if a.ncols() == 0 {
        return Ok(1.0);
    }
    if a.nrows() < a.ncols() {
        return Ok(0.0);
    }
    Ok(singular_values(a)?.iter().product())
}

pub fn determinant(a: MatRef<'_, f64>) -> f64 {
    if a.nrows() == 0 {
        return 1.0;
    }
    super::init();
    a.determinant()
}

/// Applies `f` to the eigenvalues of a symmetric matrix.
pub fn sym_function(a: MatRef<'_, f64>, f: impl Fn(f64) -> f64) -> Result<Mat<f64>> {
    let (vals, u) = sym_eigen(a)?;
    let n = vals.len();
    let mut fu = u.clone();
    for j in 0..n {
        let s = f(vals[j]);
        for i in 0..n {
            fu[(i, j)] *= s;
        }
    }
    Ok(&fu * u.transpose())
}

pub fn inv_sqrt_spd(a: MatRef<'_, f64>) -> Result<Mat<f64>> {
    let (vals, _) = sym_eigen(a)?;
    if let Some(&v) = vals.first() {
        if v <= 0.0 {
            return Err(Error::Numeric(format!("matrix not positive definite (smallest eigenvalue {v:e})")));
        }
    }
    sym_function(a, |x| 1.0 / x.sqrt())
}

pub fn sqrt_spd(a: MatRef<'_, f64>) -> Result<Mat<f64>> {
    sym_function(a, |x| x.max(0.0).sqrt())
}

/// Orthogonal polar factor `U Vᵀ` of a square matrix.
pub fn polar(a: MatRef<'_, f64>) -> Result<Mat<f64>> {
    let (_, u, v) = svd(a)?;
    Ok(&u * v.transpose())
}

/// Lower Cholesky factor of an SPD matrix.
pub fn cholesky(a: MatRef<'_, f64>) -> Result<Mat<f64>> {
    super::init();
    let l = a
        .llt(Side::Lower)
        .map_err(|e| Error::Numeric(format!("Cholesky factorisation failed: {e:?}")))?;
    Ok(l.L().to_owned())
}

pub fn inverse(a: MatRef<'_, f64>) -> Mat<f64> {
    super::init();
    use faer::linalg::solvers::DenseSolveCore;
    a.full_piv_lu().inverse()
}

/// Orthonormal basis for the column span (thin Q of a Householder QR).
pub fn orthonormal_columns(a: MatRef<'_, f64>) -> Mat<f64> {
    super::init();
    if a.ncols() == 0 {
        return Mat::zeros(a.nrows(), 0);
    }
    a.qr().compute_thin_Q()
}

pub fn identity(n: usize) -> Mat<f64> {
    Mat::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
}

pub fn from_cols(rows: usize, cols: &[Vec<f64>]) -> Mat<f64> {
    Mat::from_fn(rows, cols.len(), |i, j| cols[j][i])
}

pub fn col(a: MatRef<'_, f64>, j: usize) -> Vec<f64> {
    (0..a.nrows()).map(|i| a[(i, j)]).collect()
}

pub fn max_abs(a: MatRef<'_, f64>) -> f64 {
    let mut m: f64 = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max(a[(i, j)].abs());
        }
    }
    m
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Flips the sign so the entry of largest magnitude (first on ties) is positive.
pub fn canonical_sign(v: &mut [f64]) {
    let mut best = 0usize;
    for i in 0..v.len() {
        if v[i].abs() > v[best].abs() * (1.0 + 1e-12) {
            best = i;
        }
    }
    if v.get(best).is_some_and(|x| *x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}
