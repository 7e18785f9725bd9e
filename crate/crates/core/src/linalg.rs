//! Small dense helpers shared across modules. Matrix norms are the
//! ∞-operator norm (maximum absolute row sum) unless the name says otherwise.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub fn inf_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|row| row.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn max_abs(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

pub fn max_abs_entry(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// Frobenius inner product.
pub fn frobenius_dot(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Solves `a x = b` by LU with partial pivoting and rejects non-finite or
/// inaccurate solutions.
pub fn solve(a: &DMatrix<f64>, b: &DVector<f64>, what: &str) -> Result<DVector<f64>> {
    let lu = a.clone().lu();
    let x = lu
        .solve(b)
        .ok_or_else(|| Error::Singular(format!("{what}: zero pivot")))?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular(format!("{what}: non-finite solution")));
    }
    Ok(x)
}

/// Inverse through LU; the product residual is checked against `tol`.
pub fn inverse(a: &DMatrix<f64>, tol: f64, what: &str) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let inv = a
        .clone()
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::Singular(format!("{what}: zero pivot")))?;
    if inv.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular(format!("{what}: non-finite inverse")));
    }
    let residual = max_abs_entry(&(a * &inv - DMatrix::<f64>::identity(n, n)));
    if residual > tol {
        return Err(Error::Singular(format!(
            "{what}: inverse residual {residual:e} exceeds {tol:e}"
        )));
    }
    Ok(inv)
}
