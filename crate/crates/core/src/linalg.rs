//! Dense least-squares helpers for small designs.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Ordinary least squares summary.
#[derive(Debug, Clone)]
pub struct Ols {
    pub coef: DVector<f64>,
    pub se: DVector<f64>,
    pub residuals: DVector<f64>,
    pub rss: f64,
    pub df_resid: usize,
    pub sigma2: f64,
}

/// Solves `min ||y - X b||²` through a thin QR factorization.
pub fn least_squares(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    let (n, k) = x.shape();
    if n < k {
        return Err(Error::SingularDesign(format!("{n} rows for {k} columns")));
    }
    let qr = x.clone().qr();
    let r = qr.r();
    let scale = r.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if r.diagonal().iter().any(|d| d.abs() <= 1e-10 * scale.max(1e-300)) {
        return Err(Error::SingularDesign("design matrix is rank deficient".into()));
    }
    let qty = qr.q().transpose() * y;
    r.solve_upper_triangular(&qty)
        .ok_or_else(|| Error::SingularDesign("triangular solve failed".into()))
}

/// OLS with classical standard errors (`sigma² = RSS / (n - k)`).
pub fn ols(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<Ols> {
    let (n, k) = x.shape();
    if n <= k {
        return Err(Error::SingularDesign(format!(
            "{n} rows leave no residual degrees of freedom for {k} columns"
        )));
    }
    let coef = least_squares(x, y)?;
    let residuals = y - x * &coef;
    let rss = residuals.norm_squared();
    let df_resid = n - k;
    let sigma2 = rss / df_resid as f64;
    let xtx = x.transpose() * x;
    let inv = xtx
        .cholesky()
        .ok_or_else(|| Error::SingularDesign("X'X is not positive definite".into()))?
        .inverse();
    let se = DVector::from_iterator(k, (0..k).map(|j| (sigma2 * inv[(j, j)]).sqrt()));
    Ok(Ols {
        coef,
        se,
        residuals,
        rss,
        df_resid,
        sigma2,
    })
}

/// Orthogonal projector onto the complement of `span(x)`, applied lazily.
#[derive(Debug, Clone)]
pub struct ResidualMaker {
    q: DMatrix<f64>,
}

impl ResidualMaker {
    pub fn new(x: &DMatrix<f64>) -> Result<Self> {
        if x.ncols() == 0 {
            return Ok(ResidualMaker {
                q: DMatrix::zeros(x.nrows(), 0),
            });
        }
        if x.nrows() < x.ncols() {
            return Err(Error::SingularDesign("more unpenalized columns than rows".into()));
        }
        let qr = x.clone().qr();
        let r = qr.r();
        let scale = r.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if r.diagonal().iter().any(|d| d.abs() <= 1e-10 * scale.max(1e-300)) {
            return Err(Error::SingularDesign("unpenalized columns are collinear".into()));
        }
        Ok(ResidualMaker { q: qr.q() })
    }

    pub fn apply_vec(&self, v: &DVector<f64>) -> DVector<f64> {
        if self.q.ncols() == 0 {
            return v.clone();
        }
        v - &self.q * (self.q.transpose() * v)
    }

    pub fn apply(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        if self.q.ncols() == 0 {
            return m.clone();
        }
        m - &self.q * (self.q.transpose() * m)
    }
}
