//! Standardized, covariate-profiled form of a partially penalized
//! least-squares problem.
//!
//! Penalized columns are standardized; unpenalized columns (intercept and
//! covariates) are profiled out exactly by projecting onto the orthogonal
//! complement of their span. The solvers then work on the Gram matrix of the
//! projected penalized block, so each coordinate update costs O(k).

use nalgebra::{DMatrix, DVector};

use crate::data::{standardize, Dataset};
use crate::error::{Error, Result};
use crate::linalg::{least_squares, ResidualMaker};

#[derive(Debug, Clone)]
pub struct PenalizedProblem {
    n: usize,
    /// Indices into `[Z | X]` of penalized and unpenalized columns.
    penalized: Vec<usize>,
    unpenalized: Vec<usize>,
    means: Vec<f64>,
    sds: Vec<f64>,
    /// `[Z | X]` with penalized columns standardized.
    std_design: DMatrix<f64>,
    y: DVector<f64>,
    unpen_design: DMatrix<f64>,
    /// Gram and correlation of the projected penalized block, both over n.
    gram: DMatrix<f64>,
    corr: DVector<f64>,
    intercept: usize,
}

impl PenalizedProblem {
    pub fn new(d: &Dataset) -> Result<Self> {
        let design = d.design();
        let n = d.n();
        let width = design.ncols();
        let mask = d.penalty_mask();
        let penalized: Vec<usize> = (0..width).filter(|&j| mask[j]).collect();
        let unpenalized: Vec<usize> = (0..width).filter(|&j| !mask[j]).collect();
        if penalized.is_empty() {
            return Err(Error::InvalidArgument("no penalized columns".into()));
        }
        let skip: Vec<bool> = mask.iter().map(|m| !m).collect();
        let st = standardize(&design, &skip, &d.column_names())?;
        let std_design = st.matrix;
        let zp = std_design.select_columns(&penalized);
        let unpen_design = std_design.select_columns(&unpenalized);
        let resid = ResidualMaker::new(&unpen_design)?;
        let zp_proj = resid.apply(&zp);
        let y_proj = resid.apply_vec(d.y());
        let nf = n as f64;
        let gram = zp_proj.transpose() * &zp_proj / nf;
        let corr = zp_proj.transpose() * &y_proj / nf;
        let intercept = d.p() + d.intercept_column().expect("validated dataset has an intercept");
        Ok(PenalizedProblem {
            n,
            penalized,
            unpenalized,
            means: st.means,
            sds: st.sds,
            std_design,
            y: d.y().clone(),
            unpen_design,
            gram,
            corr,
            intercept,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_penalized(&self) -> usize {
        self.penalized.len()
    }

    pub fn penalized(&self) -> &[usize] {
        &self.penalized
    }

    pub fn width(&self) -> usize {
        self.std_design.ncols()
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn corr(&self) -> &DVector<f64> {
        &self.corr
    }

    pub fn std_design(&self) -> &DMatrix<f64> {
        &self.std_design
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    /// Smallest λ at which every penalized coefficient is zero.
    pub fn lambda_max(&self) -> f64 {
        self.corr.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Expands penalized coefficients (standardized scale) into a full
    /// standardized-scale vector by solving for the unpenalized block.
    pub fn complete(&self, pen_coef: &[f64]) -> Result<Vec<f64>> {
        let mut full = vec![0.0; self.width()];
        let mut partial = self.y.clone();
        for (k, &j) in self.penalized.iter().enumerate() {
            full[j] = pen_coef[k];
            if pen_coef[k] != 0.0 {
                partial.axpy(-pen_coef[k], &self.std_design.column(j), 1.0);
            }
        }
        if !self.unpenalized.is_empty() {
            let b = least_squares(&self.unpen_design, &partial)?;
            for (k, &j) in self.unpenalized.iter().enumerate() {
                full[j] = b[k];
            }
        }
        Ok(full)
    }

    /// Maps standardized-scale coefficients back to the original columns.
    pub fn to_original(&self, std_coef: &[f64]) -> Vec<f64> {
        let mut out = std_coef.to_vec();
        let mut shift = 0.0;
        for &j in &self.penalized {
            out[j] = std_coef[j] / self.sds[j];
            shift += out[j] * self.means[j];
        }
        out[self.intercept] -= shift;
        out
    }

    pub fn intercept_index(&self) -> usize {
        self.intercept
    }

    /// `(1/2n)||y - D b||² + λ Σ_pen weight_j |b_j|` on the standardized design.
    pub fn lasso_objective(&self, std_coef: &[f64], lambda: f64) -> f64 {
        let b = DVector::from_column_slice(std_coef);
        let r = &self.y - &self.std_design * b;
        let pen: f64 = self.penalized.iter().map(|&j| std_coef[j].abs()).sum();
        r.norm_squared() / (2.0 * self.n as f64) + lambda * pen
    }

    /// Gradient of the squared-loss term, `D'(y - D b)/n`, on the
    /// standardized design.
    pub fn loss_gradient(&self, std_coef: &[f64]) -> Vec<f64> {
        let b = DVector::from_column_slice(std_coef);
        let r = &self.y - &self.std_design * b;
        (self.std_design.transpose() * r / self.n as f64)
            .iter()
            .copied()
            .collect()
    }
}
