//! Lasso and group lasso with partial penalization, tuned by seeded k-fold
//! cross-validation.

mod cv;
mod group;
mod lasso;
mod problem;

use serde::{Deserialize, Serialize};

pub use cv::{
    cv_group_lasso, cv_group_lasso_with, cv_lasso, cv_lasso_with, refit_group_lasso, refit_lasso,
    select_lambda, CvCurve,
};
pub use group::{group_lambda_max, group_lasso_fit, group_lasso_fit_with, GroupLassoFit};
pub use lasso::{lasso_fit, lasso_fit_problem, soft_threshold, LassoFit};
pub use problem::PenalizedProblem;

use crate::data::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Stop once the largest coefficient change in a sweep falls below this.
    pub tolerance: f64,
    pub max_sweeps: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            tolerance: 1e-7,
            max_sweeps: 100_000,
        }
    }
}

/// How the CV curve picks λ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaRule {
    #[default]
    MinError,
    OneStandardError,
}

/// Decreasing, log-spaced penalty candidates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaGrid {
    pub values: Vec<f64>,
    pub lambda_max: f64,
    pub ratio: f64,
    pub count: usize,
}

impl LambdaGrid {
    pub fn log_spaced(lambda_max: f64, ratio: f64, count: usize) -> Result<Self> {
        if !(lambda_max > 0.0 && lambda_max.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "lambda_max must be positive, got {lambda_max}"
            )));
        }
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::InvalidArgument(format!("ratio must be in (0,1), got {ratio}")));
        }
        if count == 0 {
            return Err(Error::InvalidArgument("grid needs at least one value".into()));
        }
        let values = if count == 1 {
            vec![lambda_max]
        } else {
            let step = ratio.ln() / (count - 1) as f64;
            (0..count)
                .map(|i| lambda_max * (step * i as f64).exp())
                .collect()
        };
        Ok(LambdaGrid {
            values,
            lambda_max,
            ratio,
            count,
        })
    }

    /// Explicit, strictly decreasing positive values.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("grid needs at least one value".into()));
        }
        if values.iter().any(|v| !(*v > 0.0 && v.is_finite()))
            || values.windows(2).any(|w| w[1] >= w[0])
        {
            return Err(Error::InvalidArgument(
                "grid values must be positive and strictly decreasing".into(),
            ));
        }
        let count = values.len();
        let ratio = values[count - 1] / values[0];
        Ok(LambdaGrid {
            lambda_max: values[0],
            ratio,
            count,
            values,
        })
    }

    pub fn for_lasso(d: &Dataset, ratio: f64, count: usize) -> Result<Self> {
        LambdaGrid::log_spaced(lambda_max(d)?, ratio, count)
    }

    pub fn for_group_lasso(d: &Dataset, ratio: f64, count: usize) -> Result<Self> {
        LambdaGrid::log_spaced(group_lambda_max(d)?, ratio, count)
    }
}

/// Settings for CV-tuned penalized fits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PenalizedConfig {
    pub folds: usize,
    pub n_lambda: usize,
    pub lambda_ratio: f64,
    pub rule: LambdaRule,
    pub tolerance: f64,
    pub max_sweeps: usize,
}

impl Default for PenalizedConfig {
    fn default() -> Self {
        PenalizedConfig {
            folds: 10,
            n_lambda: 100,
            lambda_ratio: 1e-4,
            rule: LambdaRule::MinError,
            tolerance: 1e-7,
            max_sweeps: 100_000,
        }
    }
}

impl PenalizedConfig {
    pub fn fit_options(&self) -> FitOptions {
        FitOptions {
            tolerance: self.tolerance,
            max_sweeps: self.max_sweeps,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::Config(format!("folds must be at least 2, got {}", self.folds)));
        }
        if self.n_lambda == 0 {
            return Err(Error::Config("n_lambda must be positive".into()));
        }
        if !(self.lambda_ratio > 0.0 && self.lambda_ratio < 1.0) {
            return Err(Error::Config("lambda_ratio must be in (0,1)".into()));
        }
        if !(self.tolerance > 0.0) || self.max_sweeps == 0 {
            return Err(Error::Config("tolerance and max_sweeps must be positive".into()));
        }
        Ok(())
    }
}

/// Largest |z_jᵀ r| / n over penalized columns, where r is the residual of
/// the outcome on the unpenalized columns and z_j are standardized.
pub fn lambda_max(d: &Dataset) -> Result<f64> {
    Ok(PenalizedProblem::new(d)?.lambda_max())
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda >= 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("lambda must be >= 0, got {lambda}")))
    }
}
