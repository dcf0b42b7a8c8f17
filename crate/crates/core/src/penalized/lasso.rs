use serde::{Deserialize, Serialize};

use super::problem::PenalizedProblem;
use super::FitOptions;
use crate::data::Dataset;
use crate::error::Result;

#[inline]
pub fn soft_threshold(z: f64, gamma: f64) -> f64 {
    debug_assert!(gamma >= 0.0);
    if z > gamma {
        z - gamma
    } else if z < -gamma {
        z + gamma
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LassoFit {
    /// Original-scale coefficients in `[exposures..., covariates...]` order.
    pub beta: Vec<f64>,
    pub intercept: f64,
    pub lambda: f64,
    pub n_iterations: usize,
    pub converged: bool,
    /// Same coefficients on the standardized design.
    pub beta_standardized: Vec<f64>,
}

/// Cyclic coordinate descent on the profiled problem. Returns penalized
/// coefficients (standardized scale), sweeps used and convergence.
pub(crate) fn coordinate_descent(
    prob: &PenalizedProblem,
    lambda: f64,
    start: Option<&[f64]>,
    opts: &FitOptions,
) -> (Vec<f64>, usize, bool) {
    let gram = prob.gram();
    let k = prob.n_penalized();
    let mut b = match start {
        Some(s) => s.to_vec(),
        None => vec![0.0; k],
    };
    // grad = corr - G b
    let mut grad: Vec<f64> = prob.corr().iter().copied().collect();
    for (j, &bj) in b.iter().enumerate() {
        if bj != 0.0 {
            for i in 0..k {
                grad[i] -= gram[(i, j)] * bj;
            }
        }
    }
    for sweep in 1..=opts.max_sweeps {
        let mut max_change = 0.0f64;
        for j in 0..k {
            let gjj = gram[(j, j)];
            if gjj <= 0.0 {
                continue;
            }
            let old = b[j];
            let rho = grad[j] + gjj * old;
            let new = soft_threshold(rho, lambda) / gjj;
            let delta = new - old;
            if delta != 0.0 {
                b[j] = new;
                for i in 0..k {
                    grad[i] -= gram[(i, j)] * delta;
                }
                max_change = max_change.max(delta.abs());
            }
        }
        if max_change < opts.tolerance {
            return (b, sweep, true);
        }
    }
    (b, opts.max_sweeps, false)
}

pub(crate) fn finish_lasso(
    prob: &PenalizedProblem,
    pen: &[f64],
    lambda: f64,
    sweeps: usize,
    converged: bool,
) -> Result<LassoFit> {
    if !converged {
        log::warn!("lasso did not converge at lambda={lambda} after {sweeps} sweeps");
    }
    let std = prob.complete(pen)?;
    let beta = prob.to_original(&std);
    Ok(LassoFit {
        intercept: beta[prob.intercept_index()],
        beta,
        lambda,
        n_iterations: sweeps,
        converged,
        beta_standardized: std,
    })
}

/// Lasso fit with the default tolerance and sweep cap.
pub fn lasso_fit(d: &Dataset, lambda: f64, warm_start: Option<&[f64]>) -> Result<LassoFit> {
    let prob = PenalizedProblem::new(d)?;
    lasso_fit_problem(&prob, lambda, warm_start, &FitOptions::default())
}

/// `warm_start`, when given, holds standardized-scale coefficients in full
/// `[exposures..., covariates...]` order (e.g. `beta_standardized` of an
/// earlier fit); only its penalized entries are used.
pub fn lasso_fit_problem(
    prob: &PenalizedProblem,
    lambda: f64,
    warm_start: Option<&[f64]>,
    opts: &FitOptions,
) -> Result<LassoFit> {
    super::check_lambda(lambda)?;
    let start: Option<Vec<f64>> =
        warm_start.map(|w| prob.penalized().iter().map(|&j| w[j]).collect());
    let (pen, sweeps, converged) = coordinate_descent(prob, lambda, start.as_deref(), opts);
    finish_lasso(prob, &pen, lambda, sweeps, converged)
}
