use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::group::{block_descent, finish_group, Blocks, GroupLassoFit};
use super::lasso::{coordinate_descent, finish_lasso, LassoFit};
use super::problem::PenalizedProblem;
use super::{FitOptions, LambdaGrid, LambdaRule};
use crate::data::{kfold_assign, Dataset};
use crate::error::{Error, Result};
use crate::rng::SeedStream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvCurve {
    pub grid: LambdaGrid,
    /// Mean held-out MSE per λ.
    pub mean_error: Vec<f64>,
    /// Standard error of the fold MSEs per λ.
    pub se_error: Vec<f64>,
    /// Held-out MSE, indexed `[fold][λ]`.
    pub fold_errors: Vec<Vec<f64>>,
    pub chosen_lambda: f64,
    pub chosen_index: usize,
    pub fold_labels: Vec<usize>,
}

#[derive(Clone, Copy)]
enum Penalty {
    Lasso,
    Group,
}

/// Fits every λ of `grid` along a warm-started path and returns
/// original-scale coefficients for each.
fn path_coefficients(
    d: &Dataset,
    grid: &LambdaGrid,
    penalty: Penalty,
    opts: &FitOptions,
) -> Result<Vec<Vec<f64>>> {
    let prob = PenalizedProblem::new(d)?;
    let blocks = match penalty {
        Penalty::Group => Some(Blocks::new(d, &prob)?),
        Penalty::Lasso => None,
    };
    let mut warm: Option<Vec<f64>> = None;
    let mut out = Vec::with_capacity(grid.values.len());
    for &lambda in &grid.values {
        let (pen, sweeps, converged) = match &blocks {
            None => coordinate_descent(&prob, lambda, warm.as_deref(), opts),
            Some(b) => block_descent(&prob, b, lambda, warm.as_deref(), opts),
        };
        if !converged {
            log::warn!("cv path fit did not converge at lambda={lambda} after {sweeps} sweeps");
        }
        let std = prob.complete(&pen)?;
        out.push(prob.to_original(&std));
        warm = Some(pen);
    }
    Ok(out)
}

fn cross_validate(
    d: &Dataset,
    k: usize,
    grid: &LambdaGrid,
    rule: LambdaRule,
    rng: &mut SeedStream,
    penalty: Penalty,
    opts: &FitOptions,
) -> Result<CvCurve> {
    let n = d.n();
    let labels = kfold_assign(n, k, rng)?;
    let design = d.design();
    let mut fold_errors = Vec::with_capacity(k);
    for fold in 0..k {
        let test: Vec<usize> = (0..n).filter(|&i| labels[i] == fold).collect();
        let train: Vec<usize> = (0..n).filter(|&i| labels[i] != fold).collect();
        if test.len() < 2 {
            return Err(Error::Folds(format!(
                "fold {fold} holds {} observation(s); at least 2 are required",
                test.len()
            )));
        }
        let train_set = d.subset_rows(&train);
        let path = path_coefficients(&train_set, grid, penalty, opts)?;
        let x_test = design.select_rows(&test);
        let y_test = DVector::from_iterator(test.len(), test.iter().map(|&i| d.y()[i]));
        let errors: Vec<f64> = path
            .iter()
            .map(|beta| {
                let pred = &x_test * DVector::from_column_slice(beta);
                (&y_test - pred).norm_squared() / test.len() as f64
            })
            .collect();
        fold_errors.push(errors);
    }
    let m = grid.values.len();
    let kf = k as f64;
    let mut mean_error = vec![0.0; m];
    let mut se_error = vec![0.0; m];
    for l in 0..m {
        let mean = fold_errors.iter().map(|f| f[l]).sum::<f64>() / kf;
        let var = fold_errors.iter().map(|f| (f[l] - mean).powi(2)).sum::<f64>() / (kf - 1.0);
        mean_error[l] = mean;
        se_error[l] = (var / kf).sqrt();
    }
    let chosen_index = select_lambda(&mean_error, &se_error, rule);
    Ok(CvCurve {
        chosen_lambda: grid.values[chosen_index],
        chosen_index,
        grid: grid.clone(),
        mean_error,
        se_error,
        fold_errors,
        fold_labels: labels,
    })
}

/// Index into a decreasing grid. Ties resolve to the larger λ.
pub fn select_lambda(mean_error: &[f64], se_error: &[f64], rule: LambdaRule) -> usize {
    let mut best = 0;
    for (i, &e) in mean_error.iter().enumerate() {
        if e < mean_error[best] {
            best = i;
        }
    }
    match rule {
        LambdaRule::MinError => best,
        LambdaRule::OneStandardError => {
            let bound = mean_error[best] + se_error[best];
            mean_error.iter().position(|&e| e <= bound).unwrap_or(best)
        }
    }
}

pub fn cv_lasso(
    d: &Dataset,
    k: usize,
    grid: &LambdaGrid,
    rng: &mut SeedStream,
) -> Result<CvCurve> {
    cv_lasso_with(d, k, grid, LambdaRule::MinError, rng, &FitOptions::default())
}

pub fn cv_lasso_with(
    d: &Dataset,
    k: usize,
    grid: &LambdaGrid,
    rule: LambdaRule,
    rng: &mut SeedStream,
    opts: &FitOptions,
) -> Result<CvCurve> {
    cross_validate(d, k, grid, rule, rng, Penalty::Lasso, opts)
}

pub fn cv_group_lasso(
    d: &Dataset,
    k: usize,
    grid: &LambdaGrid,
    rng: &mut SeedStream,
) -> Result<CvCurve> {
    cv_group_lasso_with(d, k, grid, LambdaRule::MinError, rng, &FitOptions::default())
}

pub fn cv_group_lasso_with(
    d: &Dataset,
    k: usize,
    grid: &LambdaGrid,
    rule: LambdaRule,
    rng: &mut SeedStream,
    opts: &FitOptions,
) -> Result<CvCurve> {
    cross_validate(d, k, grid, rule, rng, Penalty::Group, opts)
}

/// Full-data lasso at the CV-chosen λ, warm-started along the grid down to it.
pub fn refit_lasso(d: &Dataset, curve: &CvCurve, opts: &FitOptions) -> Result<LassoFit> {
    let prob = PenalizedProblem::new(d)?;
    let mut warm: Option<Vec<f64>> = None;
    let mut last = None;
    for &lambda in &curve.grid.values[..=curve.chosen_index] {
        let (pen, sweeps, converged) = coordinate_descent(&prob, lambda, warm.as_deref(), opts);
        last = Some((pen.clone(), sweeps, converged));
        warm = Some(pen);
    }
    let (pen, sweeps, converged) = last.expect("grid is non-empty");
    finish_lasso(&prob, &pen, curve.chosen_lambda, sweeps, converged)
}

pub fn refit_group_lasso(d: &Dataset, curve: &CvCurve, opts: &FitOptions) -> Result<GroupLassoFit> {
    let prob = PenalizedProblem::new(d)?;
    let blocks = Blocks::new(d, &prob)?;
    let mut warm: Option<Vec<f64>> = None;
    let mut last = None;
    for &lambda in &curve.grid.values[..=curve.chosen_index] {
        let (pen, sweeps, converged) = block_descent(&prob, &blocks, lambda, warm.as_deref(), opts);
        last = Some((pen.clone(), sweeps, converged));
        warm = Some(pen);
    }
    let (pen, sweeps, converged) = last.expect("grid is non-empty");
    finish_group(d, &prob, &pen, curve.chosen_lambda, sweeps, converged)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ties_go_to_larger_lambda() {
        let mean = [3.0, 1.0, 1.0, 2.0];
        let se = [0.0; 4];
        assert_eq!(select_lambda(&mean, &se, LambdaRule::MinError), 1);
    }

    #[test]
    fn one_se_rule_prefers_sparser() {
        let mean = [3.0, 1.4, 1.0, 1.1];
        let se = [0.1, 0.1, 0.5, 0.1];
        assert_eq!(select_lambda(&mean, &se, LambdaRule::OneStandardError), 1);
    }
}
