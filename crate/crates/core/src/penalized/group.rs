use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::problem::PenalizedProblem;
use super::FitOptions;
use crate::data::Dataset;
use crate::error::{Error, Result};

const BLOCK_NEWTON_TOL: f64 = 1e-9;
const BLOCK_NEWTON_MAX: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupLassoFit {
    pub beta: Vec<f64>,
    pub intercept: f64,
    pub lambda: f64,
    /// Euclidean norm of each group's original-scale coefficient block.
    pub group_norms: Vec<f64>,
    pub n_iterations: usize,
    pub converged: bool,
    pub beta_standardized: Vec<f64>,
}

/// Group structure over the penalized block, with the eigendecomposition of
/// each diagonal Gram block.
#[derive(Debug, Clone)]
pub(crate) struct Blocks {
    /// Positions (within the penalized block) of each group's members.
    members: Vec<Vec<usize>>,
    weights: Vec<f64>,
    eig_vectors: Vec<DMatrix<f64>>,
    eig_values: Vec<DVector<f64>>,
}

impl Blocks {
    pub(crate) fn new(d: &Dataset, prob: &PenalizedProblem) -> Result<Self> {
        let p = d.p();
        let expected: Vec<usize> = (0..p).collect();
        if prob.penalized() != expected.as_slice() {
            return Err(Error::InvalidArgument(
                "group lasso requires exactly the exposures to be penalized".into(),
            ));
        }
        let g = d.groups().n_groups();
        let members: Vec<Vec<usize>> = (0..g).map(|k| d.groups().members(k)).collect();
        let mut eig_vectors = Vec::with_capacity(g);
        let mut eig_values = Vec::with_capacity(g);
        for idx in &members {
            let block = prob.gram().select_rows(idx).select_columns(idx);
            let eig = SymmetricEigen::new(block);
            eig_vectors.push(eig.eigenvectors);
            eig_values.push(eig.eigenvalues.map(|v| v.max(0.0)));
        }
        let weights = members.iter().map(|m| (m.len() as f64).sqrt()).collect();
        Ok(Blocks {
            members,
            weights,
            eig_vectors,
            eig_values,
        })
    }

    pub(crate) fn lambda_max(&self, prob: &PenalizedProblem) -> f64 {
        let corr = prob.corr();
        self.members
            .iter()
            .zip(&self.weights)
            .map(|(idx, w)| idx.iter().map(|&j| corr[j] * corr[j]).sum::<f64>().sqrt() / w)
            .fold(0.0, f64::max)
    }
}

/// Exact minimizer of `½ bᵀ A b − ρᵀ b + penalty ||b||` with `A = V diag(λ) Vᵀ`,
/// found by Newton iteration on the block norm.
pub(crate) fn block_solve(
    vectors: &DMatrix<f64>,
    values: &DVector<f64>,
    rho: &DVector<f64>,
    penalty: f64,
) -> DVector<f64> {
    if rho.norm() <= penalty {
        return DVector::zeros(rho.len());
    }
    let c = vectors.transpose() * rho;
    if penalty == 0.0 {
        // Plain least squares on the block; pseudo-inverse for null directions.
        let scaled = DVector::from_iterator(
            c.len(),
            c.iter()
                .zip(values.iter())
                .map(|(ci, li)| if *li > 1e-14 { ci / li } else { 0.0 }),
        );
        return vectors * scaled;
    }
    // f(t) = Σ c_i² / (λ_i t + penalty)² − 1 is convex and decreasing with
    // f(0) > 0; Newton from t = 0 increases monotonically to the root.
    let mut t = 0.0f64;
    for _ in 0..BLOCK_NEWTON_MAX {
        let mut f = -1.0;
        let mut df = 0.0;
        for (ci, li) in c.iter().zip(values.iter()) {
            let denom = li * t + penalty;
            f += ci * ci / (denom * denom);
            df -= 2.0 * ci * ci * li / (denom * denom * denom);
        }
        if df >= 0.0 {
            break;
        }
        let step = f / df;
        t -= step;
        if step.abs() <= BLOCK_NEWTON_TOL * t.max(1.0) {
            break;
        }
    }
    let scaled = DVector::from_iterator(
        c.len(),
        c.iter()
            .zip(values.iter())
            .map(|(ci, li)| ci * t / (li * t + penalty)),
    );
    vectors * scaled
}

pub(crate) fn block_descent(
    prob: &PenalizedProblem,
    blocks: &Blocks,
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
        for (g, idx) in blocks.members.iter().enumerate() {
            // ρ_g = grad_g + G_gg b_g
            let rho = DVector::from_iterator(
                idx.len(),
                idx.iter().map(|&i| {
                    grad[i] + idx.iter().map(|&j| gram[(i, j)] * b[j]).sum::<f64>()
                }),
            );
            let new = block_solve(
                &blocks.eig_vectors[g],
                &blocks.eig_values[g],
                &rho,
                lambda * blocks.weights[g],
            );
            for (pos, &j) in idx.iter().enumerate() {
                let delta = new[pos] - b[j];
                if delta != 0.0 {
                    b[j] = new[pos];
                    for i in 0..k {
                        grad[i] -= gram[(i, j)] * delta;
                    }
                    max_change = max_change.max(delta.abs());
                }
            }
        }
        if max_change < opts.tolerance {
            return (b, sweep, true);
        }
    }
    (b, opts.max_sweeps, false)
}

pub(crate) fn finish_group(
    d: &Dataset,
    prob: &PenalizedProblem,
    pen: &[f64],
    lambda: f64,
    sweeps: usize,
    converged: bool,
) -> Result<GroupLassoFit> {
    if !converged {
        log::warn!("group lasso did not converge at lambda={lambda} after {sweeps} sweeps");
    }
    let std = prob.complete(pen)?;
    let beta = prob.to_original(&std);
    let groups = d.groups();
    let group_norms = (0..groups.n_groups())
        .map(|g| {
            groups
                .members(g)
                .iter()
                .map(|&j| beta[j] * beta[j])
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    Ok(GroupLassoFit {
        intercept: beta[prob.intercept_index()],
        beta,
        lambda,
        group_norms,
        n_iterations: sweeps,
        converged,
        beta_standardized: std,
    })
}

/// Smallest λ at which every group is zero.
pub fn group_lambda_max(d: &Dataset) -> Result<f64> {
    let prob = PenalizedProblem::new(d)?;
    let blocks = Blocks::new(d, &prob)?;
    Ok(blocks.lambda_max(&prob))
}

pub fn group_lasso_fit(d: &Dataset, lambda: f64) -> Result<GroupLassoFit> {
    group_lasso_fit_with(d, lambda, None, &FitOptions::default())
}

pub fn group_lasso_fit_with(
    d: &Dataset,
    lambda: f64,
    warm_start: Option<&[f64]>,
    opts: &FitOptions,
) -> Result<GroupLassoFit> {
    super::check_lambda(lambda)?;
    let prob = PenalizedProblem::new(d)?;
    let blocks = Blocks::new(d, &prob)?;
    let start: Option<Vec<f64>> =
        warm_start.map(|w| prob.penalized().iter().map(|&j| w[j]).collect());
    let (pen, sweeps, converged) = block_descent(&prob, &blocks, lambda, start.as_deref(), opts);
    finish_group(d, &prob, &pen, lambda, sweeps, converged)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_block_is_soft_threshold() {
        let v = DMatrix::from_element(1, 1, 1.0);
        let l = DVector::from_element(1, 2.0);
        let b = block_solve(&v, &l, &DVector::from_element(1, -3.0), 1.0);
        assert!((b[0] - (-1.0)).abs() < 1e-12);
        let z = block_solve(&v, &l, &DVector::from_element(1, 0.5), 1.0);
        assert_eq!(z[0], 0.0);
    }

    #[test]
    fn block_solution_satisfies_stationarity() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let eig = SymmetricEigen::new(a.clone());
        let rho = DVector::from_vec(vec![3.0, -1.0]);
        let pen = 0.7;
        let b = block_solve(&eig.eigenvectors, &eig.eigenvalues, &rho, pen);
        // A b - ρ + pen b/||b|| = 0
        let resid = &a * &b - &rho + &b * (pen / b.norm());
        assert!(resid.norm() < 1e-9, "{resid}");
    }
}
