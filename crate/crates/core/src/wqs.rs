//! Weighted quantile sum regression.
//!
//! Exposures are quantile-scored on the full sample, weights are estimated
//! on a random training split by bootstrap, and the resulting index is
//! tested on the held-out rows. Per-seed index estimates are combined with
//! Rubin's rules.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::data::{quantile_matrix, Dataset};
use crate::error::{Error, Result};
use crate::linalg::{ols, ResidualMaker};
use crate::optim::{self, BfgsOptions};
use crate::rng::SeedStream;

const Z_975: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    #[default]
    Positive,
    Negative,
}

impl Direction {
    fn matches(self, beta: f64) -> bool {
        match self {
            Direction::Positive => beta > 0.0,
            Direction::Negative => beta < 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WqsConfig {
    pub q: usize,
    pub train_fraction: f64,
    pub n_bootstrap: usize,
    pub direction: Direction,
    /// Importance threshold; `None` means `1/p`.
    pub tau: Option<f64>,
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
}

impl Default for WqsConfig {
    fn default() -> Self {
        WqsConfig {
            q: 4,
            train_fraction: 0.4,
            n_bootstrap: 100,
            direction: Direction::Positive,
            tau: None,
            max_iterations: 500,
            gradient_tolerance: 1e-6,
        }
    }
}

impl WqsConfig {
    pub fn tau_for(&self, p: usize) -> f64 {
        self.tau.unwrap_or(1.0 / p as f64)
    }

    pub fn validate(&self) -> Result<()> {
        if self.q < 2 {
            return Err(Error::Config(format!("wqs.q must be at least 2, got {}", self.q)));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config("wqs.train_fraction must be in (0,1)".into()));
        }
        if self.n_bootstrap == 0 {
            return Err(Error::Config("wqs.n_bootstrap must be at least 1".into()));
        }
        if let Some(t) = self.tau {
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::Config("wqs.tau must be in (0,1)".into()));
            }
        }
        if self.max_iterations == 0 || !(self.gradient_tolerance > 0.0) {
            return Err(Error::Config("wqs optimizer settings must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WqsFit {
    pub weights: Vec<f64>,
    pub index_beta: f64,
    pub index_se: f64,
    pub ci95: (f64, f64),
    /// Residual degrees of freedom of the hold-out regression.
    pub df_resid: usize,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    pub seed: u64,
    pub n_valid_bootstraps: usize,
    pub n_direction_matched: usize,
    /// Set when no bootstrap fit had the configured sign and the weights are
    /// the unfiltered mean.
    pub direction_fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PooledEstimate {
    pub estimate: f64,
    pub within_var: f64,
    pub between_var: f64,
    pub total_var: f64,
    pub df: f64,
    pub ci95: (f64, f64),
    pub m: usize,
}

/// Random disjoint split; the first `floor(frac * n)` shuffled rows train.
/// Both index lists are returned sorted.
pub fn split_train_test(
    n: usize,
    frac: f64,
    rng: &mut SeedStream,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(frac > 0.0 && frac < 1.0) {
        return Err(Error::Split(format!("fraction must be in (0,1), got {frac}")));
    }
    let n_train = (frac * n as f64).floor() as usize;
    if n_train < 2 || n - n_train < 2 {
        return Err(Error::Split(format!(
            "{n} rows at fraction {frac} leave {n_train} training and {} testing rows",
            n - n_train
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut order);
    let mut train = order[..n_train].to_vec();
    let mut test = order[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Sufficient statistics of one bootstrap sample after profiling out the
/// covariates: with `Q̃ = P Q`, `ỹ = P y`, the index fit only needs
/// `A = Q̃ᵀQ̃`, `b = Q̃ᵀỹ` and `ỹᵀỹ`.
struct ProfiledSample {
    a: DMatrix<f64>,
    b: DVector<f64>,
    yy: f64,
    n: f64,
}

impl ProfiledSample {
    fn new(q: &DMatrix<f64>, x: &DMatrix<f64>, y: &DVector<f64>) -> Result<Self> {
        let resid = ResidualMaker::new(x)?;
        let qt = resid.apply(q);
        let yt = resid.apply_vec(y);
        Ok(ProfiledSample {
            a: qt.transpose() * &qt,
            b: qt.transpose() * &yt,
            yy: yt.norm_squared(),
            n: y.len() as f64,
        })
    }

    /// Index slope for weights `w`, or `None` if the index is degenerate.
    fn slope(&self, w: &DVector<f64>) -> Option<f64> {
        let ss = w.dot(&(&self.a * w));
        (ss > 1e-12 * self.a.trace().max(1e-300)).then(|| w.dot(&self.b) / ss)
    }

    /// `½ log(RSS/n)` as a function of softmax logits, with gradient.
    fn objective(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        let w = softmax(theta);
        let aw = &self.a * &w;
        let ss = w.dot(&aw);
        let sy = w.dot(&self.b);
        if !(ss > 0.0) {
            grad.iter_mut().for_each(|g| *g = f64::NAN);
            return f64::NAN;
        }
        let beta = sy / ss;
        let rss = (self.yy - sy * sy / ss).max(f64::MIN_POSITIVE);
        // d rss / d w = -2 β Q̃ᵀ r,   Q̃ᵀ r = b − β A w
        let gw: Vec<f64> = (0..w.len())
            .map(|j| -beta * (self.b[j] - beta * aw[j]) / rss)
            .collect();
        let wg: f64 = w.iter().zip(&gw).map(|(a, b)| a * b).sum();
        for j in 0..w.len() {
            grad[j] = w[j] * (gw[j] - wg);
        }
        0.5 * (rss / self.n).ln()
    }
}

pub fn softmax(theta: &[f64]) -> DVector<f64> {
    let m = theta.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let e: Vec<f64> = theta.iter().map(|t| (t - m).exp()).collect();
    let s: f64 = e.iter().sum();
    DVector::from_iterator(e.len(), e.iter().map(|v| v / s))
}

/// Outcome of the bootstrap weight estimation.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightEstimate {
    pub weights: Vec<f64>,
    pub bootstrap_weights: Vec<Vec<f64>>,
    pub bootstrap_betas: Vec<f64>,
    pub n_direction_matched: usize,
    pub direction_fallback: bool,
}

/// Bootstrap estimate of the simplex weights on training rows whose
/// exposures already hold quantile scores.
pub fn estimate_weights(
    train: &Dataset,
    cfg: &WqsConfig,
    rng: &mut SeedStream,
) -> Result<WeightEstimate> {
    let n = train.n();
    let p = train.p();
    let c = train.c();
    if n < p + c + 1 {
        return Err(Error::Split(format!(
            "{n} training rows are too few for {p} exposures and {c} covariates"
        )));
    }
    let opts = BfgsOptions {
        max_iterations: cfg.max_iterations,
        gradient_tolerance: cfg.gradient_tolerance,
    };
    let mut boot_w = Vec::with_capacity(cfg.n_bootstrap);
    let mut boot_b = Vec::with_capacity(cfg.n_bootstrap);
    for _ in 0..cfg.n_bootstrap {
        let rows: Vec<usize> = (0..n).map(|_| rng.index(n)).collect();
        let sample = train.subset_rows(&rows);
        let Ok(prof) = ProfiledSample::new(sample.exposures(), sample.covariates(), sample.y())
        else {
            continue;
        };
        let Some(res) = optim::minimize(|t, g| prof.objective(t, g), &vec![0.0; p], &opts) else {
            continue;
        };
        let w = softmax(&res.x);
        let Some(beta) = prof.slope(&w) else {
            continue;
        };
        boot_w.push(w.iter().copied().collect::<Vec<f64>>());
        boot_b.push(beta);
    }
    if boot_w.is_empty() {
        return Err(Error::Optimizer(format!(
            "all {} bootstrap fits failed",
            cfg.n_bootstrap
        )));
    }
    let matched: Vec<usize> = (0..boot_w.len())
        .filter(|&i| cfg.direction.matches(boot_b[i]))
        .collect();
    let (use_idx, fallback) = if matched.is_empty() {
        ((0..boot_w.len()).collect::<Vec<_>>(), true)
    } else {
        (matched.clone(), false)
    };
    let mut weights = vec![0.0; p];
    for &i in &use_idx {
        for j in 0..p {
            weights[j] += boot_w[i][j];
        }
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    Ok(WeightEstimate {
        weights,
        bootstrap_weights: boot_w,
        bootstrap_betas: boot_b,
        n_direction_matched: matched.len(),
        direction_fallback: fallback,
    })
}

/// Row-wise `Σ_j w_j q_ij`.
pub fn wqs_index(weights: &[f64], scores: &DMatrix<f64>) -> Result<DVector<f64>> {
    if weights.len() != scores.ncols() {
        return Err(Error::InvalidArgument(format!(
            "{} weights for {} exposure columns",
            weights.len(),
            scores.ncols()
        )));
    }
    Ok(scores * DVector::from_column_slice(weights))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndexRegression {
    pub beta: f64,
    pub se: f64,
    pub ci95: (f64, f64),
    pub df_resid: usize,
}

/// OLS of the outcome on covariates plus the index, over the test rows.
pub fn fit_index_regression(test: &Dataset, index: &DVector<f64>) -> Result<IndexRegression> {
    let n = test.n();
    let c = test.c();
    if index.len() != n {
        return Err(Error::InvalidArgument("index length differs from test rows".into()));
    }
    if n < c + 2 {
        return Err(Error::Split(format!(
            "{n} test rows are too few for {c} covariates plus the index"
        )));
    }
    let mut design = DMatrix::zeros(n, c + 1);
    design.columns_mut(0, c).copy_from(test.covariates());
    design.set_column(c, index);
    let fit = ols(&design, test.y())?;
    let beta = fit.coef[c];
    let se = fit.se[c];
    Ok(IndexRegression {
        beta,
        se,
        ci95: (beta - Z_975 * se, beta + Z_975 * se),
        df_resid: fit.df_resid,
    })
}

/// Exposures whose weight strictly exceeds `tau`.
pub fn important_components(weights: &[f64], tau: f64) -> Vec<usize> {
    weights
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > tau)
        .map(|(j, _)| j)
        .collect()
}

/// Rubin's rules with the Barnard–Rubin small-sample degrees of freedom.
/// `df_complete` is the complete-data residual degrees of freedom.
pub fn rubins_pool(estimates: &[f64], variances: &[f64], df_complete: f64) -> Result<PooledEstimate> {
    let m = estimates.len();
    if m < 2 {
        return Err(Error::TooFewSeeds(m));
    }
    if variances.len() != m {
        return Err(Error::InvalidArgument("estimate and variance counts differ".into()));
    }
    if variances.iter().any(|v| !(*v >= 0.0)) {
        return Err(Error::InvalidArgument("variances must be non-negative".into()));
    }
    let mf = m as f64;
    let estimate = estimates.iter().sum::<f64>() / mf;
    let within_var = variances.iter().sum::<f64>() / mf;
    let between_var = estimates
        .iter()
        .map(|e| (e - estimate) * (e - estimate))
        .sum::<f64>()
        / (mf - 1.0);
    let inflated = (1.0 + 1.0 / mf) * between_var;
    let total_var = within_var + inflated;
    let df = barnard_rubin_df(mf, inflated, total_var, df_complete);
    let half = if total_var > 0.0 {
        t_quantile_975(df) * total_var.sqrt()
    } else {
        0.0
    };
    Ok(PooledEstimate {
        estimate,
        within_var,
        between_var,
        total_var,
        df,
        ci95: (estimate - half, estimate + half),
        m,
    })
}

fn barnard_rubin_df(m: f64, inflated_between: f64, total: f64, df_complete: f64) -> f64 {
    let observed = |gamma: f64| (df_complete + 1.0) / (df_complete + 3.0) * df_complete * (1.0 - gamma);
    if !(total > 0.0) {
        return observed(0.0);
    }
    let gamma = inflated_between / total;
    if gamma <= 0.0 {
        return observed(0.0);
    }
    let old = (m - 1.0) / (gamma * gamma);
    let obs = observed(gamma);
    if obs <= 0.0 {
        return old;
    }
    old * obs / (old + obs)
}

fn t_quantile_975(df: f64) -> f64 {
    if !df.is_finite() || df > 1e7 {
        return Z_975;
    }
    StudentsT::new(0.0, 1.0, df)
        .map(|t| t.inverse_cdf(0.975))
        .unwrap_or(Z_975)
}

/// Split, quantile-score, estimate weights, and test the index on the
/// held-out rows, all from one seed.
pub fn wqs_run(d: &Dataset, cfg: &WqsConfig, seed: u64) -> Result<WqsFit> {
    cfg.validate().map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut rng = SeedStream::new(seed);
    let scores = quantile_matrix(d.exposures(), cfg.q, d.exposure_names())?;
    let scored = d.with_exposures(scores)?;
    let (train_idx, test_idx) = split_train_test(d.n(), cfg.train_fraction, &mut rng)?;
    let train = scored.subset_rows(&train_idx);
    let est = estimate_weights(&train, cfg, &mut rng)?;
    let test = scored.subset_rows(&test_idx);
    let index = wqs_index(&est.weights, test.exposures())?;
    let reg = fit_index_regression(&test, &index)?;
    Ok(WqsFit {
        weights: est.weights,
        index_beta: reg.beta,
        index_se: reg.se,
        ci95: reg.ci95,
        df_resid: reg.df_resid,
        train_indices: train_idx,
        test_indices: test_idx,
        seed,
        n_valid_bootstraps: est.bootstrap_weights.len(),
        n_direction_matched: est.n_direction_matched,
        direction_fallback: est.direction_fallback,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_sizes() {
        let mut rng = SeedStream::new(1);
        let (tr, te) = split_train_test(1003, 0.4, &mut rng).unwrap();
        assert_eq!((tr.len(), te.len()), (401, 602));
        let mut all: Vec<usize> = tr.iter().chain(te.iter()).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..1003).collect::<Vec<_>>());
        assert!(split_train_test(4, 0.4, &mut rng).is_err());
    }

    #[test]
    fn important_components_is_strict() {
        let p = 18;
        let uniform = vec![1.0 / p as f64; p];
        assert!(important_components(&uniform, 1.0 / p as f64).is_empty());
        let mut w = vec![0.0; p];
        w[0] = 0.9;
        w[1] = 0.1;
        assert_eq!(important_components(&w, 1.0 / 18.0), vec![0, 1]);
    }

    #[test]
    fn index_uniform_and_unit_weights() {
        let q = DMatrix::from_element(5, 3, 2.0);
        let idx = wqs_index(&[1.0 / 3.0; 3], &q).unwrap();
        assert!(idx.iter().all(|v| (v - 2.0).abs() < 1e-15));
        let q = DMatrix::from_row_slice(2, 2, &[1.0, 3.0, 2.0, 0.0]);
        assert_eq!(wqs_index(&[1.0, 0.0], &q).unwrap().as_slice(), &[1.0, 2.0]);
        assert!(wqs_index(&[1.0], &q).is_err());
    }

    #[test]
    fn rubin_hand_cases() {
        let p = rubins_pool(&[1.0, 1.0, 1.0], &[0.5, 0.5, 0.5], 50.0).unwrap();
        assert_eq!((p.estimate, p.between_var, p.total_var), (1.0, 0.0, 0.5));
        let p = rubins_pool(&[0.0, 2.0], &[1.0, 1.0], 50.0).unwrap();
        assert_eq!((p.estimate, p.within_var, p.between_var, p.total_var), (1.0, 1.0, 2.0, 4.0));
        assert!(matches!(rubins_pool(&[1.0], &[1.0], 50.0), Err(Error::TooFewSeeds(1))));
    }

    #[test]
    fn softmax_on_simplex() {
        let w = softmax(&[0.3, -2.0, 5.0, 0.0]);
        assert!((w.sum() - 1.0).abs() < 1e-15);
        assert!(w.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }
}
