//! Posterior summaries of the exposure-response surface `h`.
//!
//! For a posterior state, `E[h(z*) | y, state] = lam · k(z*, Z)ᵀ (I + lam K)⁻¹ (y − Xβ)`.

use faer::Mat;
use serde::{Deserialize, Serialize};

use super::kernel::{cholesky_solve_vec, kernel_value, weighted_sq_dist, Factorizer};
use super::mcmc::{active_scales, kernel_points, Ordering};
use super::{BkmrConfig, McmcState, McmcTrace};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::stats;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExposureResponse {
    pub exposure: usize,
    pub name: String,
    /// Exposure values (original scale) between the 5th and 95th percentiles.
    pub grid: Vec<f64>,
    pub mean: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureEffect {
    pub percentile: f64,
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
}

struct StateQuery {
    lam: f64,
    alpha: Vec<f64>,
    active: Vec<(usize, f64)>,
}

/// Thinned posterior states, each with `(I + lam K)⁻¹(y − Xβ)` solved.
pub struct PosteriorSurface {
    points: super::kernel::PointSet,
    means: Vec<f64>,
    sds: Vec<f64>,
    medians: Vec<f64>,
    queries: Vec<StateQuery>,
}

fn thinned<'a>(traces: &'a [McmcTrace], thin: usize) -> Vec<&'a McmcState> {
    traces
        .iter()
        .flat_map(|t| t.states.iter().step_by(thin))
        .collect()
}

impl PosteriorSurface {
    pub fn new(traces: &[McmcTrace], d: &Dataset, cfg: &BkmrConfig) -> Result<Self> {
        let states = thinned(traces, cfg.thin.max(1));
        if states.is_empty() {
            return Err(Error::InvalidArgument("trace has no retained states".into()));
        }
        let (points, means, sds) = kernel_points(d)?;
        let canonical = Ordering::new(d).exposures();
        let n = d.n();
        let mut factorizer = Factorizer::new(&points);
        let mut chol = Mat::<f64>::zeros(n, n);
        let mut queries = Vec::with_capacity(states.len());
        for s in states {
            let active = active_scales(&canonical, &s.r);
            factorizer.factor_covariance(&points, &active, s.lam, &mut chol)?;
            let resid: Vec<f64> = (0..n)
                .map(|i| {
                    let fitted: f64 = (0..d.c()).map(|j| d.covariates()[(i, j)] * s.beta[j]).sum();
                    d.y()[i] - fitted
                })
                .collect();
            queries.push(StateQuery {
                lam: s.lam,
                alpha: cholesky_solve_vec(&chol, &resid),
                active,
            });
        }
        let medians = (0..d.p())
            .map(|j| stats::median(d.exposures().column(j).as_slice()))
            .collect();
        Ok(PosteriorSurface {
            points,
            means,
            sds,
            medians,
            queries,
        })
    }

    pub fn n_states(&self) -> usize {
        self.queries.len()
    }

    fn standardize(&self, z: &[f64]) -> Vec<f64> {
        z.iter()
            .enumerate()
            .map(|(j, v)| (v - self.means[j]) / self.sds[j])
            .collect()
    }

    /// Posterior-mean `h` at an original-scale exposure vector, per state.
    pub fn h_draws(&self, z: &[f64]) -> Vec<f64> {
        let zs = self.standardize(z);
        self.queries
            .iter()
            .map(|q| {
                let mut acc = 0.0;
                for i in 0..self.points.n {
                    let d = weighted_sq_dist(&zs, self.points.row(i), &q.active);
                    acc += kernel_value(d) * q.alpha[i];
                }
                q.lam * acc
            })
            .collect()
    }

    pub fn univariate(&self, d: &Dataset, exposure: usize, grid_points: usize) -> Result<ExposureResponse> {
        if exposure >= d.p() {
            return Err(Error::InvalidArgument(format!("no exposure {exposure}")));
        }
        let col = stats::sorted_copy(d.exposures().column(exposure).as_slice());
        let lo = stats::quantile_sorted(&col, 0.05);
        let hi = stats::quantile_sorted(&col, 0.95);
        let grid: Vec<f64> = (0..grid_points)
            .map(|k| lo + (hi - lo) * k as f64 / (grid_points - 1) as f64)
            .collect();
        let mut out = ExposureResponse {
            exposure,
            name: d.exposure_names()[exposure].clone(),
            grid: grid.clone(),
            mean: Vec::with_capacity(grid_points),
            lower: Vec::with_capacity(grid_points),
            upper: Vec::with_capacity(grid_points),
        };
        let mut z = self.medians.clone();
        for v in grid {
            z[exposure] = v;
            let draws = self.h_draws(&z);
            let sorted = stats::sorted_copy(&draws);
            out.mean.push(stats::mean(&draws));
            out.lower.push(stats::quantile_sorted(&sorted, 0.025));
            out.upper.push(stats::quantile_sorted(&sorted, 0.975));
        }
        Ok(out)
    }

    pub fn overall(&self, d: &Dataset, percentiles: &[f64]) -> Result<Vec<MixtureEffect>> {
        if percentiles.iter().any(|q| !(*q > 0.0 && *q < 1.0)) {
            return Err(Error::InvalidArgument("percentiles must lie in (0,1)".into()));
        }
        let sorted: Vec<Vec<f64>> = (0..d.p())
            .map(|j| stats::sorted_copy(d.exposures().column(j).as_slice()))
            .collect();
        let at = |q: f64| -> Vec<f64> { sorted.iter().map(|s| stats::quantile_sorted(s, q)).collect() };
        let base = self.h_draws(&at(0.5));
        percentiles
            .iter()
            .map(|&q| {
                let contrast: Vec<f64> = self
                    .h_draws(&at(q))
                    .iter()
                    .zip(&base)
                    .map(|(a, b)| a - b)
                    .collect();
                let s = stats::sorted_copy(&contrast);
                Ok(MixtureEffect {
                    percentile: q,
                    mean: stats::mean(&contrast),
                    lower: stats::quantile_sorted(&s, 0.025),
                    upper: stats::quantile_sorted(&s, 0.975),
                })
            })
            .collect()
    }
}

/// Exposure-response curve for one exposure with the others at their medians.
pub fn univariate_hresponse(
    traces: &[McmcTrace],
    d: &Dataset,
    exposure: usize,
    cfg: &BkmrConfig,
) -> Result<ExposureResponse> {
    PosteriorSurface::new(traces, d, cfg)?.univariate(d, exposure, cfg.grid_points)
}

/// `h(all exposures at percentile q) − h(all at the median)` per percentile.
pub fn overall_mixture_effect(
    traces: &[McmcTrace],
    d: &Dataset,
    percentiles: &[f64],
    cfg: &BkmrConfig,
) -> Result<Vec<MixtureEffect>> {
    PosteriorSurface::new(traces, d, cfg)?.overall(d, percentiles)
}
