//! Bayesian kernel machine regression with hierarchical variable selection.

mod diagnostics;
mod kernel;
mod mcmc;
mod pips;
mod response;

use serde::{Deserialize, Serialize};

pub use diagnostics::{batch_means_se, gelman_rubin};
pub use kernel::gaussian_kernel;
pub use mcmc::mcmc_run;
pub use pips::{compute_pips, PipTable};
pub use response::{
    overall_mixture_effect, univariate_hresponse, ExposureResponse, MixtureEffect, PosteriorSurface,
};

use crate::data::Dataset;
use crate::error::{Error, Result};

/// Which exposures may enter the kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    /// Groups switch on and off; an included group activates one member.
    #[default]
    Hierarchical,
    /// Every exposure is always in the kernel; only scales are sampled.
    AllIncluded,
    /// No exposure enters (`r ≡ 0`); the kernel is constant.
    NoneIncluded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BkmrPriors {
    pub sigma2_shape: f64,
    pub sigma2_scale: f64,
    pub log_lambda_min: f64,
    pub log_lambda_max: f64,
    /// Gamma slab on active `r_m`, truncated to `(0, r_max)`.
    pub r_shape: f64,
    pub r_rate: f64,
    pub r_max: f64,
    /// Prior probability that a group is included.
    pub group_prob: f64,
}

impl Default for BkmrPriors {
    fn default() -> Self {
        BkmrPriors {
            sigma2_shape: 0.001,
            sigma2_scale: 0.001,
            log_lambda_min: -10.0,
            log_lambda_max: 10.0,
            r_shape: 1.0,
            r_rate: 1.0,
            r_max: 100.0,
            group_prob: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BkmrConfig {
    pub n_iter: usize,
    /// Defaults to `n_iter / 2`.
    pub burn_in: Option<usize>,
    pub n_chains: usize,
    /// Random-walk sd on `log lam` and each active `log r_m`.
    pub proposal_sd: f64,
    /// Probability that an iteration's MH move is a selection move.
    pub selection_move_prob: f64,
    pub selection: Selection,
    pub priors: BkmrPriors,
    pub grid_points: usize,
    /// Keep every `thin`-th retained state for posterior queries.
    pub thin: usize,
    pub max_n: usize,
    /// Percentiles for the overall mixture contrast.
    pub mixture_percentiles: Vec<f64>,
}

impl Default for BkmrConfig {
    fn default() -> Self {
        BkmrConfig {
            n_iter: 5000,
            burn_in: None,
            n_chains: 4,
            proposal_sd: 0.3,
            selection_move_prob: 0.5,
            selection: Selection::Hierarchical,
            priors: BkmrPriors::default(),
            grid_points: 50,
            thin: 10,
            max_n: 2000,
            mixture_percentiles: vec![0.25, 0.3, 0.35, 0.4, 0.45, 0.5, 0.55, 0.6, 0.65, 0.7, 0.75],
        }
    }
}

impl BkmrConfig {
    pub fn burn_in(&self) -> usize {
        self.burn_in.unwrap_or(self.n_iter / 2)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_iter == 0 || self.burn_in() >= self.n_iter {
            return Err(Error::Config(format!(
                "bkmr needs burn_in < n_iter (got {} and {})",
                self.burn_in(),
                self.n_iter
            )));
        }
        if self.n_chains == 0 {
            return Err(Error::Config("bkmr.n_chains must be at least 1".into()));
        }
        if !(self.proposal_sd > 0.0) {
            return Err(Error::Config("bkmr.proposal_sd must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.selection_move_prob) {
            return Err(Error::Config("bkmr.selection_move_prob must be in [0,1]".into()));
        }
        let p = &self.priors;
        if !(p.sigma2_shape > 0.0 && p.sigma2_scale > 0.0 && p.r_shape > 0.0 && p.r_rate > 0.0)
            || !(p.r_max > 0.0)
            || !(p.log_lambda_min < p.log_lambda_max)
            || !(p.group_prob > 0.0 && p.group_prob < 1.0)
        {
            return Err(Error::Config("bkmr priors are out of range".into()));
        }
        if self.grid_points < 2 || self.thin == 0 {
            return Err(Error::Config("bkmr.grid_points >= 2 and bkmr.thin >= 1 required".into()));
        }
        if self.mixture_percentiles.iter().any(|q| !(*q > 0.0 && *q < 1.0)) {
            return Err(Error::Config("mixture percentiles must lie in (0,1)".into()));
        }
        Ok(())
    }
}

/// One posterior state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McmcState {
    pub beta: Vec<f64>,
    pub sigma2: f64,
    /// Ratio of the kernel variance to the noise variance.
    pub lam: f64,
    pub r: Vec<f64>,
    pub delta_group: Vec<bool>,
    pub delta_within: Vec<bool>,
}

/// Retained (post burn-in) states of one chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McmcTrace {
    pub chain: usize,
    pub seed: u64,
    pub states: Vec<McmcState>,
    pub log_likelihood: Vec<f64>,
    pub continuous_acceptance: f64,
    pub selection_acceptance: f64,
}

/// Runs `cfg.n_chains` chains; chain `i` is seeded with `seed + i`.
pub fn run_chains(d: &Dataset, cfg: &BkmrConfig, seed: u64) -> Result<Vec<McmcTrace>> {
    (0..cfg.n_chains)
        .map(|i| mcmc::run_chain(d, cfg, seed.wrapping_add(i as u64), i))
        .collect()
}
