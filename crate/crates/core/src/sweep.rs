//! Multi-seed sweeps and the across-seed summaries built from them.
//!
//! Every seed gets its own generator; results are keyed by seed and sorted
//! before anything is aggregated, so the thread count never shows up in the
//! output.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bkmr::{
    compute_pips, gelman_rubin, run_chains, BkmrConfig, ExposureResponse, MixtureEffect, PipTable,
    PosteriorSurface,
};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::penalized::{
    cv_group_lasso_with, cv_lasso_with, refit_group_lasso, refit_lasso, CvCurve, LambdaGrid,
    PenalizedConfig,
};
use crate::rng::SeedStream;
use crate::stats::{self, Spread};
use crate::wqs::{rubins_pool, wqs_run, PooledEstimate, WqsConfig, WqsFit};

/// Bumped whenever the layout of saved results or summaries changes.
pub const FORMAT_VERSION: u32 = 1;

/// R̂ above this marks a BKMR seed as not converged.
pub const RHAT_THRESHOLD: f64 = 1.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Lasso,
    GroupLasso,
    Wqs,
    Bkmr,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Lasso => "lasso",
            ModelKind::GroupLasso => "group_lasso",
            ModelKind::Wqs => "wqs",
            ModelKind::Bkmr => "bkmr",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "lasso" => Ok(ModelKind::Lasso),
            "group_lasso" | "grouplasso" => Ok(ModelKind::GroupLasso),
            "wqs" => Ok(ModelKind::Wqs),
            "bkmr" => Ok(ModelKind::Bkmr),
            other => Err(Error::Config(format!(
                "unknown model '{other}' (expected lasso, group_lasso, wqs or bkmr)"
            ))),
        }
    }
}

pub fn default_seeds() -> Vec<u64> {
    (1..=100).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub model: ModelKind,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub penalized: PenalizedConfig,
    #[serde(default)]
    pub wqs: WqsConfig,
    #[serde(default)]
    pub bkmr: BkmrConfig,
    /// Worker threads. Not written to results, which must not depend on it.
    #[serde(default = "one", skip_serializing)]
    pub parallelism: usize,
}

fn one() -> usize {
    1
}

impl SweepConfig {
    pub fn new(model: ModelKind) -> Self {
        SweepConfig {
            model,
            seeds: default_seeds(),
            penalized: PenalizedConfig::default(),
            wqs: WqsConfig::default(),
            bkmr: BkmrConfig::default(),
            parallelism: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("the seed list is empty".into()));
        }
        let mut seen = HashSet::with_capacity(self.seeds.len());
        for s in &self.seeds {
            if !seen.insert(*s) {
                return Err(Error::Config(format!("seed {s} appears more than once")));
            }
        }
        if self.parallelism == 0 {
            return Err(Error::Config("parallelism must be at least 1".into()));
        }
        match self.model {
            ModelKind::Lasso | ModelKind::GroupLasso => self.penalized.validate(),
            ModelKind::Wqs => self.wqs.validate(),
            ModelKind::Bkmr => self.bkmr.validate(),
        }
    }

    /// Checks that depend on the data as well as the configuration.
    pub fn validate_for(&self, d: &Dataset) -> Result<()> {
        self.validate()?;
        match self.model {
            ModelKind::Lasso | ModelKind::GroupLasso => {
                if d.n() < 2 * self.penalized.folds {
                    return Err(Error::Config(format!(
                        "{} folds need at least {} rows, got {}",
                        self.penalized.folds,
                        2 * self.penalized.folds,
                        d.n()
                    )));
                }
            }
            ModelKind::Wqs => {}
            ModelKind::Bkmr => {
                if d.n() > self.bkmr.max_n {
                    return Err(Error::Config(format!(
                        "bkmr.max_n is {} but the data have {} rows",
                        self.bkmr.max_n,
                        d.n()
                    )));
                }
            }
        }
        Ok(())
    }
}

/// CV curve and full-data refit for one seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenalizedSeed {
    pub seed: u64,
    pub curve: CvCurve,
    /// Original-scale coefficients in `[exposures..., covariates...]` order.
    pub beta: Vec<f64>,
    /// Original-scale block norms; group lasso only.
    pub group_norms: Option<Vec<f64>>,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BkmrSeed {
    pub seed: u64,
    pub pips: PipTable,
    pub curves: Vec<ExposureResponse>,
    pub overall: Vec<MixtureEffect>,
    /// R̂ of the log-likelihood across chains; absent with one chain or
    /// degenerate traces.
    pub rhat: Option<f64>,
    pub continuous_acceptance: f64,
    pub selection_acceptance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum SeedOutput {
    Penalized(PenalizedSeed),
    Wqs(WqsFit),
    Bkmr(BkmrSeed),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedFailure {
    pub seed: u64,
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedOutcome {
    Ok(SeedOutput),
    Failed(SeedFailure),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub seed: u64,
    pub outcome: SeedOutcome,
}

/// Everything `summarize` needs to rebuild a summary without refitting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResults {
    pub version: u32,
    pub config: SweepConfig,
    pub column_names: Vec<String>,
    pub penalty_mask: Vec<bool>,
    pub exposure_names: Vec<String>,
    pub group_names: Vec<String>,
    pub group_assignments: Vec<usize>,
    pub records: Vec<SeedRecord>,
}

impl SweepResults {
    pub fn successes(&self) -> impl Iterator<Item = &SeedOutput> {
        self.records.iter().filter_map(|r| match &r.outcome {
            SeedOutcome::Ok(o) => Some(o),
            SeedOutcome::Failed(_) => None,
        })
    }

    pub fn failures(&self) -> Vec<SeedFailure> {
        self.records
            .iter()
            .filter_map(|r| match &r.outcome {
                SeedOutcome::Failed(f) => Some(f.clone()),
                SeedOutcome::Ok(_) => None,
            })
            .collect()
    }
}

fn run_penalized(d: &Dataset, cfg: &SweepConfig, seed: u64) -> Result<SeedOutput> {
    let pc = &cfg.penalized;
    let opts = pc.fit_options();
    let mut rng = SeedStream::new(seed);
    let group = cfg.model == ModelKind::GroupLasso;
    let grid = if group {
        LambdaGrid::for_group_lasso(d, pc.lambda_ratio, pc.n_lambda)?
    } else {
        LambdaGrid::for_lasso(d, pc.lambda_ratio, pc.n_lambda)?
    };
    if group {
        let curve = cv_group_lasso_with(d, pc.folds, &grid, pc.rule, &mut rng, &opts)?;
        let fit = refit_group_lasso(d, &curve, &opts)?;
        Ok(SeedOutput::Penalized(PenalizedSeed {
            seed,
            curve,
            beta: fit.beta,
            group_norms: Some(fit.group_norms),
            converged: fit.converged,
        }))
    } else {
        let curve = cv_lasso_with(d, pc.folds, &grid, pc.rule, &mut rng, &opts)?;
        let fit = refit_lasso(d, &curve, &opts)?;
        Ok(SeedOutput::Penalized(PenalizedSeed {
            seed,
            curve,
            beta: fit.beta,
            group_norms: None,
            converged: fit.converged,
        }))
    }
}

fn run_bkmr(d: &Dataset, cfg: &BkmrConfig, seed: u64) -> Result<SeedOutput> {
    let traces = run_chains(d, cfg, seed)?;
    let pips = compute_pips(&traces, d.groups())?;
    let surface = PosteriorSurface::new(&traces, d, cfg)?;
    let curves = (0..d.p())
        .map(|j| surface.univariate(d, j, cfg.grid_points))
        .collect::<Result<Vec<_>>>()?;
    let overall = surface.overall(d, &cfg.mixture_percentiles)?;
    let rhat = if traces.len() >= 2 {
        let ll: Vec<Vec<f64>> = traces.iter().map(|t| t.log_likelihood.clone()).collect();
        gelman_rubin(&ll).ok()
    } else {
        None
    };
    let k = traces.len() as f64;
    Ok(SeedOutput::Bkmr(BkmrSeed {
        seed,
        pips,
        curves,
        overall,
        rhat,
        continuous_acceptance: traces.iter().map(|t| t.continuous_acceptance).sum::<f64>() / k,
        selection_acceptance: traces.iter().map(|t| t.selection_acceptance).sum::<f64>() / k,
    }))
}

/// Fits the configured model under one seed.
pub fn run_seed(d: &Dataset, cfg: &SweepConfig, seed: u64) -> Result<SeedOutput> {
    match cfg.model {
        ModelKind::Lasso | ModelKind::GroupLasso => run_penalized(d, cfg, seed),
        ModelKind::Wqs => Ok(SeedOutput::Wqs(wqs_run(d, &cfg.wqs, seed)?)),
        ModelKind::Bkmr => run_bkmr(d, &cfg.bkmr, seed),
    }
}

/// Runs every seed on a pool of `cfg.parallelism` threads. Failed seeds are
/// recorded in place; the sweep only fails if every seed does.
pub fn run_sweep(d: &Dataset, cfg: &SweepConfig) -> Result<SweepResults> {
    cfg.validate_for(d)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallelism)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))?;
    let mut records: Vec<SeedRecord> = pool.install(|| {
        cfg.seeds
            .par_iter()
            .map(|&seed| {
                let outcome = match run_seed(d, cfg, seed) {
                    Ok(o) => SeedOutcome::Ok(o),
                    Err(e) => {
                        log::warn!("seed {seed} failed: {e}");
                        SeedOutcome::Failed(SeedFailure {
                            seed,
                            code: e.code().to_string(),
                            message: e.to_string(),
                        })
                    }
                };
                SeedRecord { seed, outcome }
            })
            .collect()
    });
    records.sort_by_key(|r| r.seed);
    let results = SweepResults {
        version: FORMAT_VERSION,
        config: cfg.clone(),
        column_names: d.column_names(),
        penalty_mask: d.penalty_mask().to_vec(),
        exposure_names: d.exposure_names().to_vec(),
        group_names: d.groups().names().to_vec(),
        group_assignments: d.groups().assignments().to_vec(),
        records,
    };
    if results.successes().next().is_none() {
        return Err(Error::NoSuccessfulSeeds {
            failures: results.records.len(),
        });
    }
    Ok(results)
}

/// Across-seed record for one coefficient, weight or group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSummary {
    pub name: String,
    /// Seeds with a nonzero coefficient (penalized models) or a weight above
    /// τ (WQS).
    pub count: usize,
    pub proportion: f64,
    #[serde(flatten)]
    pub spread: Spread,
    /// One value per successful seed, in seed order.
    pub values: Vec<f64>,
}

impl CoefficientSummary {
    fn build(name: &str, values: Vec<f64>, hit: impl Fn(f64) -> bool) -> Self {
        let count = values.iter().filter(|&&v| hit(v)).count();
        CoefficientSummary {
            name: name.to_string(),
            count,
            proportion: count as f64 / values.len() as f64,
            spread: Spread::of(&values),
            values,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedCvCurve {
    pub seed: u64,
    pub lambda: Vec<f64>,
    pub mean_error: Vec<f64>,
    pub se_error: Vec<f64>,
    pub chosen_lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenalizedSummary {
    pub seeds: Vec<u64>,
    pub coefficients: Vec<CoefficientSummary>,
    /// Group-norm records; group lasso only.
    pub groups: Option<Vec<CoefficientSummary>>,
    pub chosen_lambda: Vec<f64>,
    pub chosen_lambda_spread: Spread,
    pub distinct_lambdas: usize,
    /// Nonzero penalized coefficients per seed.
    pub retained_counts: Vec<usize>,
    /// `retained_histogram[k]` = seeds retaining exactly `k` coefficients.
    pub retained_histogram: Vec<usize>,
    pub cv_curves: Vec<SeedCvCurve>,
}

/// Zero/nonzero proportions and spreads of the penalized coefficients.
/// `names` and `mask` follow the `[exposures..., covariates...]` layout;
/// group names are needed only when the fits carry group norms.
pub fn summarize_coefficients(
    fits: &[PenalizedSeed],
    names: &[String],
    mask: &[bool],
    group_names: &[String],
) -> Result<PenalizedSummary> {
    if fits.is_empty() {
        return Err(Error::InvalidArgument("no successful seeds to summarize".into()));
    }
    if fits.iter().any(|f| f.beta.len() != names.len()) || mask.len() != names.len() {
        return Err(Error::InvalidArgument("coefficient layout mismatch".into()));
    }
    let penalized: Vec<usize> = (0..mask.len()).filter(|&j| mask[j]).collect();
    let coefficients = penalized
        .iter()
        .map(|&j| {
            let values = fits.iter().map(|f| f.beta[j]).collect();
            CoefficientSummary::build(&names[j], values, |v| v != 0.0)
        })
        .collect();
    let groups = if fits.iter().all(|f| f.group_norms.is_some()) {
        let g = group_names.len();
        if fits.iter().any(|f| f.group_norms.as_ref().map_or(0, Vec::len) != g) {
            return Err(Error::InvalidArgument("group layout mismatch".into()));
        }
        Some(
            (0..g)
                .map(|k| {
                    let values = fits
                        .iter()
                        .map(|f| f.group_norms.as_ref().map_or(0.0, |n| n[k]))
                        .collect();
                    CoefficientSummary::build(&group_names[k], values, |v| v != 0.0)
                })
                .collect(),
        )
    } else {
        None
    };
    let chosen_lambda: Vec<f64> = fits.iter().map(|f| f.curve.chosen_lambda).collect();
    let mut distinct = stats::sorted_copy(&chosen_lambda);
    distinct.dedup();
    let retained_counts: Vec<usize> = fits
        .iter()
        .map(|f| penalized.iter().filter(|&&j| f.beta[j] != 0.0).count())
        .collect();
    let mut retained_histogram = vec![0; penalized.len() + 1];
    for &k in &retained_counts {
        retained_histogram[k] += 1;
    }
    let cv_curves = fits
        .iter()
        .map(|f| SeedCvCurve {
            seed: f.seed,
            lambda: f.curve.grid.values.clone(),
            mean_error: f.curve.mean_error.clone(),
            se_error: f.curve.se_error.clone(),
            chosen_lambda: f.curve.chosen_lambda,
        })
        .collect();
    Ok(PenalizedSummary {
        seeds: fits.iter().map(|f| f.seed).collect(),
        coefficients,
        groups,
        chosen_lambda_spread: Spread::of(&chosen_lambda),
        chosen_lambda,
        distinct_lambdas: distinct.len(),
        retained_counts,
        retained_histogram,
        cv_curves,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexEstimate {
    pub seed: u64,
    pub beta: f64,
    pub se: f64,
    pub lower: f64,
    pub upper: f64,
}

impl IndexEstimate {
    pub fn excludes_zero(&self) -> bool {
        self.lower > 0.0 || self.upper < 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightSummary {
    pub seeds: Vec<u64>,
    pub tau: f64,
    pub weights: Vec<CoefficientSummary>,
    /// Seeds in which each exposure had the largest weight; ties credit
    /// every tied exposure.
    pub largest_counts: Vec<usize>,
    pub index: Vec<IndexEstimate>,
    pub n_ci_excluding_zero: usize,
    pub pooled: PooledEstimate,
    pub direction_fallbacks: usize,
}

/// Exceedance proportions, spreads and largest-weight counts of the WQS
/// weights, plus the Rubin-pooled index estimate.
pub fn summarize_weights(fits: &[WqsFit], names: &[String], tau: f64) -> Result<WeightSummary> {
    if fits.is_empty() {
        return Err(Error::InvalidArgument("no successful seeds to summarize".into()));
    }
    let p = names.len();
    if fits.iter().any(|f| f.weights.len() != p) {
        return Err(Error::InvalidArgument("weight vector length mismatch".into()));
    }
    let weights = (0..p)
        .map(|j| {
            let values = fits.iter().map(|f| f.weights[j]).collect();
            CoefficientSummary::build(&names[j], values, |w| w > tau)
        })
        .collect();
    let mut largest_counts = vec![0; p];
    for f in fits {
        let top = f.weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for (j, &w) in f.weights.iter().enumerate() {
            if w == top {
                largest_counts[j] += 1;
            }
        }
    }
    let index: Vec<IndexEstimate> = fits
        .iter()
        .map(|f| IndexEstimate {
            seed: f.seed,
            beta: f.index_beta,
            se: f.index_se,
            lower: f.ci95.0,
            upper: f.ci95.1,
        })
        .collect();
    let estimates: Vec<f64> = fits.iter().map(|f| f.index_beta).collect();
    let variances: Vec<f64> = fits.iter().map(|f| f.index_se * f.index_se).collect();
    let df_com = fits.iter().map(|f| f.df_resid).min().unwrap_or(0) as f64;
    let pooled = rubins_pool(&estimates, &variances, df_com)?;
    Ok(WeightSummary {
        seeds: fits.iter().map(|f| f.seed).collect(),
        tau,
        weights,
        largest_counts,
        n_ci_excluding_zero: index.iter().filter(|e| e.excludes_zero()).count(),
        index,
        pooled,
        direction_fallbacks: fits.iter().filter(|f| f.direction_fallback).count(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipRow {
    pub group: String,
    /// Exposure name; `None` on group rows.
    pub exposure: Option<String>,
    pub min: f64,
    pub median: f64,
    pub max: f64,
    pub values: Vec<f64>,
}

impl PipRow {
    fn new(group: &str, exposure: Option<&str>, values: Vec<f64>) -> Self {
        let s = Spread::of(&values);
        PipRow {
            group: group.to_string(),
            exposure: exposure.map(str::to_string),
            min: s.min,
            median: s.median,
            max: s.max,
            values,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipSummary {
    pub seeds: Vec<u64>,
    pub groups: Vec<PipRow>,
    /// Conditional PIPs, grouped by group in group order.
    pub exposures: Vec<PipRow>,
}

/// Minimum, median and maximum of group and conditional PIPs across seeds.
pub fn summarize_pips(
    seeds: &[u64],
    tables: &[PipTable],
    exposure_names: &[String],
    group_names: &[String],
    group_assignments: &[usize],
) -> Result<PipSummary> {
    if tables.is_empty() || seeds.len() != tables.len() {
        return Err(Error::InvalidArgument("need one PIP table per successful seed".into()));
    }
    let g = group_names.len();
    let p = exposure_names.len();
    if group_assignments.len() != p
        || tables
            .iter()
            .any(|t| t.group_pips.len() != g || t.conditional_pips.len() != p)
    {
        return Err(Error::InvalidArgument("PIP table layout mismatch".into()));
    }
    let groups = (0..g)
        .map(|k| PipRow::new(&group_names[k], None, tables.iter().map(|t| t.group_pips[k]).collect()))
        .collect();
    let mut exposures = Vec::with_capacity(p);
    for k in 0..g {
        for j in (0..p).filter(|&j| group_assignments[j] == k) {
            exposures.push(PipRow::new(
                &group_names[k],
                Some(&exposure_names[j]),
                tables.iter().map(|t| t.conditional_pips[j]).collect(),
            ));
        }
    }
    Ok(PipSummary {
        seeds: seeds.to_vec(),
        groups,
        exposures,
    })
}

/// Two decimals; values that would print as 0.00 keep one significant digit.
pub fn format_pip(v: f64) -> String {
    if v != 0.0 && v.abs() < 0.005 {
        let digits = (-v.abs().log10()).ceil() as usize;
        format!("{v:.digits$}")
    } else {
        format!("{v:.2}")
    }
}

/// LaTeX tabular rows in the layout of a published PIP table: group rows,
/// then congener rows with the group label on the first member only.
pub fn format_pip_table(s: &PipSummary) -> String {
    let mut out = String::new();
    out.push_str("Group & & Minimum & Median & Maximum \\\\\n");
    for r in &s.groups {
        out.push_str(&format!(
            "{} && {} & {} & {} \\\\\n",
            r.group,
            format_pip(r.min),
            format_pip(r.median),
            format_pip(r.max)
        ));
    }
    out.push_str("Group & Congener & Minimum & Median & Maximum \\\\\n");
    let mut last: Option<&str> = None;
    for r in &s.exposures {
        let label = if last == Some(r.group.as_str()) { "" } else { r.group.as_str() };
        last = Some(r.group.as_str());
        out.push_str(&format!(
            "{} & {} & {} & {} & {} \\\\\n",
            label,
            r.exposure.as_deref().unwrap_or(""),
            format_pip(r.min),
            format_pip(r.median),
            format_pip(r.max)
        ));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveBundle {
    pub exposure: usize,
    pub name: String,
    pub grid: Vec<f64>,
    /// Posterior-mean curve per seed, in seed order.
    pub per_seed: Vec<Vec<f64>>,
    pub median: Vec<f64>,
}

/// Per-point across-seed medians of exposure-response curves. Every seed
/// must report the same exposures on the same grids.
pub fn summarize_curves(results: &[Vec<ExposureResponse>]) -> Result<Vec<CurveBundle>> {
    let first = results
        .first()
        .ok_or_else(|| Error::InvalidArgument("no curves to summarize".into()))?;
    for other in &results[1..] {
        let same = other.len() == first.len()
            && other
                .iter()
                .zip(first)
                .all(|(a, b)| a.exposure == b.exposure && a.grid == b.grid && a.mean.len() == b.grid.len());
        if !same {
            return Err(Error::InvalidArgument(
                "exposure-response grids differ between seeds".into(),
            ));
        }
    }
    Ok(first
        .iter()
        .enumerate()
        .map(|(e, head)| {
            let per_seed: Vec<Vec<f64>> = results.iter().map(|r| r[e].mean.clone()).collect();
            let median = (0..head.grid.len())
                .map(|k| stats::median(&per_seed.iter().map(|c| c[k]).collect::<Vec<_>>()))
                .collect();
            CurveBundle {
                exposure: head.exposure,
                name: head.name.clone(),
                grid: head.grid.clone(),
                per_seed,
                median,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverallBundle {
    pub percentiles: Vec<f64>,
    pub per_seed: Vec<Vec<MixtureEffect>>,
    pub median: Vec<f64>,
    /// Seeds whose interval at every percentile away from the median covers 0.
    pub null_seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BkmrSummary {
    pub pips: PipSummary,
    pub curves: Vec<CurveBundle>,
    pub overall: OverallBundle,
    pub rhat: Vec<Option<f64>>,
    /// Seeds with R̂ above the threshold or without a usable R̂.
    pub unconverged_seeds: Vec<u64>,
}

fn summarize_overall(seeds: &[u64], runs: &[&BkmrSeed]) -> Result<OverallBundle> {
    let first = &runs[0].overall;
    let percentiles: Vec<f64> = first.iter().map(|m| m.percentile).collect();
    if runs
        .iter()
        .any(|r| r.overall.iter().map(|m| m.percentile).ne(percentiles.iter().copied()))
    {
        return Err(Error::InvalidArgument("mixture percentiles differ between seeds".into()));
    }
    let median = (0..percentiles.len())
        .map(|k| stats::median(&runs.iter().map(|r| r.overall[k].mean).collect::<Vec<_>>()))
        .collect();
    let null_seeds = seeds
        .iter()
        .zip(runs)
        .filter(|(_, r)| {
            r.overall
                .iter()
                .filter(|m| m.percentile != 0.5)
                .all(|m| m.lower <= 0.0 && m.upper >= 0.0)
        })
        .map(|(s, _)| *s)
        .collect();
    Ok(OverallBundle {
        percentiles,
        per_seed: runs.iter().map(|r| r.overall.clone()).collect(),
        median,
        null_seeds,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub version: u32,
    pub model: ModelKind,
    pub n_seeds: usize,
    pub seeds: Vec<u64>,
    pub failures: Vec<SeedFailure>,
    pub penalized: Option<PenalizedSummary>,
    pub wqs: Option<WeightSummary>,
    pub bkmr: Option<BkmrSummary>,
}

/// Builds the model-appropriate summary from saved per-seed results.
pub fn summarize(results: &SweepResults) -> Result<SweepSummary> {
    let failures = results.failures();
    let ok: Vec<&SeedOutput> = results.successes().collect();
    if ok.is_empty() {
        return Err(Error::NoSuccessfulSeeds {
            failures: failures.len(),
        });
    }
    let seeds: Vec<u64> = results
        .records
        .iter()
        .filter(|r| matches!(r.outcome, SeedOutcome::Ok(_)))
        .map(|r| r.seed)
        .collect();
    let mismatch = || Error::InvalidArgument("saved results mix model types".into());
    let mut summary = SweepSummary {
        version: FORMAT_VERSION,
        model: results.config.model,
        n_seeds: results.records.len(),
        seeds: seeds.clone(),
        failures,
        penalized: None,
        wqs: None,
        bkmr: None,
    };
    match results.config.model {
        ModelKind::Lasso | ModelKind::GroupLasso => {
            let fits = ok
                .iter()
                .map(|o| match o {
                    SeedOutput::Penalized(p) => Ok(p.clone()),
                    _ => Err(mismatch()),
                })
                .collect::<Result<Vec<_>>>()?;
            summary.penalized = Some(summarize_coefficients(
                &fits,
                &results.column_names,
                &results.penalty_mask,
                &results.group_names,
            )?);
        }
        ModelKind::Wqs => {
            let fits = ok
                .iter()
                .map(|o| match o {
                    SeedOutput::Wqs(w) => Ok(w.clone()),
                    _ => Err(mismatch()),
                })
                .collect::<Result<Vec<_>>>()?;
            let tau = results.config.wqs.tau_for(results.exposure_names.len());
            summary.wqs = Some(summarize_weights(&fits, &results.exposure_names, tau)?);
        }
        ModelKind::Bkmr => {
            let runs = ok
                .iter()
                .map(|o| match o {
                    SeedOutput::Bkmr(b) => Ok(b),
                    _ => Err(mismatch()),
                })
                .collect::<Result<Vec<_>>>()?;
            let tables: Vec<PipTable> = runs.iter().map(|r| r.pips.clone()).collect();
            let pips = summarize_pips(
                &seeds,
                &tables,
                &results.exposure_names,
                &results.group_names,
                &results.group_assignments,
            )?;
            let curve_sets: Vec<Vec<ExposureResponse>> = runs.iter().map(|r| r.curves.clone()).collect();
            let rhat: Vec<Option<f64>> = runs.iter().map(|r| r.rhat).collect();
            let unconverged_seeds = seeds
                .iter()
                .zip(&rhat)
                .filter(|(_, r)| !matches!(r, Some(v) if *v <= RHAT_THRESHOLD))
                .map(|(s, _)| *s)
                .collect();
            summary.bkmr = Some(BkmrSummary {
                pips,
                curves: summarize_curves(&curve_sets)?,
                overall: summarize_overall(&seeds, &runs)?,
                rhat,
                unconverged_seeds,
            });
        }
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_names_parse() {
        for m in [ModelKind::Lasso, ModelKind::GroupLasso, ModelKind::Wqs, ModelKind::Bkmr] {
            assert_eq!(m.as_str().parse::<ModelKind>().unwrap(), m);
        }
        assert_eq!("group-lasso".parse::<ModelKind>().unwrap(), ModelKind::GroupLasso);
        assert!("ridge".parse::<ModelKind>().is_err());
    }

    #[test]
    fn seed_list_validation() {
        let mut cfg = SweepConfig::new(ModelKind::Lasso);
        assert_eq!(cfg.seeds.len(), 100);
        cfg.validate().unwrap();
        cfg.seeds = vec![];
        assert!(cfg.validate().is_err());
        cfg.seeds = vec![3, 4, 3];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn pip_formatting() {
        assert_eq!(format_pip(0.8551), "0.86");
        assert_eq!(format_pip(0.004), "0.004");
        assert_eq!(format_pip(0.0), "0.00");
        assert_eq!(format_pip(0.1), "0.10");
    }

    #[test]
    fn curve_median_and_mismatch() {
        let curve = |vals: Vec<f64>, grid: Vec<f64>| ExposureResponse {
            exposure: 0,
            name: "z".into(),
            lower: vals.clone(),
            upper: vals.clone(),
            mean: vals,
            grid,
        };
        let a = vec![curve(vec![0.0, 1.0], vec![0.0, 1.0])];
        let b = vec![curve(vec![2.0, 1.0], vec![0.0, 1.0])];
        let out = summarize_curves(&[a.clone(), b]).unwrap();
        assert_eq!(out[0].median, vec![1.0, 1.0]);
        let c = vec![curve(vec![2.0, 1.0], vec![0.0, 2.0])];
        assert!(summarize_curves(&[a, c]).is_err());
    }
}
