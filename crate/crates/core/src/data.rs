//! Shared data model and the preprocessing every estimator relies on:
//! standardization, quantile scoring and fold assignment.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SeedStream;
use crate::stats;

pub const INTERCEPT_NAME: &str = "(Intercept)";

/// Partition of the exposures into a-priori groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSpec {
    assignments: Vec<usize>,
    names: Vec<String>,
}

impl GroupSpec {
    pub fn new(assignments: Vec<usize>, names: Vec<String>) -> Result<Self> {
        let g = names.len();
        if g == 0 {
            return Err(Error::InvalidDataset("at least one group is required".into()));
        }
        let mut seen = vec![false; g];
        for (j, &a) in assignments.iter().enumerate() {
            if a >= g {
                return Err(Error::InvalidDataset(format!(
                    "exposure {j} assigned to group {a}, but only {g} groups are named"
                )));
            }
            seen[a] = true;
        }
        if let Some(empty) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidDataset(format!(
                "group '{}' has no members",
                names[empty]
            )));
        }
        Ok(GroupSpec { assignments, names })
    }

    /// Every exposure in its own group.
    pub fn singletons(p: usize) -> Self {
        GroupSpec {
            assignments: (0..p).collect(),
            names: (0..p).map(|j| format!("g{}", j + 1)).collect(),
        }
    }

    /// Contiguous, near-equal blocks.
    pub fn contiguous(p: usize, g: usize) -> Result<Self> {
        if g == 0 || g > p {
            return Err(Error::InvalidArgument(format!(
                "cannot split {p} exposures into {g} groups"
            )));
        }
        let assignments = (0..p).map(|j| j * g / p).collect();
        GroupSpec::new(assignments, (0..g).map(|k| format!("g{}", k + 1)).collect())
    }

    pub fn assignments(&self) -> &[usize] {
        &self.assignments
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn n_groups(&self) -> usize {
        self.names.len()
    }

    pub fn group_of(&self, exposure: usize) -> usize {
        self.assignments[exposure]
    }

    pub fn members(&self, group: usize) -> Vec<usize> {
        self.assignments
            .iter()
            .enumerate()
            .filter(|(_, &a)| a == group)
            .map(|(j, _)| j)
            .collect()
    }
}

/// Outcome, exposure mixture and covariates for one analysis.
///
/// Column order for coefficient vectors and the penalty mask is
/// `[exposures..., covariates...]`. The covariate block always carries an
/// intercept column of ones.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    y: DVector<f64>,
    exposures: DMatrix<f64>,
    covariates: DMatrix<f64>,
    exposure_names: Vec<String>,
    covariate_names: Vec<String>,
    penalty_mask: Vec<bool>,
    groups: GroupSpec,
}

impl Dataset {
    pub fn new(
        y: DVector<f64>,
        exposures: DMatrix<f64>,
        covariates: DMatrix<f64>,
        exposure_names: Vec<String>,
        covariate_names: Vec<String>,
        penalty_mask: Vec<bool>,
        groups: GroupSpec,
    ) -> Result<Self> {
        let n = y.len();
        let p = exposures.ncols();
        let c = covariates.ncols();
        if n < 2 {
            return Err(Error::InvalidDataset(format!("need at least 2 rows, got {n}")));
        }
        if exposures.nrows() != n || covariates.nrows() != n {
            return Err(Error::InvalidDataset(
                "outcome, exposure and covariate row counts differ".into(),
            ));
        }
        if p == 0 {
            return Err(Error::InvalidDataset("no exposures".into()));
        }
        if exposure_names.len() != p || covariate_names.len() != c {
            return Err(Error::InvalidDataset("column name count mismatch".into()));
        }
        if penalty_mask.len() != p + c {
            return Err(Error::InvalidDataset(format!(
                "penalty mask has {} entries, expected {}",
                penalty_mask.len(),
                p + c
            )));
        }
        if groups.assignments().len() != p {
            return Err(Error::InvalidDataset(format!(
                "group assignments cover {} exposures, expected {p}",
                groups.assignments().len()
            )));
        }
        if !y.iter().all(|v| v.is_finite())
            || !exposures.iter().all(|v| v.is_finite())
            || !covariates.iter().all(|v| v.is_finite())
        {
            return Err(Error::InvalidDataset("non-finite value in input".into()));
        }
        let ds = Dataset {
            y,
            exposures,
            covariates,
            exposure_names,
            covariate_names,
            penalty_mask,
            groups,
        };
        let icol = ds.intercept_column().ok_or_else(|| {
            Error::InvalidDataset("covariates must include an intercept column of ones".into())
        })?;
        if ds.penalty_mask[p + icol] {
            return Err(Error::InvalidDataset("the intercept cannot be penalized".into()));
        }
        Ok(ds)
    }

    /// Builds a dataset whose covariate block is an intercept followed by
    /// `covariates`; exposures penalized, covariates not.
    pub fn with_intercept(
        y: DVector<f64>,
        exposures: DMatrix<f64>,
        covariates: DMatrix<f64>,
        exposure_names: Vec<String>,
        covariate_names: Vec<String>,
        groups: GroupSpec,
    ) -> Result<Self> {
        let n = y.len();
        if covariates.nrows() != n {
            return Err(Error::InvalidDataset("covariate row count mismatch".into()));
        }
        let c = covariates.ncols() + 1;
        let mut x = DMatrix::from_element(n, c, 1.0);
        x.columns_mut(1, c - 1).copy_from(&covariates);
        let mut names = vec![INTERCEPT_NAME.to_string()];
        names.extend(covariate_names);
        let p = exposures.ncols();
        let mask = (0..p + c).map(|j| j < p).collect();
        Dataset::new(y, exposures, x, exposure_names, names, mask, groups)
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.exposures.ncols()
    }

    pub fn c(&self) -> usize {
        self.covariates.ncols()
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn exposures(&self) -> &DMatrix<f64> {
        &self.exposures
    }

    pub fn covariates(&self) -> &DMatrix<f64> {
        &self.covariates
    }

    pub fn exposure_names(&self) -> &[String] {
        &self.exposure_names
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    /// Names in coefficient order.
    pub fn column_names(&self) -> Vec<String> {
        self.exposure_names
            .iter()
            .chain(self.covariate_names.iter())
            .cloned()
            .collect()
    }

    pub fn penalty_mask(&self) -> &[bool] {
        &self.penalty_mask
    }

    pub fn groups(&self) -> &GroupSpec {
        &self.groups
    }

    /// Index (within the covariate block) of the first all-ones column.
    pub fn intercept_column(&self) -> Option<usize> {
        (0..self.c()).find(|&j| self.covariates.column(j).iter().all(|&v| v == 1.0))
    }

    /// Full design `[Z | X]`.
    pub fn design(&self) -> DMatrix<f64> {
        let (n, p, c) = (self.n(), self.p(), self.c());
        let mut m = DMatrix::zeros(n, p + c);
        m.columns_mut(0, p).copy_from(&self.exposures);
        m.columns_mut(p, c).copy_from(&self.covariates);
        m
    }

    /// Rows selected by `rows`, in that order.
    pub fn subset_rows(&self, rows: &[usize]) -> Dataset {
        Dataset {
            y: DVector::from_iterator(rows.len(), rows.iter().map(|&i| self.y[i])),
            exposures: self.exposures.select_rows(rows),
            covariates: self.covariates.select_rows(rows),
            exposure_names: self.exposure_names.clone(),
            covariate_names: self.covariate_names.clone(),
            penalty_mask: self.penalty_mask.clone(),
            groups: self.groups.clone(),
        }
    }

    /// Same data with a different exposure matrix (e.g. quantile scores).
    pub fn with_exposures(&self, exposures: DMatrix<f64>) -> Result<Dataset> {
        if exposures.nrows() != self.n() || exposures.ncols() != self.p() {
            return Err(Error::InvalidArgument("replacement exposure shape mismatch".into()));
        }
        Ok(Dataset {
            exposures,
            ..self.clone()
        })
    }

    pub fn with_penalty_mask(&self, mask: Vec<bool>) -> Result<Dataset> {
        Dataset::new(
            self.y.clone(),
            self.exposures.clone(),
            self.covariates.clone(),
            self.exposure_names.clone(),
            self.covariate_names.clone(),
            mask,
            self.groups.clone(),
        )
    }

    pub fn with_groups(&self, groups: GroupSpec) -> Result<Dataset> {
        Dataset::new(
            self.y.clone(),
            self.exposures.clone(),
            self.covariates.clone(),
            self.exposure_names.clone(),
            self.covariate_names.clone(),
            self.penalty_mask.clone(),
            groups,
        )
    }
}

/// Result of [`standardize`]: the transformed matrix plus the per-column
/// statistics needed to map coefficients back. Skipped columns record mean
/// 0 and sd 1.
#[derive(Debug, Clone)]
pub struct Standardized {
    pub matrix: DMatrix<f64>,
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
}

/// Centers and scales every column not flagged in `skip` (population sd).
pub fn standardize(m: &DMatrix<f64>, skip: &[bool], names: &[String]) -> Result<Standardized> {
    assert_eq!(skip.len(), m.ncols());
    let n = m.nrows() as f64;
    let mut out = m.clone();
    let mut means = vec![0.0; m.ncols()];
    let mut sds = vec![1.0; m.ncols()];
    for j in 0..m.ncols() {
        if skip[j] {
            continue;
        }
        let col = m.column(j);
        let mean = col.sum() / n;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let sd = var.sqrt();
        if !(sd > 1e-12 * mean.abs().max(1.0)) {
            let column = names.get(j).cloned().unwrap_or_else(|| format!("#{j}"));
            return Err(Error::ZeroVariance { column });
        }
        for v in out.column_mut(j).iter_mut() {
            *v = (*v - mean) / sd;
        }
        means[j] = mean;
        sds[j] = sd;
    }
    Ok(Standardized {
        matrix: out,
        means,
        sds,
    })
}

/// Type-7 cut points at `j/q`, `j = 1..q-1`.
pub fn quantile_cuts(x: &[f64], q: usize) -> Result<Vec<f64>> {
    if q < 2 {
        return Err(Error::DegenerateQuantiles(format!("q must be at least 2, got {q}")));
    }
    if x.len() < q {
        return Err(Error::DegenerateQuantiles(format!(
            "{} values cannot fill {q} bins",
            x.len()
        )));
    }
    let sorted = stats::sorted_copy(x);
    Ok((1..q)
        .map(|j| stats::quantile_sorted(&sorted, j as f64 / q as f64))
        .collect())
}

/// Bin of `value` given ascending cut points; values equal to a cut go low.
pub fn score_against(cuts: &[f64], value: f64) -> usize {
    cuts.iter().filter(|&&c| value > c).count()
}

/// Empirical quantile scores in `0..q`.
pub fn quantile_bin(x: &[f64], q: usize) -> Result<Vec<usize>> {
    let cuts = quantile_cuts(x, q)?;
    let scores: Vec<usize> = x.iter().map(|&v| score_against(&cuts, v)).collect();
    let first = scores[0];
    if scores.iter().all(|&s| s == first) {
        return Err(Error::DegenerateQuantiles(
            "values span fewer than 2 distinct bins".into(),
        ));
    }
    Ok(scores)
}

/// Quantile-scores every exposure column.
pub fn quantile_matrix(exposures: &DMatrix<f64>, q: usize, names: &[String]) -> Result<DMatrix<f64>> {
    let mut out = DMatrix::zeros(exposures.nrows(), exposures.ncols());
    for j in 0..exposures.ncols() {
        let col: Vec<f64> = exposures.column(j).iter().copied().collect();
        let scores = quantile_bin(&col, q).map_err(|e| match e {
            Error::DegenerateQuantiles(msg) => {
                Error::DegenerateQuantiles(format!("exposure '{}': {msg}", names[j]))
            }
            other => other,
        })?;
        for (i, s) in scores.into_iter().enumerate() {
            out[(i, j)] = s as f64;
        }
    }
    Ok(out)
}

/// Random fold labels: a shuffled index list dealt round-robin into `k`
/// folds.
pub fn kfold_assign(n: usize, k: usize, rng: &mut SeedStream) -> Result<Vec<usize>> {
    if k < 2 || k > n {
        return Err(Error::Folds(format!("need 2 <= k <= n, got k={k}, n={n}")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut order);
    let mut labels = vec![0; n];
    for (pos, &row) in order.iter().enumerate() {
        labels[row] = pos % k;
    }
    Ok(labels)
}
