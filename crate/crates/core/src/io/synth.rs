//! Synthetic mixtures with known truth.

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, GroupSpec};
use crate::error::{Error, Result};
use crate::rng::SeedStream;

/// Coefficient of the continuous covariate `x_cont`.
pub const CONTINUOUS_COEF: f64 = 0.5;
/// Coefficient of the Bernoulli(1/2) covariate `x_bin`.
pub const BINARY_COEF: f64 = -0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Truth {
    /// Exposures do not affect the outcome.
    #[default]
    Null,
    /// `y` gets `Σ coefficients_j z_j`.
    Linear,
    /// `y` gets `effect · z_active²`.
    QuadraticSingle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub n: usize,
    pub p: usize,
    /// Number of contiguous exposure groups.
    #[serde(default = "one")]
    pub groups: usize,
    /// Exchangeable correlation; ignored when `correlation` is given.
    #[serde(default)]
    pub rho: f64,
    #[serde(default)]
    pub correlation: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub truth: Truth,
    /// Linear truth only; length `p`.
    #[serde(default)]
    pub coefficients: Option<Vec<f64>>,
    /// Quadratic truth only.
    #[serde(default)]
    pub active: usize,
    #[serde(default = "unit")]
    pub effect: f64,
    #[serde(default = "unit")]
    pub noise_sd: f64,
    #[serde(default = "one_u64")]
    pub seed: u64,
}

fn one() -> usize {
    1
}

fn one_u64() -> u64 {
    1
}

fn unit() -> f64 {
    1.0
}

impl SyntheticSpec {
    pub fn new(n: usize, p: usize) -> Self {
        SyntheticSpec {
            n,
            p,
            groups: 1,
            rho: 0.0,
            correlation: None,
            truth: Truth::Null,
            coefficients: None,
            active: 0,
            effect: 1.0,
            noise_sd: 1.0,
            seed: 1,
        }
    }

    pub fn correlation_matrix(&self) -> Result<DMatrix<f64>> {
        let p = self.p;
        match &self.correlation {
            Some(rows) => {
                if rows.len() != p || rows.iter().any(|r| r.len() != p) {
                    return Err(Error::Config(format!("correlation must be {p} x {p}")));
                }
                let m = DMatrix::from_fn(p, p, |i, j| rows[i][j]);
                for i in 0..p {
                    if m[(i, i)] != 1.0 {
                        return Err(Error::Config("correlation diagonal must be 1".into()));
                    }
                    for j in 0..i {
                        if m[(i, j)] != m[(j, i)] {
                            return Err(Error::Config("correlation must be symmetric".into()));
                        }
                    }
                }
                Ok(m)
            }
            None => {
                let lower = if p > 1 { -1.0 / (p - 1) as f64 } else { -1.0 };
                if !(self.rho > lower && self.rho < 1.0) {
                    return Err(Error::Config(format!(
                        "rho = {} is outside ({lower}, 1)",
                        self.rho
                    )));
                }
                Ok(DMatrix::from_fn(p, p, |i, j| if i == j { 1.0 } else { self.rho }))
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.p == 0 {
            return Err(Error::Config("synthetic data needs n >= 2 and p >= 1".into()));
        }
        if self.groups == 0 || self.groups > self.p {
            return Err(Error::Config(format!(
                "cannot split {} exposures into {} groups",
                self.p, self.groups
            )));
        }
        if !(self.noise_sd >= 0.0) || !self.effect.is_finite() {
            return Err(Error::Config("noise_sd must be non-negative and effect finite".into()));
        }
        match self.truth {
            Truth::Linear => match &self.coefficients {
                Some(c) if c.len() == self.p && c.iter().all(|v| v.is_finite()) => {}
                _ => {
                    return Err(Error::Config(format!(
                        "linear truth needs {} finite coefficients",
                        self.p
                    )))
                }
            },
            Truth::QuadraticSingle if self.active >= self.p => {
                return Err(Error::Config(format!("active exposure {} >= p", self.active)));
            }
            _ => {}
        }
        let corr = self.correlation_matrix()?;
        Cholesky::new(corr)
            .map(|_| ())
            .ok_or_else(|| Error::Config("correlation matrix is not positive definite".into()))
    }
}

/// Exposures `z1..zp`, covariates `x_cont` (standard normal) and `x_bin`
/// (Bernoulli 1/2), and the outcome. Draw order: exposures row by row,
/// then covariates row by row, then noise.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Dataset> {
    spec.validate()?;
    let (n, p) = (spec.n, spec.p);
    let chol = Cholesky::new(spec.correlation_matrix()?)
        .ok_or_else(|| Error::Config("correlation matrix is not positive definite".into()))?;
    let l = chol.l();
    let mut rng = SeedStream::new(spec.seed);
    let mut z = DMatrix::<f64>::zeros(n, p);
    let mut e = vec![0.0; p];
    for i in 0..n {
        for v in e.iter_mut() {
            *v = rng.normal();
        }
        for j in 0..p {
            z[(i, j)] = (0..=j).map(|k| l[(j, k)] * e[k]).sum::<f64>();
        }
    }
    let mut x = DMatrix::<f64>::zeros(n, 2);
    for i in 0..n {
        x[(i, 0)] = rng.normal();
        x[(i, 1)] = if rng.uniform01() < 0.5 { 1.0 } else { 0.0 };
    }
    let y = DVector::from_fn(n, |i, _| {
        let signal = match spec.truth {
            Truth::Null => 0.0,
            Truth::Linear => {
                let c = spec.coefficients.as_deref().unwrap_or(&[]);
                (0..p).map(|j| c[j] * z[(i, j)]).sum()
            }
            Truth::QuadraticSingle => spec.effect * z[(i, spec.active)].powi(2),
        };
        signal + CONTINUOUS_COEF * x[(i, 0)] + BINARY_COEF * x[(i, 1)]
    });
    let noise: Vec<f64> = (0..n).map(|_| spec.noise_sd * rng.normal()).collect();
    let y = y + DVector::from_vec(noise);
    Dataset::with_intercept(
        y,
        z,
        x,
        (1..=p).map(|j| format!("z{j}")).collect(),
        vec!["x_cont".into(), "x_bin".into()],
        GroupSpec::contiguous(p, spec.groups)?,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_checks() {
        let mut s = SyntheticSpec::new(10, 4);
        s.validate().unwrap();
        s.rho = -0.34;
        assert!(s.validate().is_err());
        s.rho = -0.3;
        s.validate().unwrap();
        s.truth = Truth::Linear;
        assert!(s.validate().is_err());
        s.coefficients = Some(vec![1.0; 4]);
        s.validate().unwrap();
        s.correlation = Some(vec![
            vec![1.0, 0.9, 0.9, 0.0],
            vec![0.9, 1.0, -0.9, 0.0],
            vec![0.9, -0.9, 1.0, 0.0],
            vec![0.0, 0.0, 0.0, 1.0],
        ]);
        assert!(s.validate().is_err());
    }

    #[test]
    fn deterministic() {
        let mut s = SyntheticSpec::new(50, 3);
        s.rho = 0.5;
        s.groups = 2;
        let a = generate_synthetic(&s).unwrap();
        let b = generate_synthetic(&s).unwrap();
        assert_eq!(a.y(), b.y());
        assert_eq!(a.exposures(), b.exposures());
        assert_eq!(a.groups().assignments(), &[0, 0, 1]);
        s.seed = 2;
        assert_ne!(generate_synthetic(&s).unwrap().y(), a.y());
    }
}
