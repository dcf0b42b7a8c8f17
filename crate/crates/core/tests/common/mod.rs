//! Independent reference computations shared by the integration tests.
//! Nothing here calls into the library's numerics.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use seedsweep::{Dataset, GroupSpec, SeedStream};

/// Random partially penalized instance: `p` exposures (penalized), an
/// intercept plus `c` covariates (unpenalized), sparse linear truth.
pub fn random_instance(seed: u64, n: usize, p: usize, c: usize) -> Dataset {
    let mut rng = SeedStream::new(seed);
    let z = DMatrix::from_fn(n, p, |_, _| rng.normal());
    let x = DMatrix::from_fn(n, c, |_, _| rng.normal() * 2.0 + 1.0);
    let beta: Vec<f64> = (0..p)
        .map(|j| if j % 3 == 0 { 1.0 - 0.2 * j as f64 } else { 0.0 })
        .collect();
    let y = DVector::from_fn(n, |i, _| {
        let s: f64 = (0..p).map(|j| beta[j] * z[(i, j)]).sum();
        let cov: f64 = (0..c).map(|k| 0.5 * x[(i, k)]).sum();
        3.0 + s + cov + 1.5 * rng.normal()
    });
    Dataset::with_intercept(
        y,
        z,
        x,
        (0..p).map(|j| format!("z{j}")).collect(),
        (0..c).map(|k| format!("x{k}")).collect(),
        GroupSpec::singletons(p),
    )
    .unwrap()
}

/// `[Z | X]` with penalized columns centered and scaled by the population
/// standard deviation.
pub fn standardized_design(d: &Dataset) -> DMatrix<f64> {
    let n = d.n();
    let p = d.p();
    let mut m = DMatrix::zeros(n, p + d.c());
    for j in 0..p + d.c() {
        let src: Vec<f64> = if j < p {
            d.exposures().column(j).iter().copied().collect()
        } else {
            d.covariates().column(j - p).iter().copied().collect()
        };
        if d.penalty_mask()[j] {
            let mu = src.iter().sum::<f64>() / n as f64;
            let var = src.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / n as f64;
            let sd = var.sqrt();
            for i in 0..n {
                m[(i, j)] = (src[i] - mu) / sd;
            }
        } else {
            for i in 0..n {
                m[(i, j)] = src[i];
            }
        }
    }
    m
}

pub fn lasso_objective(design: &DMatrix<f64>, y: &DVector<f64>, mask: &[bool], b: &[f64], lambda: f64) -> f64 {
    let n = design.nrows() as f64;
    let mut rss = 0.0;
    for i in 0..design.nrows() {
        let mut e = y[i];
        for j in 0..design.ncols() {
            e -= design[(i, j)] * b[j];
        }
        rss += e * e;
    }
    let pen: f64 = (0..b.len()).filter(|&j| mask[j]).map(|j| b[j].abs()).sum();
    rss / (2.0 * n) + lambda * pen
}

/// Accelerated proximal gradient with adaptive restart, run to a fixed
/// point. Returns standardized-scale coefficients.
pub fn lasso_oracle(d: &Dataset, lambda: f64) -> Vec<f64> {
    let design = standardized_design(d);
    let mask = d.penalty_mask().to_vec();
    let n = design.nrows() as f64;
    let k = design.ncols();
    let gram = design.transpose() * &design / n;
    let xty = design.transpose() * d.y() / n;
    // Lipschitz constant by power iteration, padded.
    let mut v = DVector::from_element(k, 1.0);
    let mut top = 0.0;
    for _ in 0..500 {
        let w = &gram * &v;
        top = w.norm();
        v = w / top;
    }
    let step = 1.0 / (top * 1.01);
    let prox = |u: &DVector<f64>| -> DVector<f64> {
        DVector::from_fn(k, |j, _| {
            if mask[j] {
                let t = step * lambda;
                u[j].signum() * (u[j].abs() - t).max(0.0)
            } else {
                u[j]
            }
        })
    };
    let mut x = DVector::zeros(k);
    let mut yv = x.clone();
    let mut t = 1.0f64;
    for _ in 0..2_000_000 {
        let grad = &gram * &yv - &xty;
        let next = prox(&(&yv - grad * step));
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        let diff = &next - &x;
        if (&yv - &next).dot(&diff) > 0.0 {
            // restart momentum
            yv = x.clone();
            t = 1.0;
            continue;
        }
        yv = &next + &diff * ((t - 1.0) / t_next);
        let change = diff.amax();
        x = next;
        t = t_next;
        if change <= 1e-15 * (1.0 + x.amax()) {
            break;
        }
    }
    x.iter().copied().collect()
}

/// Largest KKT violation of standardized-scale coefficients `b`.
pub fn kkt_residual(d: &Dataset, b: &[f64], lambda: f64) -> f64 {
    let design = standardized_design(d);
    let n = design.nrows() as f64;
    let bv = DVector::from_column_slice(b);
    let r = d.y() - &design * bv;
    let g = design.transpose() * r / n;
    let mask = d.penalty_mask();
    (0..b.len())
        .map(|j| {
            if !mask[j] {
                g[j].abs()
            } else if b[j] != 0.0 {
                (g[j] - lambda * b[j].signum()).abs()
            } else {
                (g[j].abs() - lambda).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

/// OLS via the normal equations and Gauss–Jordan elimination.
pub fn normal_equations(x: &DMatrix<f64>, y: &DVector<f64>) -> Vec<f64> {
    let k = x.ncols();
    let mut a = vec![vec![0.0; k + 1]; k];
    for r in 0..k {
        for c in 0..k {
            a[r][c] = (0..x.nrows()).map(|i| x[(i, r)] * x[(i, c)]).sum();
        }
        a[r][k] = (0..x.nrows()).map(|i| x[(i, r)] * y[i]).sum();
    }
    for col in 0..k {
        let piv = (col..k)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        for r in 0..k {
            if r != col {
                let f = a[r][col] / a[col][col];
                for c in col..=k {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    (0..k).map(|r| a[r][k] / a[r][r]).collect()
}

/// Median by full sort; even counts average the central pair.
pub fn brute_median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    for i in 1..v.len() {
        let mut j = i;
        while j > 0 && v[j - 1] > v[j] {
            v.swap(j - 1, j);
            j -= 1;
        }
    }
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

pub fn brute_min_max(values: &[f64]) -> (f64, f64) {
    let mut lo = values[0];
    let mut hi = values[0];
    for &v in values {
        if v < lo {
            lo = v;
        }
        if v > hi {
            hi = v;
        }
    }
    (lo, hi)
}
