//! BFGS with a backtracking Armijo line search, for small smooth problems.

#[derive(Debug, Clone, Copy)]
pub struct BfgsOptions {
    pub max_iterations: usize,
    /// Converged when the largest absolute gradient entry drops below this.
    pub gradient_tolerance: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        BfgsOptions {
            max_iterations: 500,
            gradient_tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BfgsResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizes `f`, which returns the value and writes the gradient into its
/// second argument. Returns `None` if the objective becomes non-finite at the
/// start or the line search cannot make progress far from a stationary point.
pub fn minimize<F>(mut f: F, x0: &[f64], opts: &BfgsOptions) -> Option<BfgsResult>
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let k = x0.len();
    let mut x = x0.to_vec();
    let mut g = vec![0.0; k];
    let mut fx = f(&x, &mut g);
    if !fx.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return None;
    }
    // Inverse Hessian approximation, row-major.
    let mut h = vec![0.0; k * k];
    for i in 0..k {
        h[i * k + i] = 1.0;
    }
    let mut x_new = vec![0.0; k];
    let mut g_new = vec![0.0; k];
    let mut dir = vec![0.0; k];
    for iter in 0..opts.max_iterations {
        if max_abs(&g) < opts.gradient_tolerance {
            return Some(BfgsResult {
                x,
                value: fx,
                iterations: iter,
                converged: true,
            });
        }
        for i in 0..k {
            dir[i] = -(0..k).map(|j| h[i * k + j] * g[j]).sum::<f64>();
        }
        let mut slope = dot(&dir, &g);
        if slope >= 0.0 {
            // Lost descent: restart from steepest descent.
            for i in 0..k {
                for j in 0..k {
                    h[i * k + j] = if i == j { 1.0 } else { 0.0 };
                }
                dir[i] = -g[i];
            }
            slope = dot(&dir, &g);
        }
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            for i in 0..k {
                x_new[i] = x[i] + step * dir[i];
            }
            let f_new = f(&x_new, &mut g_new);
            if f_new.is_finite() && f_new <= fx + 1e-4 * step * slope {
                fx = f_new;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            let stationary = max_abs(&g) < opts.gradient_tolerance.sqrt();
            return stationary.then(|| BfgsResult {
                x,
                value: fx,
                iterations: iter,
                converged: false,
            });
        }
        let s: Vec<f64> = (0..k).map(|i| x_new[i] - x[i]).collect();
        let y: Vec<f64> = (0..k).map(|i| g_new[i] - g[i]).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            let rho = 1.0 / sy;
            let hy: Vec<f64> = (0..k)
                .map(|i| (0..k).map(|j| h[i * k + j] * y[j]).sum())
                .collect();
            let yhy = dot(&y, &hy);
            for i in 0..k {
                for j in 0..k {
                    h[i * k + j] += -rho * (hy[i] * s[j] + s[i] * hy[j])
                        + (rho * rho * yhy + rho) * s[i] * s[j];
                }
            }
        }
        x.copy_from_slice(&x_new);
        g.copy_from_slice(&g_new);
    }
    let converged = max_abs(&g) < opts.gradient_tolerance;
    Some(BfgsResult {
        x,
        value: fx,
        iterations: opts.max_iterations,
        converged,
    })
}
