//! Metropolis-within-Gibbs sampler for the BKMR posterior with the
//! exposure-response surface integrated out.
//!
//! Model: `y ~ N(Xβ, σ²(I + lam K(Z; r)))`, flat prior on β,
//! `σ² ~ IG(a, b)`, `log lam ~ U(lo, hi)`, and hierarchical selection: each
//! group enters with probability `group_prob`; an included group activates
//! exactly one member, chosen uniformly, whose `r_m` carries the slab prior.
//!
//! Each iteration draws β and σ² from their conditionals and then makes one
//! Metropolis–Hastings move, chosen at random: a selection move on one group
//! or a joint log-scale random walk on `lam` and the active `r_m`.
//!
//! Random choices are indexed through a canonical ordering (groups sorted by
//! name, members sorted by exposure name), so relabeling columns permutes the
//! output without changing the random stream's use.

use faer::Mat;
use nalgebra::{DMatrix, DVector};

use super::kernel::{forward_solve, log_det_from_factor, Factorizer, PointSet};
use super::{BkmrConfig, McmcState, McmcTrace, Selection};
use crate::data::{standardize, Dataset};
use crate::error::{Error, Result};
use crate::linalg::ols;
use crate::rng::SeedStream;

/// Canonical traversal of groups and members.
#[derive(Debug, Clone)]
pub(crate) struct Ordering {
    /// Group indices sorted by group name.
    pub groups: Vec<usize>,
    /// For each group index, its members sorted by exposure name.
    pub members: Vec<Vec<usize>>,
}

impl Ordering {
    pub fn new(d: &Dataset) -> Self {
        let spec = d.groups();
        let names = d.exposure_names();
        let mut groups: Vec<usize> = (0..spec.n_groups()).collect();
        groups.sort_by(|&a, &b| spec.names()[a].cmp(&spec.names()[b]).then(a.cmp(&b)));
        let members = (0..spec.n_groups())
            .map(|g| {
                let mut m = spec.members(g);
                m.sort_by(|&a, &b| names[a].cmp(&names[b]).then(a.cmp(&b)));
                m
            })
            .collect();
        Ordering { groups, members }
    }

    /// Exposure indices in canonical order (group order, then member order).
    pub fn exposures(&self) -> Vec<usize> {
        self.groups
            .iter()
            .flat_map(|&g| self.members[g].iter().copied())
            .collect()
    }
}

/// Exposures standardized (population sd) for kernel evaluation.
pub(crate) fn kernel_points(d: &Dataset) -> Result<(PointSet, Vec<f64>, Vec<f64>)> {
    let skip = vec![false; d.p()];
    let st = standardize(d.exposures(), &skip, d.exposure_names())?;
    Ok((PointSet::new(&st.matrix), st.means, st.sds))
}

/// Active `(exposure, r)` pairs in canonical order.
pub(crate) fn active_scales(order: &[usize], r: &[f64]) -> Vec<(usize, f64)> {
    order
        .iter()
        .filter(|&&m| r[m] > 0.0)
        .map(|&m| (m, r[m]))
        .collect()
}

/// Factorization of `Σ = I + lam K` plus `L⁻¹[X | y]`.
struct Factored {
    chol: Mat<f64>,
    whitened: Mat<f64>,
    log_det: f64,
}

struct Chain<'a> {
    cfg: &'a BkmrConfig,
    points: &'a PointSet,
    order: &'a Ordering,
    canonical: Vec<usize>,
    xy: Mat<f64>,
    c: usize,
    n: usize,
    factorizer: Factorizer,
    state: McmcState,
    current: Factored,
    scratch: Factored,
    accepted_continuous: usize,
    proposed_continuous: usize,
    accepted_selection: usize,
    proposed_selection: usize,
}

impl<'a> Chain<'a> {
    fn factor(&mut self, lam: f64, r: &[f64], into_scratch: bool) -> Result<()> {
        let active = active_scales(&self.canonical, r);
        let target = if into_scratch {
            &mut self.scratch
        } else {
            &mut self.current
        };
        self.factorizer
            .factor_covariance(self.points, &active, lam, &mut target.chol)?;
        target.whitened.copy_from(&self.xy);
        forward_solve(&target.chol, &mut target.whitened);
        target.log_det = log_det_from_factor(&target.chol);
        Ok(())
    }

    /// `‖L⁻¹(y − Xβ)‖²` from the whitened design.
    fn quad_form(f: &Factored, beta: &[f64], c: usize, n: usize) -> f64 {
        let mut q = 0.0;
        for i in 0..n {
            let mut e = f.whitened[(i, c)];
            for (j, b) in beta.iter().enumerate() {
                e -= f.whitened[(i, j)] * b;
            }
            q += e * e;
        }
        q
    }

    /// Log-likelihood up to the `σ²`-only terms, which cancel in MH ratios.
    fn partial_loglik(f: &Factored, beta: &[f64], sigma2: f64, c: usize, n: usize) -> f64 {
        -0.5 * f.log_det - Chain::quad_form(f, beta, c, n) / (2.0 * sigma2)
    }

    fn full_loglik(&self) -> f64 {
        let nf = self.n as f64;
        let s = &self.state;
        -0.5 * nf * (2.0 * std::f64::consts::PI * s.sigma2).ln()
            + Chain::partial_loglik(&self.current, &s.beta, s.sigma2, self.c, self.n)
    }

    fn gibbs_beta(&mut self, rng: &mut SeedStream) -> Result<()> {
        let (c, n) = (self.c, self.n);
        let w = &self.current.whitened;
        let mut a = DMatrix::zeros(c, c);
        let mut b = DVector::zeros(c);
        for i in 0..n {
            for j in 0..c {
                let wij = w[(i, j)];
                b[j] += wij * w[(i, c)];
                for k in 0..=j {
                    a[(j, k)] += wij * w[(i, k)];
                }
            }
        }
        for j in 0..c {
            for k in 0..j {
                a[(k, j)] = a[(j, k)];
            }
        }
        let chol = a
            .cholesky()
            .ok_or_else(|| Error::SingularDesign("covariate block is singular".into()))?;
        let mean = chol.solve(&b);
        let xi = DVector::from_iterator(c, (0..c).map(|_| rng.normal()));
        let lt = chol.l().transpose();
        let dev = lt
            .solve_upper_triangular(&xi)
            .ok_or_else(|| Error::LinearAlgebra("triangular solve failed".into()))?;
        let sd = self.state.sigma2.sqrt();
        self.state.beta = (0..c).map(|j| mean[j] + sd * dev[j]).collect();
        Ok(())
    }

    fn gibbs_sigma2(&mut self, rng: &mut SeedStream) {
        let pri = &self.cfg.priors;
        let q = Chain::quad_form(&self.current, &self.state.beta, self.c, self.n);
        let shape = pri.sigma2_shape + self.n as f64 / 2.0;
        let scale = pri.sigma2_scale + q / 2.0;
        self.state.sigma2 = scale / rng.gamma(shape);
    }

    fn accept(&self, log_ratio: f64, rng: &mut SeedStream) -> bool {
        let u = 1.0 - rng.uniform01();
        log_ratio >= 0.0 || u.ln() < log_ratio
    }

    fn current_partial(&self) -> f64 {
        Chain::partial_loglik(&self.current, &self.state.beta, self.state.sigma2, self.c, self.n)
    }

    fn proposal_partial(&self) -> f64 {
        Chain::partial_loglik(&self.scratch, &self.state.beta, self.state.sigma2, self.c, self.n)
    }

    fn continuous_move(&mut self, rng: &mut SeedStream) -> Result<()> {
        let pri = &self.cfg.priors;
        let sd = self.cfg.proposal_sd;
        let active: Vec<usize> = self
            .canonical
            .iter()
            .copied()
            .filter(|&m| self.state.r[m] > 0.0)
            .collect();
        let log_lam = self.state.lam.ln() + sd * rng.normal();
        let mut r_new = self.state.r.clone();
        let mut log_prior = 0.0;
        let mut in_support = (pri.log_lambda_min..=pri.log_lambda_max).contains(&log_lam);
        for &m in &active {
            let old = self.state.r[m];
            let new = (old.ln() + sd * rng.normal()).exp();
            if !(new > 0.0 && new < pri.r_max) {
                in_support = false;
            }
            // Slab density on r plus the log-scale Jacobian.
            log_prior += pri.r_shape * (new.ln() - old.ln()) - pri.r_rate * (new - old);
            r_new[m] = new;
        }
        self.proposed_continuous += 1;
        if !in_support {
            // Keep the stream consumption identical to an evaluated proposal.
            let _ = rng.uniform01();
            return Ok(());
        }
        let lam_new = log_lam.exp();
        self.factor(lam_new, &r_new, true)?;
        let log_ratio = self.proposal_partial() - self.current_partial() + log_prior;
        if self.accept(log_ratio, rng) {
            self.state.lam = lam_new;
            self.state.r = r_new;
            std::mem::swap(&mut self.current, &mut self.scratch);
            self.accepted_continuous += 1;
        }
        Ok(())
    }

    fn draw_slab(&self, rng: &mut SeedStream) -> f64 {
        let pri = &self.cfg.priors;
        loop {
            let v = rng.gamma(pri.r_shape) / pri.r_rate;
            if v > 0.0 && v < pri.r_max {
                return v;
            }
        }
    }

    fn selection_move(&mut self, rng: &mut SeedStream) -> Result<()> {
        let order = self.order;
        let g = order.groups[rng.index(order.groups.len())];
        let members = &order.members[g];
        let size = members.len();
        let prior_odds = self.cfg.priors.group_prob / (1.0 - self.cfg.priors.group_prob);
        // Probability of proposing removal from an included group.
        let p_remove = if size > 1 { 0.5 } else { 1.0 };
        let mut r_new = self.state.r.clone();
        let mut within_new = self.state.delta_within.clone();
        let mut group_on = self.state.delta_group[g];
        let log_extra;
        if !self.state.delta_group[g] {
            let m = members[rng.index(size)];
            r_new[m] = self.draw_slab(rng);
            within_new[m] = true;
            group_on = true;
            log_extra = (prior_odds * p_remove).ln();
        } else {
            let current = *members
                .iter()
                .find(|&&m| self.state.delta_within[m])
                .expect("included group has one active member");
            let remove = size == 1 || rng.uniform01() < 0.5;
            r_new[current] = 0.0;
            within_new[current] = false;
            if remove {
                group_on = false;
                log_extra = -(prior_odds * p_remove).ln();
            } else {
                let others: Vec<usize> = members.iter().copied().filter(|&m| m != current).collect();
                let m = others[rng.index(others.len())];
                r_new[m] = self.draw_slab(rng);
                within_new[m] = true;
                log_extra = 0.0;
            }
        }
        self.proposed_selection += 1;
        self.factor(self.state.lam, &r_new, true)?;
        let log_ratio = self.proposal_partial() - self.current_partial() + log_extra;
        if self.accept(log_ratio, rng) {
            self.state.r = r_new;
            self.state.delta_within = within_new;
            self.state.delta_group[g] = group_on;
            std::mem::swap(&mut self.current, &mut self.scratch);
            self.accepted_selection += 1;
        }
        Ok(())
    }
}

fn initial_state(
    d: &Dataset,
    cfg: &BkmrConfig,
    order: &Ordering,
    rng: &mut SeedStream,
) -> Result<McmcState> {
    let p = d.p();
    let g = d.groups().n_groups();
    let mut delta_group = vec![false; g];
    let mut delta_within = vec![false; p];
    let mut r = vec![0.0; p];
    let pri = &cfg.priors;
    let slab = |rng: &mut SeedStream| loop {
        let v = rng.gamma(pri.r_shape) / pri.r_rate;
        if v > 0.0 && v < pri.r_max {
            return v;
        }
    };
    match cfg.selection {
        Selection::Hierarchical => {
            for &grp in &order.groups {
                if rng.uniform01() < pri.group_prob {
                    let members = &order.members[grp];
                    let m = members[rng.index(members.len())];
                    delta_group[grp] = true;
                    delta_within[m] = true;
                    r[m] = slab(rng);
                }
            }
        }
        Selection::AllIncluded => {
            delta_group.iter_mut().for_each(|v| *v = true);
            for m in order.exposures() {
                delta_within[m] = true;
                r[m] = slab(rng);
            }
        }
        Selection::NoneIncluded => {}
    }
    let fit = ols(d.covariates(), d.y())?;
    let sigma2 = fit.sigma2 * (0.5 + rng.uniform01());
    let log_lam = -1.0 + 2.0 * rng.uniform01();
    Ok(McmcState {
        beta: fit.coef.iter().copied().collect(),
        sigma2,
        lam: log_lam.exp().clamp(pri.log_lambda_min.exp(), pri.log_lambda_max.exp()),
        r,
        delta_group,
        delta_within,
    })
}

/// Runs one chain from `seed`.
pub fn mcmc_run(d: &Dataset, cfg: &BkmrConfig, seed: u64) -> Result<McmcTrace> {
    run_chain(d, cfg, seed, 0)
}

pub(crate) fn run_chain(d: &Dataset, cfg: &BkmrConfig, seed: u64, chain: usize) -> Result<McmcTrace> {
    cfg.validate().map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let n = d.n();
    if n > cfg.max_n {
        return Err(Error::InvalidArgument(format!(
            "BKMR uses dense n x n algebra; n = {n} exceeds the cap of {}",
            cfg.max_n
        )));
    }
    let c = d.c();
    let mut rng = SeedStream::new(seed);
    let (points, _, _) = kernel_points(d)?;
    let order = Ordering::new(d);
    let state = initial_state(d, cfg, &order, &mut rng)?;
    let mut xy = Mat::<f64>::zeros(n, c + 1);
    for i in 0..n {
        for j in 0..c {
            xy[(i, j)] = d.covariates()[(i, j)];
        }
        xy[(i, c)] = d.y()[i];
    }
    let blank = || Factored {
        chol: Mat::zeros(n, n),
        whitened: Mat::zeros(n, c + 1),
        log_det: 0.0,
    };
    let mut ch = Chain {
        cfg,
        points: &points,
        canonical: order.exposures(),
        order: &order,
        xy,
        c,
        n,
        factorizer: Factorizer::new(&points),
        state,
        current: blank(),
        scratch: blank(),
        accepted_continuous: 0,
        proposed_continuous: 0,
        accepted_selection: 0,
        proposed_selection: 0,
    };
    let (lam0, r0) = (ch.state.lam, ch.state.r.clone());
    ch.factor(lam0, &r0, false)?;

    let burn_in = cfg.burn_in();
    let keep = cfg.n_iter - burn_in;
    let mut states = Vec::with_capacity(keep);
    let mut log_likelihood = Vec::with_capacity(keep);
    let selection = cfg.selection == Selection::Hierarchical;
    for iter in 0..cfg.n_iter {
        ch.gibbs_beta(&mut rng)?;
        ch.gibbs_sigma2(&mut rng);
        let pick = rng.uniform01();
        if selection && pick < cfg.selection_move_prob {
            ch.selection_move(&mut rng)?;
        } else {
            ch.continuous_move(&mut rng)?;
        }
        if iter >= burn_in {
            states.push(ch.state.clone());
            log_likelihood.push(ch.full_loglik());
        }
    }
    let rate = |a: usize, p: usize| if p == 0 { 0.0 } else { a as f64 / p as f64 };
    Ok(McmcTrace {
        chain,
        seed,
        states,
        log_likelihood,
        continuous_acceptance: rate(ch.accepted_continuous, ch.proposed_continuous),
        selection_acceptance: rate(ch.accepted_selection, ch.proposed_selection),
    })
}
