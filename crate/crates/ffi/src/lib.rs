//! C interface to seedsweep.
//!
//! Objects cross the boundary as opaque handles created by `ss_*_new` and
//! released by the matching `ss_*_free`. Every fallible call returns an
//! [`SsStatus`]; on failure [`ss_last_error_message`] returns the message
//! for the calling thread. Matrices are passed row-major.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use nalgebra::{DMatrix, DVector};
use seedsweep::bkmr::gelman_rubin;
use seedsweep::penalized::{cv_lasso_with, refit_lasso, LambdaGrid, PenalizedConfig};
use seedsweep::sweep::{run_sweep, summarize, ModelKind, SweepConfig};
use seedsweep::wqs::{rubins_pool, wqs_run, WqsConfig};
use seedsweep::{Dataset, Error, ErrorKind, GroupSpec, SeedStream};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DataError = 3,
    RuntimeError = 4,
    Panic = 5,
}

/// Seeded random stream.
pub struct SsRng(SeedStream);

/// Outcome, exposures and covariates (with an intercept added).
pub struct SsDataset(Dataset);

/// Rubin-pooled estimate.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SsPooled {
    pub estimate: f64,
    pub within_var: f64,
    pub between_var: f64,
    pub total_var: f64,
    pub df: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<String>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(e: &Error) -> SsStatus {
    match e.kind() {
        ErrorKind::Usage => SsStatus::InvalidArgument,
        ErrorKind::Data => SsStatus::DataError,
        ErrorKind::Runtime => SsStatus::RuntimeError,
    }
}

fn guard(f: impl FnOnce() -> Result<(), SsStatus>) -> SsStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SsStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic".into());
            SsStatus::Panic
        }
    }
}

fn fail(e: Error) -> SsStatus {
    set_error(format!("[{}] {e}", e.code()));
    status_of(&e)
}

fn null(what: &str) -> SsStatus {
    set_error(format!("{what} is null"));
    SsStatus::NullPointer
}

unsafe fn view<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], SsStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn view_mut<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], SsStatus> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, SsStatus> {
    p.as_mut().ok_or_else(|| null(what))
}

/// Message for the most recent failure on this thread, or null. Free with
/// [`ss_string_free`].
#[no_mangle]
pub extern "C" fn ss_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|e| match e.borrow().as_ref() {
        Some(m) => CString::new(m.replace('\0', " "))
            .map(CString::into_raw)
            .unwrap_or(ptr::null_mut()),
        None => ptr::null_mut(),
    })
}

/// Frees a string returned by this library.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn ss_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

#[no_mangle]
pub extern "C" fn ss_rng_new(seed: u64) -> *mut SsRng {
    Box::into_raw(Box::new(SsRng(SeedStream::new(seed))))
}

/// # Safety
/// `rng` must be null or a live handle from [`ss_rng_new`].
#[no_mangle]
pub unsafe extern "C" fn ss_rng_free(rng: *mut SsRng) {
    if !rng.is_null() {
        drop(Box::from_raw(rng));
    }
}

/// # Safety
/// `rng` must be a live handle; `value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ss_rng_uniform(rng: *mut SsRng, value: *mut f64) -> SsStatus {
    guard(|| {
        let r = out(rng, "rng")?;
        *out(value, "value")? = r.0.uniform01();
        Ok(())
    })
}

/// # Safety
/// `rng` must be a live handle; `value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ss_rng_normal(rng: *mut SsRng, value: *mut f64) -> SsStatus {
    guard(|| {
        let r = out(rng, "rng")?;
        *out(value, "value")? = r.0.normal();
        Ok(())
    })
}

/// Builds a dataset from row-major `z` (`n × p`) and `x` (`n × c`, no
/// intercept column). `groups` holds `p` group indices, or is null for one
/// group per exposure.
///
/// # Safety
/// Buffers must hold the stated number of elements; `dataset` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn ss_dataset_new(
    n: usize,
    p: usize,
    c: usize,
    y: *const f64,
    z: *const f64,
    x: *const f64,
    groups: *const usize,
    dataset: *mut *mut SsDataset,
) -> SsStatus {
    guard(|| {
        let slot = out(dataset, "dataset")?;
        *slot = ptr::null_mut();
        let y = view(y, n, "y")?;
        let z = view(z, n * p, "z")?;
        let x = view(x, n * c, "x")?;
        let spec = if groups.is_null() {
            GroupSpec::singletons(p)
        } else {
            let a = view(groups, p, "groups")?.to_vec();
            let g = a.iter().copied().max().map_or(0, |m| m + 1);
            GroupSpec::new(a, (1..=g).map(|k| format!("g{k}")).collect()).map_err(fail)?
        };
        let d = Dataset::with_intercept(
            DVector::from_column_slice(y),
            DMatrix::from_row_slice(n, p, z),
            DMatrix::from_row_slice(n, c, x),
            (1..=p).map(|j| format!("z{j}")).collect(),
            (1..=c).map(|j| format!("x{j}")).collect(),
            spec,
        )
        .map_err(fail)?;
        *slot = Box::into_raw(Box::new(SsDataset(d)));
        Ok(())
    })
}

/// # Safety
/// `dataset` must be null or a live handle from [`ss_dataset_new`].
#[no_mangle]
pub unsafe extern "C" fn ss_dataset_free(dataset: *mut SsDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// `k`-fold CV lasso under `seed` with a 100-point grid, refit at the
/// chosen λ. `beta` receives `p + c + 1` original-scale coefficients
/// (exposures, intercept, covariates).
///
/// # Safety
/// `dataset` must be live; `beta` must hold `p + c + 1` values.
#[no_mangle]
pub unsafe extern "C" fn ss_cv_lasso(
    dataset: *const SsDataset,
    seed: u64,
    folds: usize,
    beta: *mut f64,
    beta_len: usize,
    lambda: *mut f64,
) -> SsStatus {
    guard(|| {
        let d = &dataset.as_ref().ok_or_else(|| null("dataset"))?.0;
        let width = d.p() + d.c();
        if beta_len != width {
            return Err(fail(Error::InvalidArgument(format!(
                "beta buffer has {beta_len} slots, expected {width}"
            ))));
        }
        let b = view_mut(beta, beta_len, "beta")?;
        let lam = out(lambda, "lambda")?;
        let cfg = PenalizedConfig {
            folds,
            ..PenalizedConfig::default()
        };
        cfg.validate().map_err(fail)?;
        let grid = LambdaGrid::for_lasso(d, cfg.lambda_ratio, cfg.n_lambda).map_err(fail)?;
        let mut rng = SeedStream::new(seed);
        let curve = cv_lasso_with(d, folds, &grid, cfg.rule, &mut rng, &cfg.fit_options())
            .map_err(fail)?;
        let fit = refit_lasso(d, &curve, &cfg.fit_options()).map_err(fail)?;
        b.copy_from_slice(&fit.beta);
        *lam = fit.lambda;
        Ok(())
    })
}

/// WQS with `q` quantiles and `n_bootstrap` resamples under `seed`.
///
/// # Safety
/// `dataset` must be live; `weights` must hold `p` values; the scalar
/// outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn ss_wqs_run(
    dataset: *const SsDataset,
    seed: u64,
    q: usize,
    n_bootstrap: usize,
    weights: *mut f64,
    weights_len: usize,
    index_beta: *mut f64,
    index_se: *mut f64,
) -> SsStatus {
    guard(|| {
        let d = &dataset.as_ref().ok_or_else(|| null("dataset"))?.0;
        if weights_len != d.p() {
            return Err(fail(Error::InvalidArgument(format!(
                "weights buffer has {weights_len} slots, expected {}",
                d.p()
            ))));
        }
        let w = view_mut(weights, weights_len, "weights")?;
        let beta = out(index_beta, "index_beta")?;
        let se = out(index_se, "index_se")?;
        let cfg = WqsConfig {
            q,
            n_bootstrap,
            ..WqsConfig::default()
        };
        cfg.validate().map_err(fail)?;
        let fit = wqs_run(d, &cfg, seed).map_err(fail)?;
        w.copy_from_slice(&fit.weights);
        *beta = fit.index_beta;
        *se = fit.index_se;
        Ok(())
    })
}

/// # Safety
/// `estimates` and `variances` must hold `m` values; `result` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn ss_rubins_pool(
    estimates: *const f64,
    variances: *const f64,
    m: usize,
    df_complete: f64,
    result: *mut SsPooled,
) -> SsStatus {
    guard(|| {
        let e = view(estimates, m, "estimates")?;
        let v = view(variances, m, "variances")?;
        let r = out(result, "result")?;
        let p = rubins_pool(e, v, df_complete).map_err(fail)?;
        *r = SsPooled {
            estimate: p.estimate,
            within_var: p.within_var,
            between_var: p.between_var,
            total_var: p.total_var,
            df: p.df,
            ci_lower: p.ci95.0,
            ci_upper: p.ci95.1,
        };
        Ok(())
    })
}

/// R̂ for `m` chains of `n` draws stored chain after chain.
///
/// # Safety
/// `draws` must hold `m * n` values; `rhat` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ss_gelman_rubin(
    draws: *const f64,
    m: usize,
    n: usize,
    rhat: *mut f64,
) -> SsStatus {
    guard(|| {
        let all = view(draws, m * n, "draws")?;
        let r = out(rhat, "rhat")?;
        let chains: Vec<Vec<f64>> = all.chunks(n.max(1)).map(<[f64]>::to_vec).collect();
        *r = gelman_rubin(&chains).map_err(fail)?;
        Ok(())
    })
}

/// Runs a default-configured sweep of `model` ("lasso", "group_lasso",
/// "wqs" or "bkmr") over `seeds` and returns the summary as JSON. Free the
/// string with [`ss_string_free`].
///
/// # Safety
/// `dataset` must be live, `model` a NUL-terminated string, `seeds` hold
/// `n_seeds` values and `json` be writable.
#[no_mangle]
pub unsafe extern "C" fn ss_sweep_json(
    dataset: *const SsDataset,
    model: *const c_char,
    seeds: *const u64,
    n_seeds: usize,
    jobs: usize,
    json: *mut *mut c_char,
) -> SsStatus {
    guard(|| {
        let slot = out(json, "json")?;
        *slot = ptr::null_mut();
        let d = &dataset.as_ref().ok_or_else(|| null("dataset"))?.0;
        if model.is_null() {
            return Err(null("model"));
        }
        let name = CStr::from_ptr(model)
            .to_str()
            .map_err(|_| fail(Error::InvalidArgument("model name is not UTF-8".into())))?;
        let kind: ModelKind = name.parse().map_err(fail)?;
        let mut cfg = SweepConfig::new(kind);
        cfg.seeds = view(seeds, n_seeds, "seeds")?.to_vec();
        cfg.parallelism = jobs.max(1);
        let results = run_sweep(d, &cfg).map_err(fail)?;
        let summary = summarize(&results).map_err(fail)?;
        let text = serde_json::to_string(&summary)
            .map_err(|e| fail(Error::Serialization(e.to_string())))?;
        *slot = CString::new(text)
            .map_err(|_| fail(Error::Serialization("summary contains NUL".into())))?
            .into_raw();
        Ok(())
    })
}
