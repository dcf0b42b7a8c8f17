//! Gaussian kernel and the dense factorizations the sampler needs.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::cholesky::llt::factor::{
    cholesky_in_place, cholesky_in_place_scratch, LltParams, LltRegularization,
};
use faer::linalg::triangular_solve::{solve_lower_triangular_in_place, solve_upper_triangular_in_place};
use faer::{Mat, Par, Spec};
use nalgebra::DMatrix;

use crate::error::{Error, Result};

const JITTER_BASE: f64 = 1e-8;
const JITTER_ATTEMPTS: usize = 3;

/// Distances beyond this give kernel entries below `exp(-40) ≈ 4e-18`,
/// which are stored as exact zeros. Below machine precision next to the
/// unit diagonal, and it keeps subnormals out of the factorization.
pub(crate) const DISTANCE_CUTOFF: f64 = 40.0;

/// `exp(-d)` as used in every factorization, flushed to zero past
/// [`DISTANCE_CUTOFF`].
#[inline]
pub(crate) fn kernel_value(d: f64) -> f64 {
    exp_neg_one(d)
}

/// `K_ab = exp(-Σ_m r_m (Z_am - Z_bm)²)`.
pub fn gaussian_kernel(z: &DMatrix<f64>, r: &[f64]) -> Result<DMatrix<f64>> {
    if r.len() != z.ncols() {
        return Err(Error::InvalidArgument(format!(
            "{} kernel scales for {} exposures",
            r.len(),
            z.ncols()
        )));
    }
    if r.iter().any(|&v| !(v >= 0.0)) {
        return Err(Error::InvalidArgument("kernel scales must be non-negative".into()));
    }
    let n = z.nrows();
    let mut k = DMatrix::from_element(n, n, 1.0);
    for a in 0..n {
        for b in 0..a {
            let d: f64 = r
                .iter()
                .enumerate()
                .filter(|(_, &rm)| rm > 0.0)
                .map(|(m, &rm)| {
                    let diff = z[(a, m)] - z[(b, m)];
                    rm * diff * diff
                })
                .sum();
            let v = (-d).exp();
            k[(a, b)] = v;
            k[(b, a)] = v;
        }
    }
    Ok(k)
}

/// Exposure matrix stored row-major for fast pairwise distances.
#[derive(Debug, Clone)]
pub(crate) struct PointSet {
    pub n: usize,
    pub p: usize,
    data: Vec<f64>,
}

impl PointSet {
    pub fn new(z: &DMatrix<f64>) -> Self {
        let (n, p) = z.shape();
        let mut data = Vec::with_capacity(n * p);
        for i in 0..n {
            for j in 0..p {
                data.push(z[(i, j)]);
            }
        }
        PointSet { n, p, data }
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.p..(i + 1) * self.p]
    }
}

/// Squared weighted distance over the active dimensions, accumulated in the
/// order given.
#[inline]
pub(crate) fn weighted_sq_dist(a: &[f64], b: &[f64], active: &[(usize, f64)]) -> f64 {
    let mut d = 0.0;
    for &(m, rm) in active {
        let diff = a[m] - b[m];
        d += rm * diff * diff;
    }
    d
}

/// Largest pair cache, in stored values, that a factorizer will build.
const PAIR_CACHE_LIMIT: usize = 1 << 22;

/// Per-exposure squared differences for every pair `i > j`, packed column
/// by column (column `j` holds rows `j+1..n`).
struct PairCache {
    per_exposure: Vec<Vec<f64>>,
}

impl PairCache {
    fn build(points: &PointSet) -> Option<Self> {
        let n = points.n;
        let pairs = n * n.saturating_sub(1) / 2;
        if pairs * points.p > PAIR_CACHE_LIMIT {
            return None;
        }
        let per_exposure = (0..points.p)
            .map(|m| {
                let mut v = Vec::with_capacity(pairs);
                for j in 0..n {
                    let zj = points.row(j)[m];
                    for i in (j + 1)..n {
                        let diff = points.row(i)[m] - zj;
                        v.push(diff * diff);
                    }
                }
                v
            })
            .collect();
        Some(PairCache { per_exposure })
    }
}

/// Reusable workspace for factoring `I + lam K(r)`.
pub(crate) struct Factorizer {
    buffer: MemBuffer,
    cache: Option<PairCache>,
}

impl Factorizer {
    pub fn new(points: &PointSet) -> Self {
        let n = points.n;
        let req = cholesky_in_place_scratch::<f64>(n, Par::Seq, Spec::<LltParams, f64>::default());
        Factorizer {
            buffer: MemBuffer::new(req),
            cache: PairCache::build(points),
        }
    }

    /// Kernel entries `K_ij`, `i > j`, of column `j` into `col` (length
    /// `n - j - 1`).
    fn kernel_column(&self, points: &PointSet, active: &[(usize, f64)], j: usize, col: &mut [f64]) {
        let n = points.n;
        let below = col.len();
        match &self.cache {
            Some(cache) => {
                let offset = j * n - j * (j + 1) / 2;
                col.fill(0.0);
                for &(m, rm) in active {
                    let src = &cache.per_exposure[m][offset..offset + below];
                    for (d, s) in col.iter_mut().zip(src) {
                        *d += rm * s;
                    }
                }
            }
            None => {
                let rj = points.row(j);
                for (k, d) in col.iter_mut().enumerate() {
                    *d = weighted_sq_dist(points.row(j + 1 + k), rj, active);
                }
            }
        }
        exp_neg_in_place(col);
    }

    /// Writes the lower Cholesky factor of `I + lam K(r)` into `out`
    /// (lower triangle only). `active` lists `(exposure, r_m)` pairs.
    pub fn factor_covariance(
        &mut self,
        points: &PointSet,
        active: &[(usize, f64)],
        lam: f64,
        out: &mut Mat<f64>,
    ) -> Result<()> {
        let n = points.n;
        let mut jitter = 0.0;
        for attempt in 0..=JITTER_ATTEMPTS {
            for j in 0..n {
                let col = out
                    .col_mut(j)
                    .try_as_col_major_mut()
                    .expect("owned matrices are column-major")
                    .as_slice_mut();
                col[j] = 1.0 + lam + jitter;
                let below = &mut col[j + 1..];
                self.kernel_column(points, active, j, below);
                for v in below.iter_mut() {
                    *v *= lam;
                }
            }
            let res = cholesky_in_place(
                out.as_mut(),
                LltRegularization::default(),
                Par::Seq,
                MemStack::new(&mut self.buffer),
                Spec::default(),
            );
            if res.is_ok() {
                return Ok(());
            }
            jitter = if attempt == 0 {
                JITTER_BASE
            } else {
                jitter * 10.0
            };
        }
        Err(Error::LinearAlgebra(format!(
            "Cholesky of I + lam*K failed after {JITTER_ATTEMPTS} jitter escalations"
        )))
    }
}

const LOG2_E: f64 = std::f64::consts::LOG2_E;
const LN2_HI: f64 = 0.693_145_751_953_125;
const LN2_LO: f64 = 1.428_606_820_309_417_3e-6;
/// `1.5 · 2^52`: adding it rounds to an integer held in the low mantissa bits.
const ROUND_MAGIC: f64 = 6_755_399_441_055_744.0;

/// `exp(-x)` for one value, flushed to zero past [`DISTANCE_CUTOFF`].
///
/// Cody–Waite reduction and a degree-13 Taylor polynomial on
/// `|r| ≤ ln2/2`; relative error within a couple of ulps. Written without
/// branches or libm calls so it maps lane for lane onto SIMD.
#[inline(always)]
fn exp_neg_one(x: f64) -> f64 {
    let t = -x.min(DISTANCE_CUTOFF + 1.0);
    let shifted = t * LOG2_E + ROUND_MAGIC;
    let k = shifted - ROUND_MAGIC;
    let r = (t - k * LN2_HI) - k * LN2_LO;
    let mut p = EXP_COEFFS[0];
    for &a in &EXP_COEFFS[1..] {
        p = p * r + a;
    }
    let ki = shifted.to_bits().wrapping_sub(ROUND_MAGIC.to_bits()) as i64;
    let scale = f64::from_bits(((ki + 1023) as u64) << 52);
    let v = p * scale;
    if x > DISTANCE_CUTOFF {
        0.0
    } else {
        v
    }
}

fn exp_neg_slice(xs: &mut [f64]) {
    for x in xs.iter_mut() {
        *x = exp_neg_one(*x);
    }
}

/// Taylor coefficients of `exp`, highest degree first.
const EXP_COEFFS: [f64; 14] = [
    1.0 / 6_227_020_800.0,
    1.0 / 479_001_600.0,
    1.0 / 39_916_800.0,
    1.0 / 3_628_800.0,
    1.0 / 362_880.0,
    1.0 / 40_320.0,
    1.0 / 5_040.0,
    1.0 / 720.0,
    1.0 / 120.0,
    1.0 / 24.0,
    1.0 / 6.0,
    0.5,
    1.0,
    1.0,
];

/// Four lanes of [`exp_neg_one`], same operations in the same order.
#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
#[inline]
unsafe fn exp_neg_lanes(x: std::arch::x86_64::__m256d) -> std::arch::x86_64::__m256d {
    use std::arch::x86_64::*;
    let magic = _mm256_set1_pd(ROUND_MAGIC);
    // `min_pd` returns its second operand on NaN, as `f64::min` does.
    let t = _mm256_xor_pd(
        _mm256_min_pd(x, _mm256_set1_pd(DISTANCE_CUTOFF + 1.0)),
        _mm256_set1_pd(-0.0),
    );
    let shifted = _mm256_add_pd(_mm256_mul_pd(t, _mm256_set1_pd(LOG2_E)), magic);
    let k = _mm256_sub_pd(shifted, magic);
    let r = _mm256_sub_pd(
        _mm256_sub_pd(t, _mm256_mul_pd(k, _mm256_set1_pd(LN2_HI))),
        _mm256_mul_pd(k, _mm256_set1_pd(LN2_LO)),
    );
    let mut p = _mm256_set1_pd(EXP_COEFFS[0]);
    for &a in &EXP_COEFFS[1..] {
        p = _mm256_add_pd(_mm256_mul_pd(p, r), _mm256_set1_pd(a));
    }
    let ki = _mm256_sub_epi64(
        _mm256_castpd_si256(shifted),
        _mm256_set1_epi64x(ROUND_MAGIC.to_bits() as i64),
    );
    let scale = _mm256_castsi256_pd(_mm256_slli_epi64::<52>(_mm256_add_epi64(
        ki,
        _mm256_set1_epi64x(1023),
    )));
    let over = _mm256_cmp_pd::<_CMP_GT_OQ>(x, _mm256_set1_pd(DISTANCE_CUTOFF));
    _mm256_andnot_pd(over, _mm256_mul_pd(p, scale))
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn exp_neg_slice_avx2(xs: &mut [f64]) {
    use std::arch::x86_64::*;
    // Two independent chains per step hide the Horner latency.
    let mut pairs = xs.chunks_exact_mut(8);
    for c in &mut pairs {
        let a = exp_neg_lanes(_mm256_loadu_pd(c.as_ptr()));
        let b = exp_neg_lanes(_mm256_loadu_pd(c.as_ptr().add(4)));
        _mm256_storeu_pd(c.as_mut_ptr(), a);
        _mm256_storeu_pd(c.as_mut_ptr().add(4), b);
    }
    let rest = pairs.into_remainder();
    let mut quads = rest.chunks_exact_mut(4);
    for c in &mut quads {
        _mm256_storeu_pd(c.as_mut_ptr(), exp_neg_lanes(_mm256_loadu_pd(c.as_ptr())));
    }
    for x in quads.into_remainder() {
        *x = exp_neg_one(*x);
    }
}

/// Replaces each `x ≥ 0` by `exp(-x)` (zero past the cutoff). Every path
/// performs the same IEEE operations, so results do not depend on the CPU.
pub(crate) fn exp_neg_in_place(xs: &mut [f64]) {
    #[cfg(target_arch = "x86_64")]
    {
        if std::arch::is_x86_feature_detected!("avx2") {
            // SAFETY: the feature was detected at runtime.
            unsafe { exp_neg_slice_avx2(xs) };
            return;
        }
    }
    exp_neg_slice(xs)
}

/// Solves `L X = B` in place for lower-triangular `L`.
pub(crate) fn forward_solve(l: &Mat<f64>, rhs: &mut Mat<f64>) {
    solve_lower_triangular_in_place(l.as_ref(), rhs.as_mut(), Par::Seq);
}

/// `2 Σ log L_ii`.
pub(crate) fn log_det_from_factor(l: &Mat<f64>) -> f64 {
    (0..l.nrows()).map(|i| l[(i, i)].ln()).sum::<f64>() * 2.0
}

/// Solves `(L Lᵀ) x = b` for one vector.
pub(crate) fn cholesky_solve_vec(l: &Mat<f64>, b: &[f64]) -> Vec<f64> {
    let mut x = Mat::<f64>::from_fn(b.len(), 1, |i, _| b[i]);
    solve_lower_triangular_in_place(l.as_ref(), x.as_mut(), Par::Seq);
    solve_upper_triangular_in_place(l.transpose(), x.as_mut(), Par::Seq);
    (0..b.len()).map(|i| x[(i, 0)]).collect()
}
