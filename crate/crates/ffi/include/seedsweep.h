#ifndef SEEDSWEEP_H
#define SEEDSWEEP_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SsStatus {
  SS_STATUS_OK = 0,
  SS_STATUS_NULL_POINTER = 1,
  SS_STATUS_INVALID_ARGUMENT = 2,
  SS_STATUS_DATA_ERROR = 3,
  SS_STATUS_RUNTIME_ERROR = 4,
  SS_STATUS_PANIC = 5,
} SsStatus;

/*
 Outcome, exposures and covariates (with an intercept added).
 */
typedef struct SsDataset SsDataset;

/*
 Seeded random stream.
 */
typedef struct SsRng SsRng;

/*
 Rubin-pooled estimate.
 */
typedef struct SsPooled {
  double estimate;
  double within_var;
  double between_var;
  double total_var;
  double df;
  double ci_lower;
  double ci_upper;
} SsPooled;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message for the most recent failure on this thread, or null. Free with
 [`ss_string_free`].
 */
char *ss_last_error_message(void);

/*
 Frees a string returned by this library.

 # Safety
 `s` must come from this library and not have been freed.
 */
void ss_string_free(char *s);

struct SsRng *ss_rng_new(uint64_t seed);

/*
 # Safety
 `rng` must be null or a live handle from [`ss_rng_new`].
 */
void ss_rng_free(struct SsRng *rng);

/*
 # Safety
 `rng` must be a live handle; `value` must be writable.
 */
enum SsStatus ss_rng_uniform(struct SsRng *rng, double *value);

/*
 # Safety
 `rng` must be a live handle; `value` must be writable.
 */
enum SsStatus ss_rng_normal(struct SsRng *rng, double *value);

/*
 Builds a dataset from row-major `z` (`n × p`) and `x` (`n × c`, no
 intercept column). `groups` holds `p` group indices, or is null for one
 group per exposure.

 # Safety
 Buffers must hold the stated number of elements; `dataset` must be
 writable.
 */
enum SsStatus ss_dataset_new(size_t n,
                             size_t p,
                             size_t c,
                             const double *y,
                             const double *z,
                             const double *x,
                             const size_t *groups,
                             struct SsDataset **dataset);

/*
 # Safety
 `dataset` must be null or a live handle from [`ss_dataset_new`].
 */
void ss_dataset_free(struct SsDataset *dataset);

/*
 `k`-fold CV lasso under `seed` with a 100-point grid, refit at the
 chosen λ. `beta` receives `p + c + 1` original-scale coefficients
 (exposures, intercept, covariates).

 # Safety
 `dataset` must be live; `beta` must hold `p + c + 1` values.
 */
enum SsStatus ss_cv_lasso(const struct SsDataset *dataset,
                          uint64_t seed,
                          size_t folds,
                          double *beta,
                          size_t beta_len,
                          double *lambda);

/*
 WQS with `q` quantiles and `n_bootstrap` resamples under `seed`.

 # Safety
 `dataset` must be live; `weights` must hold `p` values; the scalar
 outputs must be writable.
 */
enum SsStatus ss_wqs_run(const struct SsDataset *dataset,
                         uint64_t seed,
                         size_t q,
                         size_t n_bootstrap,
                         double *weights,
                         size_t weights_len,
                         double *index_beta,
                         double *index_se);

/*
 # Safety
 `estimates` and `variances` must hold `m` values; `result` must be
 writable.
 */
enum SsStatus ss_rubins_pool(const double *estimates,
                             const double *variances,
                             size_t m,
                             double df_complete,
                             struct SsPooled *result);

/*
 R̂ for `m` chains of `n` draws stored chain after chain.

 # Safety
 `draws` must hold `m * n` values; `rhat` must be writable.
 */
enum SsStatus ss_gelman_rubin(const double *draws, size_t m, size_t n, double *rhat);

/*
 Runs a default-configured sweep of `model` ("lasso", "group_lasso",
 "wqs" or "bkmr") over `seeds` and returns the summary as JSON. Free the
 string with [`ss_string_free`].

 # Safety
 `dataset` must be live, `model` a NUL-terminated string, `seeds` hold
 `n_seeds` values and `json` be writable.
 */
enum SsStatus ss_sweep_json(const struct SsDataset *dataset,
                            const char *model,
                            const uint64_t *seeds,
                            size_t n_seeds,
                            size_t jobs,
                            char **json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SEEDSWEEP_H */
