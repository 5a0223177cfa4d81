#ifndef GATEDVOL_H
#define GATEDVOL_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Call outcome.
 */
typedef enum GvStatus {
  GV_STATUS_OK = 0,
  GV_STATUS_NULL_POINTER = 1,
  GV_STATUS_INVALID_ARGUMENT = 2,
  GV_STATUS_DATA_ERROR = 3,
  GV_STATUS_NUMERICAL_ERROR = 4,
  GV_STATUS_PANIC = 5,
} GvStatus;

/**
 * Result of [`gv_fit`].
 */
typedef struct GvFit GvFit;

/**
 * A model family with its gate wiring and current parameters.
 */
typedef struct GvModel GvModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *gv_version(void);

/**
 * Message of the last failed call on this thread; empty after a success.
 * Valid until the next call on the same thread.
 */
const char *gv_last_error(void);

/**
 * Creates a model of `family` (e.g. `"GARCH"`, `"TGVOL"`) whose active
 * gates read all `n_features` inputs. `lags` sets the fractional truncation
 * (0 keeps the default). Parameters start at the reference values.
 *
 * # Safety
 * `family` must be a NUL-terminated string; `out` must be writable.
 */
enum GvStatus gv_model_new(const char *family,
                           size_t n_features,
                           size_t lags,
                           struct GvModel **out);

/**
 * # Safety
 * `m` must be null or a handle from [`gv_model_new`] not yet freed.
 */
void gv_model_free(struct GvModel *m);

/**
 * Number of natural parameters; 0 for a null handle.
 *
 * # Safety
 * `m` must be null or a live model handle.
 */
size_t gv_model_num_params(const struct GvModel *m);

/**
 * Copies the parameters (layout order: ω, α, γ_lev, β, β_low, β_high,
 * γ_p…, κ, η…, d̄, γ_d…, active entries only) into `out[len]`.
 *
 * # Safety
 * `m` must be a live model handle; `out` valid for `len` writes.
 */
enum GvStatus gv_model_get_params(const struct GvModel *m, double *out, size_t len);

/**
 * # Safety
 * `m` must be a live model handle; `values` valid for `len` reads.
 */
enum GvStatus gv_model_set_params(struct GvModel *m, const double *values, size_t len);

/**
 * Filters `returns[n]` and writes `h_out[n]`; `loglik_out` (optional)
 * receives the post-burn-in quasi log-likelihood.
 *
 * # Safety
 * Pointers must be valid for the stated lengths; `loglik_out` may be null.
 */
enum GvStatus gv_filter(const struct GvModel *m,
                        const double *returns,
                        size_t n,
                        const double *feats,
                        size_t k,
                        double *h_out,
                        double *loglik_out);

/**
 * One-step-ahead variance after the last observation.
 *
 * # Safety
 * Pointers must be valid for the stated lengths.
 */
enum GvStatus gv_forecast_next(const struct GvModel *m,
                               const double *returns,
                               size_t n,
                               const double *feats,
                               size_t k,
                               double *h_next);

/**
 * Simulates `n` returns with i.i.d. standard normal gate inputs; writes
 * `returns_out[n]` and `h_out[n]`. Deterministic in `seed`.
 *
 * # Safety
 * Output pointers must be valid for `n` writes.
 */
enum GvStatus gv_simulate(const struct GvModel *m,
                          size_t n,
                          uint64_t seed,
                          double *returns_out,
                          double *h_out);

/**
 * Gaussian QMLE with `starts` multi-starts (0 keeps the default). On
 * success `*out` receives a fit handle and the model's parameters are
 * replaced by the estimate.
 *
 * # Safety
 * Pointers must be valid for the stated lengths; `out` writable.
 */
enum GvStatus gv_fit(struct GvModel *m,
                     const double *returns,
                     size_t n,
                     const double *feats,
                     size_t k,
                     uint64_t seed,
                     size_t starts,
                     struct GvFit **out);

/**
 * # Safety
 * `f` must be null or a handle from [`gv_fit`] not yet freed.
 */
void gv_fit_free(struct GvFit *f);

/**
 * Quasi log-likelihood at the estimate; `NaN` for a null handle.
 *
 * # Safety
 * `f` must be null or a live fit handle.
 */
double gv_fit_loglik(const struct GvFit *f);

/**
 * Whether a stopping rule was met.
 *
 * # Safety
 * `f` must be null or a live fit handle.
 */
bool gv_fit_converged(const struct GvFit *f);

/**
 * Sandwich standard errors into `out[len]`; `NumericalError` when the
 * covariance could not be formed.
 *
 * # Safety
 * `f` must be a live fit handle; `out` valid for `len` writes.
 */
enum GvStatus gv_fit_std_errors(const struct GvFit *f, double *out, size_t len);

/**
 * Full fit report as JSON, owned by the handle.
 *
 * # Safety
 * `f` must be null or a live fit handle.
 */
const char *gv_fit_json(const struct GvFit *f);

/**
 * Local Whittle estimate of the memory order of `x[n]` (`n ≥ 256`).
 *
 * # Safety
 * `x` valid for `n` reads; `d_out` writable.
 */
enum GvStatus gv_local_whittle(const double *x, size_t n, double band_fraction, double *d_out);

/**
 * Gaussian VaR and ES (positive loss magnitudes) for variance `h` at
 * tail `level` in (0, 0.5).
 *
 * # Safety
 * Output pointers must be writable.
 */
enum GvStatus gv_var_es(double h, double level, double *var_out, double *es_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GATEDVOL_H */
