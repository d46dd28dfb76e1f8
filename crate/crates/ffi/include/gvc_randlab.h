#ifndef GVC_RANDLAB_H
#define GVC_RANDLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum GvcStatus {
  GVC_STATUS_OK = 0,
  GVC_STATUS_NULL_POINTER = 1,
  GVC_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Singular system, non-substochastic matrix, failed convergence.
   */
  GVC_STATUS_NUMERICAL = 3,
  /**
   * Result outside the range where the closed forms are valid or representable.
   */
  GVC_STATUS_OUT_OF_RANGE = 4,
  GVC_STATUS_IO = 5,
  /**
   * Malformed input file or accounting identity violated.
   */
  GVC_STATUS_FORMAT = 6,
  GVC_STATUS_PANIC = 7,
} GvcStatus;

/**
 * Pass only the listed values; the selector enums are read as-is.
 */
typedef enum GvcDisorder {
  GVC_DISORDER_EXPONENTIAL = 0,
  GVC_DISORDER_UNIFORM = 1,
  GVC_DISORDER_LOG_NORMAL = 2,
} GvcDisorder;

typedef enum GvcPolicy {
  GVC_POLICY_FLAG = 0,
  GVC_POLICY_REJECT = 1,
} GvcPolicy;

typedef enum GvcMeasure {
  GVC_MEASURE_U1 = 0,
  GVC_MEASURE_D1 = 1,
  GVC_MEASURE_U_TILDE = 2,
  GVC_MEASURE_D_TILDE = 3,
} GvcMeasure;

/**
 * Opaque ensemble result.
 */
typedef struct GvcEnsemble GvcEnsemble;

/**
 * Opaque input-output table.
 */
typedef struct GvcTable GvcTable;

typedef struct GvcMoments {
  double e_r;
  double e_rp;
  double e_rrp;
  double e_r2;
} GvcMoments;

/**
 * Ensemble parameters. `mu_prime`, `sigma`, `demand_log_mean` and
 * `demand_log_sigma` are read only for log-normal disorder. `sector` is
 * 1-based; `workers = 0` means one.
 */
typedef struct GvcEnsembleParams {
  size_t n_sectors;
  double mu;
  double mu_f;
  enum GvcDisorder disorder;
  double mu_prime;
  double sigma;
  double demand_log_mean;
  double demand_log_sigma;
  double sparsity;
  uint64_t seed;
  size_t instances;
  size_t sector;
  enum GvcPolicy policy;
  size_t workers;
} GvcEnsembleParams;

typedef struct GvcRecord {
  size_t instance;
  double u1;
  double d1;
  double u_tilde;
  double d_tilde;
  size_t violations;
} GvcRecord;

typedef struct GvcFit {
  double slope;
  double intercept;
  double pearson_r;
  double covariance;
} GvcFit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *gvc_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *gvc_version(void);

/**
 * Exact covariance `C_N(mu, mu_f)`.
 *
 * # Safety
 * `out` must be NULL or valid for writing one `double`.
 */
enum GvcStatus gvc_covariance_exact(size_t n, double mu, double mu_f, double *out);

/**
 * Regression slope implied by the exact covariance (identically one).
 *
 * # Safety
 * `out` must be NULL or valid for writing one `double`.
 */
enum GvcStatus gvc_slope_exact(size_t n, double mu, double mu_f, double *out);

/**
 * Exact first-row moments.
 *
 * # Safety
 * `out` must be NULL or valid for writing one `GvcMoments`.
 */
enum GvcStatus gvc_moments_analytic(size_t n, double mu, double mu_f, struct GvcMoments *out);

/**
 * `J(k)`.
 *
 * # Safety
 * `out` must be NULL or valid for writing one `double`.
 */
enum GvcStatus gvc_j_integral(size_t k, double mu, double mu_f, double *out);

/**
 * `L(k)`, `k >= 2`.
 *
 * # Safety
 * `out` must be NULL or valid for writing one `double`.
 */
enum GvcStatus gvc_l_integral(size_t k, double mu, double mu_f, double *out);

/**
 * Samples an ensemble. On success `*out` owns a handle for
 * [`gvc_ensemble_free`].
 *
 * # Safety
 * `params` must be NULL or point to a valid `GvcEnsembleParams`; `out` must
 * be NULL or valid for writing one pointer.
 */
enum GvcStatus gvc_ensemble_run(const struct GvcEnsembleParams *params, struct GvcEnsemble **out);

/**
 * Number of records, 0 for NULL.
 *
 * # Safety
 * `e` must be NULL or a live handle from [`gvc_ensemble_run`].
 */
size_t gvc_ensemble_len(const struct GvcEnsemble *e);

/**
 * Record `index` (0-based) of the ensemble.
 *
 * # Safety
 * `e` must be NULL or a live handle; `out` NULL or valid for one `GvcRecord`.
 */
enum GvcStatus gvc_ensemble_record(const struct GvcEnsemble *e,
                                   size_t index,
                                   struct GvcRecord *out);

/**
 * OLS fit of measure `y` on measure `x` across the ensemble.
 *
 * # Safety
 * `e` must be NULL or a live handle; `out` NULL or valid for one `GvcFit`.
 */
enum GvcStatus gvc_ensemble_fit(const struct GvcEnsemble *e,
                                enum GvcMeasure x,
                                enum GvcMeasure y,
                                struct GvcFit *out);

/**
 * Writes the records CSV (`instance,U1,D1,U_tilde,D_tilde,violations`).
 *
 * # Safety
 * `e` must be NULL or a live handle; `path` NULL or a NUL-terminated string.
 */
enum GvcStatus gvc_ensemble_write_csv(const struct GvcEnsemble *e, const char *path);

/**
 * Releases an ensemble; NULL is ignored.
 *
 * # Safety
 * `e` must be NULL or a handle from [`gvc_ensemble_run`] not yet freed.
 */
void gvc_ensemble_free(struct GvcEnsemble *e);

/**
 * Reads a CSV table; `tol` is the relative tolerance of the accounting
 * identities (non-positive selects 1e-6).
 *
 * # Safety
 * `path` must be NULL or NUL-terminated; `out` NULL or valid for one pointer.
 */
enum GvcStatus gvc_table_ingest(const char *path, double tol, struct GvcTable **out);

/**
 * Builds a table from `n * n` row-major flows and `n` final demands.
 *
 * # Safety
 * `flows` must hold `n * n` doubles and `final_demand` `n`; `out` must be
 * NULL or valid for one pointer.
 */
enum GvcStatus gvc_table_from_flows(size_t n,
                                    const double *flows,
                                    const double *final_demand,
                                    struct GvcTable **out);

/**
 * Number of sectors, 0 for NULL.
 *
 * # Safety
 * `t` must be NULL or a live table handle.
 */
size_t gvc_table_sectors(const struct GvcTable *t);

/**
 * Fraction of non-zero flows.
 *
 * # Safety
 * `t` must be NULL or a live handle; `out` NULL or valid for one `double`.
 */
enum GvcStatus gvc_table_density(const struct GvcTable *t, double *out);

/**
 * Per-sector `U1`, `D1`, `U~`, `D~`. Each non-NULL array receives
 * [`gvc_table_sectors`] values; NULL arrays are skipped.
 *
 * # Safety
 * `t` must be NULL or a live handle; each array NULL or valid for
 * `gvc_table_sectors(t)` doubles.
 */
enum GvcStatus gvc_table_measures(const struct GvcTable *t,
                                  double *u1,
                                  double *d1,
                                  double *u_tilde,
                                  double *d_tilde);

/**
 * Releases a table; NULL is ignored.
 *
 * # Safety
 * `t` must be NULL or a table handle not yet freed.
 */
void gvc_table_free(struct GvcTable *t);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GVC_RANDLAB_H */
