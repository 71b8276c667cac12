#ifndef DYNPANEL_H
#define DYNPANEL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define DP_VARIANT_ADJACENT 0

#define DP_VARIANT_COMBINED 1

#define DP_VARIANT_GENERAL 2

#define DP_METHOD_NUMERICAL 0

#define DP_METHOD_MODIFIED 1

#define DP_METHOD_M_OUT_OF_N 2

#define DP_METHOD_CLASSIC 3

/**
 * Status codes. The first four match the CLI exit codes.
 */
typedef enum DpStatus {
  DP_STATUS_OK = 0,
  DP_STATUS_USAGE = 1,
  DP_STATUS_DATA = 2,
  DP_STATUS_NUMERICAL = 3,
  DP_STATUS_NULL_POINTER = 4,
  DP_STATUS_PANIC = 5,
} DpStatus;

/**
 * Opaque estimate handle; remembers the configuration it was computed with.
 */
typedef struct DpEstimate DpEstimate;

/**
 * Opaque panel handle.
 */
typedef struct DpPanel DpPanel;

typedef struct DpEstimateOptions {
  /**
   * One of the `DP_VARIANT_*` constants.
   */
  uint32_t variant;
  /**
   * Kernel bandwidth; values `<= 0` select the default rule.
   */
  double h;
  double gamma_lo;
  double gamma_hi;
  uint64_t seed;
} DpEstimateOptions;

typedef struct DpBootstrapOptions {
  /**
   * One of the `DP_METHOD_*` constants.
   */
  uint32_t method;
  size_t draws;
  double c;
  double alpha;
  /**
   * Resample size for m-out-of-n; 0 selects the default.
   */
  size_t m;
  uint64_t seed;
} DpBootstrapOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *dp_last_error(void);

/**
 * Defaults matching the library: adjacent objective, default bandwidth,
 * γ in [−3, 3], seed 0.
 */
struct DpEstimateOptions dp_estimate_options_default(void);

/**
 * Defaults: numerical bootstrap, 199 draws, c = 1, alpha = 0.05.
 */
struct DpBootstrapOptions dp_bootstrap_options_default(void);

/**
 * Reads a panel from a CSV file with header `id,t,y,x1..xK`.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a writable pointer.
 */
enum DpStatus dp_panel_load_csv(const char *path, struct DpPanel **out);

/**
 * Simulates benchmark design 1, 2 or 3.
 *
 * # Safety
 * `out` must be a writable pointer.
 */
enum DpStatus dp_panel_simulate(uint32_t design, size_t n, uint64_t seed, struct DpPanel **out);

/**
 * Builds a panel from row-major arrays: `y` holds `n·(t_max+1)` outcomes
 * for periods `0..=t_max`, `x` holds `n·t_max·k` regressors for periods
 * `1..=t_max`. The data are copied.
 *
 * # Safety
 * `y` and `x` must point to arrays of the stated lengths.
 */
enum DpStatus dp_panel_from_arrays(size_t n,
                                   size_t t_max,
                                   size_t k,
                                   const uint8_t *y,
                                   const double *x,
                                   struct DpPanel **out);

/**
 * # Safety
 * `panel` must come from a `dp_panel_*` constructor and not be used after.
 */
void dp_panel_free(struct DpPanel *panel);

/**
 * # Safety
 * `panel` must be a live handle; output pointers may be null to skip.
 */
enum DpStatus dp_panel_dims(const struct DpPanel *panel, size_t *n, size_t *t_max, size_t *k);

/**
 * Runs the two-step estimator. `opts` may be null for defaults.
 *
 * # Safety
 * `panel` must be a live handle, `opts` null or valid, `out` writable.
 */
enum DpStatus dp_estimate(const struct DpPanel *panel,
                          const struct DpEstimateOptions *opts,
                          struct DpEstimate **out);

/**
 * # Safety
 * `est` must come from [`dp_estimate`] and not be used after.
 */
void dp_estimate_free(struct DpEstimate *est);

/**
 * Copies `β̂` into `out`, which must hold exactly `k` values.
 *
 * # Safety
 * `est` must be live and `out` must point to `len` writable doubles.
 */
enum DpStatus dp_estimate_beta(const struct DpEstimate *est, double *out, size_t len);

/**
 * # Safety
 * `est` must be live and `out` writable.
 */
enum DpStatus dp_estimate_gamma(const struct DpEstimate *est, double *out);

/**
 * Bootstrap confidence intervals around `est`. `beta_lo`/`beta_hi` must
 * hold `k` values each. `opts` may be null for defaults.
 *
 * # Safety
 * Handles must be live and buffers writable for the stated sizes.
 */
enum DpStatus dp_bootstrap(const struct DpPanel *panel,
                           const struct DpEstimate *est,
                           const struct DpBootstrapOptions *opts,
                           double *beta_lo,
                           double *beta_hi,
                           size_t k,
                           double *gamma_lo,
                           double *gamma_hi);

/**
 * `Q₁ₙ(b)` for a direction of length `k`.
 *
 * # Safety
 * `panel` must be live, `b` must point to `k` doubles, `out` writable.
 */
enum DpStatus dp_q1_objective(const struct DpPanel *panel, const double *b, size_t k, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DYNPANEL_H */
