#ifndef DCF_COEXIST_H
#define DCF_COEXIST_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DcfStatus {
  DCF_STATUS_OK = 0,
  DCF_STATUS_NULL_POINTER = 1,
  DCF_STATUS_INVALID_ARGUMENT = 2,
  DCF_STATUS_VALIDATION = 3,
  DCF_STATUS_NON_CONVERGENCE = 4,
  DCF_STATUS_CONFIG = 5,
  DCF_STATUS_MISMATCH = 6,
  DCF_STATUS_IO = 7,
  /**
   * A Rust panic was caught at the boundary.
   */
  DCF_STATUS_PANIC = 8,
} DcfStatus;

typedef enum DcfScheme {
  DCF_SCHEME_SENSING = 0,
  DCF_SCHEME_SILENT_PERIOD = 1,
  DCF_SCHEME_COEXIST = 2,
} DcfScheme;

/**
 * Opaque scenario handle.
 */
typedef struct DcfScenario DcfScenario;

/**
 * Solved model for one scenario.
 */
typedef struct DcfReport {
  double tau_p1;
  double p_p1;
  double tau_p2;
  double tau_s2;
  double p_p2;
  double p_s2;
  double alpha_b;
  double alpha_i;
  /**
   * NaN outside the sensing scheme.
   */
  double alpha_c;
  double pt;
  double st;
  double st_conditional;
  /**
   * Primary throughput without the secondary network.
   */
  double baseline_pt;
} DcfReport;

typedef struct DcfOptimum {
  enum DcfScheme scheme;
  /**
   * NaN unless sensing.
   */
  double t_us;
  uint32_t w_s;
  /**
   * NaN unless silent period.
   */
  double beta;
  double pt;
  double st;
  double baseline_pt;
  /**
   * False when no grid point meets the loss cap; the point is then the
   * one with the highest primary throughput.
   */
  bool feasible;
} DcfOptimum;

/**
 * Pooled simulation estimates, indexed tau_p1, tau_p2, tau_s2, alpha_c,
 * pt, st.
 */
typedef struct DcfSimSummary {
  double value[6];
  /**
   * Batch-means standard errors.
   */
  double se[6];
} DcfSimSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *dcf_last_error(void);

/**
 * Library version, a static NUL-terminated string.
 */
const char *dcf_version(void);

/**
 * Creates a scenario from a named preset ("reference").
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a valid pointer.
 */
enum DcfStatus dcf_scenario_new_preset(const char *name, struct DcfScenario **out);

/**
 * Creates a scenario from TOML config text (same keys as the CLI flags).
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum DcfStatus dcf_scenario_from_toml(const char *text, struct DcfScenario **out);

/**
 * Sets one config key from its textual value. The scenario is left
 * unchanged when the result would be invalid.
 *
 * # Safety
 * `scenario` must come from this library; `key` and `value` must be
 * NUL-terminated strings.
 */
enum DcfStatus dcf_scenario_set(struct DcfScenario *scenario, const char *key, const char *value);

/**
 * Releases a scenario; NULL is ignored.
 *
 * # Safety
 * `scenario` must come from this library and not be used afterwards.
 */
void dcf_scenario_free(struct DcfScenario *scenario);

/**
 * Solves the model for `scenario`.
 *
 * # Safety
 * `scenario` must come from this library and `out` be a valid pointer.
 */
enum DcfStatus dcf_analyze(const struct DcfScenario *scenario, struct DcfReport *out);

/**
 * Maximizes secondary throughput for `scheme` (a `DcfScheme` value) over
 * the default grids, keeping primary throughput at least `(1 - loss_cap)`
 * of its value alone.
 *
 * # Safety
 * `scenario` must come from this library and `out` be a valid pointer.
 */
enum DcfStatus dcf_optimize(const struct DcfScenario *scenario,
                            int32_t scheme,
                            double loss_cap,
                            struct DcfOptimum *out);

/**
 * Runs `replications` simulations of `run_length` slots (5 % warmup, 10
 * batches each) on streams `0..replications` of `seed` and pools them.
 *
 * # Safety
 * `scenario` must come from this library and `out` be a valid pointer.
 */
enum DcfStatus dcf_simulate(const struct DcfScenario *scenario,
                            uint64_t seed,
                            uint64_t run_length,
                            uint32_t replications,
                            struct DcfSimSummary *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DCF_COEXIST_H */
