#ifndef STABLEMATCH_H
#define STABLEMATCH_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum SmStatus {
  SM_STATUS_OK = 0,
  SM_STATUS_NULL_POINTER = 1,
  SM_STATUS_INVALID_ARGUMENT = 2,
  SM_STATUS_INVALID_WEIGHT = 3,
  SM_STATUS_TIED_WEIGHTS = 4,
  SM_STATUS_MALFORMED_MATCHING = 5,
  SM_STATUS_CAP_EXCEEDED = 6,
  SM_STATUS_INTEGRATION = 7,
  SM_STATUS_INSUFFICIENT_HORIZON = 8,
  SM_STATUS_SLACK_BUDGET = 9,
  SM_STATUS_FORMAT = 10,
  SM_STATUS_IO = 11,
  SM_STATUS_BUFFER_TOO_SMALL = 12,
  SM_STATUS_PANIC = 13,
} SmStatus;

typedef enum SmRule {
  SM_RULE_ONE_TYPE = 0,
  SM_RULE_ASYMMETRIC = 1,
  SM_RULE_SYMMETRIC = 2,
} SmRule;

typedef enum SmMetric {
  SM_METRIC_EUCLIDEAN_TORUS = 0,
  SM_METRIC_HIERARCHICAL_RHO = 1,
  SM_METRIC_HIERARCHICAL_RHO_TILDE = 2,
} SmMetric;

typedef enum SmModel {
  SM_MODEL_ONE_TYPE = 0,
  /**
   * params: `eps`
   */
  SM_MODEL_ASYMMETRIC = 1,
  /**
   * params: colour probabilities
   */
  SM_MODEL_SYMMETRIC = 2,
} SmModel;

/**
 * Weighted instance (opaque).
 */
typedef struct SmInstance SmInstance;

/**
 * Matching on an instance (opaque).
 */
typedef struct SmMatching SmMatching;

/**
 * Bounds for one level of the hierarchical recursion.
 */
typedef struct SmLevelStats {
  int32_t level;
  double beta_lo;
  double beta_hi;
  double gamma_lo;
  double gamma_hi;
  double delta_lo;
  double delta_hi;
  double mean_lo;
} SmLevelStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *sm_last_error(void);

/**
 * Instance from a row-major `n x n` weight matrix. Only the upper
 * triangle is read; `INFINITY` marks an incompatible pair. `colors` may be
 * null.
 *
 * # Safety
 * `weights` must point to `n * n` doubles, `colors` (if not null) to `n`
 * values, `out` to writable storage.
 */
enum SmStatus sm_instance_from_matrix(size_t n,
                                      const double *weights,
                                      const uint32_t *colors,
                                      struct SmInstance **out_instance);

/**
 * Instance from `n` points in `[0, side)^dimension` with colours, under a
 * colour rule and metric. Hierarchical metrics need `dimension == 1`.
 *
 * # Safety
 * `coords` must hold `n * dimension` doubles and `colors` `n` values.
 */
enum SmStatus sm_instance_from_points(size_t dimension,
                                      double side,
                                      size_t n,
                                      const double *coords,
                                      const uint32_t *colors,
                                      enum SmRule rule,
                                      enum SmMetric metric,
                                      struct SmInstance **out_instance);

/**
 * # Safety
 * `instance` must come from an `sm_instance_*` constructor (or be null).
 */
void sm_instance_free(struct SmInstance *instance);

/**
 * # Safety
 * `instance` must be a live handle.
 */
enum SmStatus sm_instance_len(const struct SmInstance *instance, size_t *out_len);

/**
 * The unique stable matching of the instance.
 *
 * # Safety
 * `instance` must be a live handle.
 */
enum SmStatus sm_stable_match(const struct SmInstance *instance, struct SmMatching **out_matching);

/**
 * # Safety
 * `matching` must come from [`sm_stable_match`] (or be null).
 */
void sm_matching_free(struct SmMatching *matching);

/**
 * Partner of `vertex`, or -1 if unmatched.
 *
 * # Safety
 * `matching` must be a live handle.
 */
enum SmStatus sm_matching_partner(const struct SmMatching *matching,
                                  size_t vertex,
                                  int64_t *out_partner);

/**
 * Number of unmatched vertices and whether the matching passed the
 * stability check.
 *
 * # Safety
 * `matching` must be a live handle.
 */
enum SmStatus sm_matching_summary(const struct SmMatching *matching,
                                  size_t *out_unmatched,
                                  bool *out_stable);

/**
 * `eps * exp(1 - 1/eps)`, the limit of `b(t)` in the asymmetric model.
 *
 * # Safety
 * `out_value` must be writable.
 */
enum SmStatus sm_asymmetric_limit(double eps, double *out_value);

/**
 * Limit of `x_1(t)` in the symmetric model with `p = (p1, p2, ..., p2)`.
 *
 * # Safety
 * `out_value` must be writable.
 */
enum SmStatus sm_symmetric_limit(double p1, double p2, size_t k, double *out_value);

/**
 * Integrates until the limit of `component` is known to `accuracy`;
 * writes the estimate, the certified bound and the horizon used.
 *
 * # Safety
 * `params` must hold `n_params` doubles; outputs must be writable.
 */
enum SmStatus sm_ode_plateau(enum SmModel model,
                             const double *params,
                             size_t n_params,
                             size_t component,
                             double accuracy,
                             double tolerance,
                             double *out_estimate,
                             double *out_bound,
                             double *out_t_max);

/**
 * Monte Carlo estimate of `P(root has colour i, unmatched below t)` on the
 * PWIT, one entry per colour. `capacity` is the length of both output
 * arrays and must be at least the number of colours.
 *
 * # Safety
 * `params` must hold `n_params` doubles; `out_estimates` and `out_se` must
 * hold `capacity` doubles.
 */
enum SmStatus sm_pwit_estimate(enum SmModel model,
                               const double *params,
                               size_t n_params,
                               double t,
                               size_t replicates,
                               uint64_t seed,
                               size_t node_cap,
                               double *out_estimates,
                               double *out_se,
                               size_t capacity,
                               size_t *out_censored);

/**
 * Certified bounds for levels `0..=top_level` of the hierarchical
 * recursion started at depth `base_depth` below unit length. Writes
 * `top_level + 1` rows.
 *
 * # Safety
 * `out_levels` must hold `capacity` structs.
 */
enum SmStatus sm_hier_levels(double lambda,
                             double eps,
                             uint32_t base_depth,
                             int32_t top_level,
                             size_t n_max,
                             double slack_budget,
                             struct SmLevelStats *out_levels,
                             size_t capacity,
                             size_t *out_count);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STABLEMATCH_H */
