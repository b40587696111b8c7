#ifndef MEMWEAVE_H
#define MEMWEAVE_H

/* Generated from the memweave-ffi crate; regenerate via cargo build, do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum MwStatus {
  /**
   * Success; all requested outputs were written.
   */
  MwStatus_Ok = 0,
  /**
   * A pointer was null or a scalar argument out of its legal range.
   */
  MwStatus_InvalidArgument = 1,
  /**
   * Input text (JSON, mix, weights) did not parse.
   */
  MwStatus_Parse = 2,
  /**
   * Input parsed but violated a profile or weights invariant.
   */
  MwStatus_Validation = 3,
  /**
   * The requested mix falls outside the calibrated read-fraction range.
   */
  MwStatus_OutOfRange = 4,
  /**
   * The tier has no calibration points for the requested write kind.
   */
  MwStatus_MissingFamily = 5,
  /**
   * The offered demand would saturate a tier under these weights.
   */
  MwStatus_Infeasible = 6,
  /**
   * No weight assignment within the budget can carry the demand.
   */
  MwStatus_NoFeasibleWeights = 7,
  /**
   * The profile file could not be read.
   */
  MwStatus_Io = 8,
  /**
   * A panic was caught at the boundary; state is unspecified.
   */
  MwStatus_Internal = 9,
} MwStatus;

/**
 * Opaque calibrated profile set.
 */
typedef struct MwProfileSet MwProfileSet;

/**
 * Closed-loop simulation parameters.
 */
typedef struct MwSimConfig {
  /**
   * Per-tier interleave weights; length must equal the tier count.
   */
  const uint32_t *weights;
  size_t weights_len;
  /**
   * Access mix, e.g. "1r0w" or "2r1wnt".
   */
  const char *mix;
  uint32_t streams;
  uint32_t outstanding_per_stream;
  /**
   * Bytes per request, at most one 4096-byte page.
   */
  uint32_t transfer_bytes;
  /**
   * 0 = uniform random page choice, 1 = sequential per stream.
   */
  uint32_t pattern;
  uint64_t page_count;
  /**
   * Negative selects the default of a tenth of measured_requests.
   */
  int64_t warmup_requests;
  uint64_t measured_requests;
  uint64_t seed;
} MwSimConfig;

/**
 * Scalar results of one simulation run.
 */
typedef struct MwSimReport {
  double achieved_gbps;
  double mean_latency_ns;
  double p50_latency_ns;
  double p95_latency_ns;
  double p99_latency_ns;
  double total_time_ns;
  uint64_t seed;
} MwSimReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *mw_version(void);

/**
 * Message for the most recent failure on this thread. Valid until the
 * next failing call on the same thread; never null.
 */
const char *mw_last_error_message(void);

/**
 * Load a profile set from a JSON file.
 *
 * # Safety
 * `path` must be a valid NUL-terminated string and `out` a valid pointer;
 * on success `*out` must later be released with [`mw_profiles_free`].
 */
enum MwStatus mw_profiles_load(const char *path, struct MwProfileSet **out);

/**
 * Parse a profile set from JSON text.
 *
 * # Safety
 * `json` must be a valid NUL-terminated string and `out` a valid pointer;
 * on success `*out` must later be released with [`mw_profiles_free`].
 */
enum MwStatus mw_profiles_from_json(const char *json, struct MwProfileSet **out);

/**
 * The profile set bundled with the library.
 *
 * # Safety
 * `out` must be a valid pointer; on success `*out` must later be released
 * with [`mw_profiles_free`].
 */
enum MwStatus mw_profiles_bundled(struct MwProfileSet **out);

/**
 * Release a profile set. Null is a no-op.
 *
 * # Safety
 * `set` must be null or a pointer obtained from one of the `mw_profiles_*`
 * constructors that has not been freed; no borrowed tier-name pointer may
 * be used afterwards.
 */
void mw_profiles_free(struct MwProfileSet *set);

/**
 * Number of tiers, or 0 for a null handle.
 *
 * # Safety
 * `set` must be null or a live profile-set handle.
 */
uint32_t mw_profiles_tier_count(const struct MwProfileSet *set);

/**
 * Borrowed tier name, valid while the set lives; null if out of range.
 *
 * # Safety
 * `set` must be null or a live profile-set handle; the returned pointer
 * must not be used after the set is freed.
 */
const char *mw_profiles_tier_name(const struct MwProfileSet *set, uint32_t tier);

/**
 * Calibrated bandwidth of one tier at a mix, interpolating as needed.
 *
 * # Safety
 * `set` must be a live profile-set handle, `mix` a valid NUL-terminated
 * string, and `out_gbps` a valid pointer.
 */
enum MwStatus mw_bandwidth_at(const struct MwProfileSet *set,
                              uint32_t tier,
                              const char *mix,
                              double *out_gbps);

/**
 * Predict aggregate bandwidth for a weight vector. `out_shares` and
 * `out_utilization`, when non-null, must hold `weights_len` doubles.
 *
 * # Safety
 * `set` must be a live profile-set handle, `weights` must point to
 * `weights_len` values, `mix` must be a valid NUL-terminated string, and
 * every non-null out-pointer must satisfy the capacity stated above.
 */
enum MwStatus mw_predict(const struct MwProfileSet *set,
                         const uint32_t *weights,
                         size_t weights_len,
                         const char *mix,
                         double *out_aggregate_gbps,
                         uint32_t *out_bottleneck_tier,
                         double *out_shares,
                         double *out_utilization);

/**
 * Best weights for a mix under the weight-total budget. `out_weights`
 * must hold one u32 per tier.
 *
 * # Safety
 * `set` must be a live profile-set handle, `mix` a valid NUL-terminated
 * string, and `out_weights` must hold one `u32` per tier of the set.
 */
enum MwStatus mw_recommend(const struct MwProfileSet *set,
                           const char *mix,
                           uint32_t max_weight,
                           uint32_t *out_weights,
                           double *out_aggregate_gbps);

/**
 * Latency-optimal weights for an offered demand in GB/s. `out_weights`
 * must hold one u32 per tier.
 *
 * # Safety
 * `set` must be a live profile-set handle, `mix` a valid NUL-terminated
 * string, and `out_weights` must hold one `u32` per tier of the set.
 */
enum MwStatus mw_recommend_for_demand(const struct MwProfileSet *set,
                                      const char *mix,
                                      double demand_gbps,
                                      uint32_t max_weight,
                                      uint32_t *out_weights,
                                      double *out_latency_ns);

/**
 * Expected mean latency at an offered demand under given weights.
 *
 * # Safety
 * `set` must be a live profile-set handle, `weights` must point to
 * `weights_len` values, `mix` must be a valid NUL-terminated string, and
 * `out_latency_ns` must be a valid pointer.
 */
enum MwStatus mw_mixture_latency(const struct MwProfileSet *set,
                                 const uint32_t *weights,
                                 size_t weights_len,
                                 const char *mix,
                                 double demand_gbps,
                                 double *out_latency_ns);

/**
 * Run one closed-loop simulation. `out_report` is required; the per-tier
 * buffers, when non-null, must hold one element per tier.
 *
 * # Safety
 * `set` must be a live profile-set handle; `config` and `out_report` must
 * be valid pointers; the pointers inside `config` must satisfy the same
 * string and array rules as elsewhere; non-null per-tier buffers must hold
 * one element per tier of the set.
 */
enum MwStatus mw_simulate(const struct MwProfileSet *set,
                          const struct MwSimConfig *config,
                          struct MwSimReport *out_report,
                          uint64_t *out_tier_requests,
                          double *out_tier_utilization);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* MEMWEAVE_H */
