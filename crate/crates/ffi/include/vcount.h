#ifndef VCOUNT_H
#define VCOUNT_H

/* Generated by cbindgen; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every entry point.
 */
typedef enum VcountStatus {
  VCOUNT_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  VCOUNT_STATUS_NULL_ARGUMENT = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  VCOUNT_STATUS_INVALID_UTF8 = 2,
  /**
   * Model, property or configuration rejected; see the error message.
   */
  VCOUNT_STATUS_INVALID_INPUT = 3,
  /**
   * The operation refused to start within the given budget.
   */
  VCOUNT_STATUS_BUDGET_REFUSED = 4,
  /**
   * The search hit its time or node limit before finishing.
   */
  VCOUNT_STATUS_TIMEOUT = 5,
  /**
   * A panic was caught at the FFI boundary.
   */
  VCOUNT_STATUS_PANIC = 6,
} VcountStatus;

/**
 * Opaque verification instance: network, discretized domain and
 * postcondition.
 */
typedef struct VcountInstance VcountInstance;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static string; do not free.
 */
const char *vcount_version(void);

/**
 * Message for the most recent error on this thread; valid until the next
 * failing call on the same thread. Do not free.
 */
const char *vcount_last_error_message(void);

/**
 * Release a string returned through a `char **` out-parameter.
 *
 * # Safety
 * `ptr` must be null or a pointer previously written by this library and
 * not yet freed.
 */
void vcount_string_free(char *ptr);

/**
 * Build an instance from model JSON, property JSON and a grid pitch.
 * On success writes a handle to `out`; release with
 * [`vcount_instance_free`].
 *
 * # Safety
 * `model_json` and `property_json` must be null or valid NUL-terminated
 * strings; `out` must be null or a valid pointer to write to.
 */
enum VcountStatus vcount_instance_new(const char *model_json,
                                      const char *property_json,
                                      double epsilon,
                                      struct VcountInstance **out);

/**
 * Release an instance handle. Null is a no-op.
 *
 * # Safety
 * `inst` must be null or a handle from [`vcount_instance_new`] that has
 * not been freed.
 */
void vcount_instance_free(struct VcountInstance *inst);

/**
 * Decide satisfiability of the postcondition over the grid. Writes a
 * verdict JSON `{"kind": "SAT"|"UNSAT"|"TIMEOUT", ...}`; a timeout is
 * reported both in the JSON and as the return status.
 *
 * # Safety
 * `inst` must be a live handle; `out_json` must be a valid pointer to
 * write to.
 */
enum VcountStatus vcount_verify(const struct VcountInstance *inst,
                                uint64_t time_limit_ms,
                                char **out_json);

/**
 * Exact violation count by bisection. `time_limit_ms` of 0 means
 * unlimited; `leaf_threshold` of 0 selects the default.
 *
 * # Safety
 * `inst` must be a live handle; `out_json` must be a valid pointer to
 * write to.
 */
enum VcountStatus vcount_count_exact(const struct VcountInstance *inst,
                                     uint64_t time_limit_ms,
                                     uint64_t leaf_threshold,
                                     char **out_json);

/**
 * Exact violation count by full enumeration; `cap` of 0 selects the
 * default refusal threshold.
 *
 * # Safety
 * `inst` must be a live handle; `out_json` must be a valid pointer to
 * write to.
 */
enum VcountStatus vcount_count_brute(const struct VcountInstance *inst,
                                     uint64_t cap,
                                     char **out_json);

/**
 * Randomized bound on the violation rate. `config_json` accepts
 * `{"beta": f, "t": n, "m": n, "seed": n}` plus optional
 * `"prelim_splits"` (int), `"exact_time_limit_ms"`, `"sample_budget"`,
 * `"leaf_threshold"`, `"split_fraction"` and `"upper"` (bool, also
 * computes the upper bound).
 *
 * # Safety
 * `inst` must be a live handle; `config_json` must be null or a valid
 * NUL-terminated string; `out_json` must be a valid pointer to write to.
 */
enum VcountStatus vcount_count_approx(const struct VcountInstance *inst,
                                      const char *config_json,
                                      char **out_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VCOUNT_H */
