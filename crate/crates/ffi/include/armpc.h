#ifndef ARMPC_H
#define ARMPC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Use the controller named in the config's `[run]` table.
 */
#define ARMPC_KIND_FROM_CONFIG 0

#define ARMPC_KIND_CE 1

#define ARMPC_KIND_BENCHMARK 2

#define ARMPC_KIND_NAIVE 3

typedef enum ArmpcStatus {
  ARMPC_STATUS_OK = 0,
  ARMPC_STATUS_NULL_POINTER = 1,
  ARMPC_STATUS_INVALID_UTF8 = 2,
  ARMPC_STATUS_CONFIG = 3,
  ARMPC_STATUS_DIMENSION = 4,
  ARMPC_STATUS_INVALID_ARGUMENT = 5,
  /**
   * The robust program has no solution at this state; nothing was written.
   */
  ARMPC_STATUS_INFEASIBLE = 6,
  ARMPC_STATUS_SOLVER = 7,
  ARMPC_STATUS_INTERNAL = 8,
  ARMPC_STATUS_PANIC = 9,
} ArmpcStatus;

/**
 * Opaque handle: an experiment (plant and sets) plus its live controller.
 */
typedef struct ArmpcController ArmpcController;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failing call on this thread (empty if none). The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *armpc_last_error_message(void);

/**
 * Build a controller from TOML or JSON config text. The warm-start data
 * and all randomness derive from `seed`.
 *
 * # Safety
 * `config` must be a NUL-terminated string and `out` a writable pointer.
 */
enum ArmpcStatus armpc_controller_new(const char *config,
                                      int32_t kind,
                                      uint64_t seed,
                                      struct ArmpcController **out);

/**
 * # Safety
 * `ctrl` must come from [`armpc_controller_new`] and not be used again.
 * Null is ignored.
 */
void armpc_controller_free(struct ArmpcController *ctrl);

/**
 * State and input dimensions.
 *
 * # Safety
 * `ctrl` must be a live handle; `n` and `m` writable.
 */
enum ArmpcStatus armpc_controller_dims(struct ArmpcController *ctrl, size_t *n, size_t *m);

/**
 * Applied input at state `x`. Returns `ARMPC_STATUS_INFEASIBLE` (and
 * leaves `u` untouched) when the robust program has no solution.
 *
 * # Safety
 * `x` must hold `n` doubles and `u` room for `m`.
 */
enum ArmpcStatus armpc_controller_act(struct ArmpcController *ctrl,
                                      const double *x,
                                      size_t n,
                                      double *u,
                                      size_t m);

/**
 * Feed one observed transition to the estimator.
 *
 * # Safety
 * `x` and `x_next` must hold `n` doubles, `u` must hold `m`.
 */
enum ArmpcStatus armpc_controller_observe(struct ArmpcController *ctrl,
                                          const double *x,
                                          const double *u,
                                          const double *x_next,
                                          size_t n,
                                          size_t m);

/**
 * Mark an episode boundary (refreshes sets under the `episode` schedule).
 *
 * # Safety
 * `ctrl` must be a live handle.
 */
enum ArmpcStatus armpc_controller_end_episode(struct ArmpcController *ctrl);

/**
 * Radii of the current compound disturbance box.
 *
 * # Safety
 * `out` must have room for `n` doubles.
 */
enum ArmpcStatus armpc_controller_dhat_radii(struct ArmpcController *ctrl, double *out, size_t n);

/**
 * Run every configured episode against the simulated plant, continuing
 * from the handle's current estimator. Writes the realized cost of the
 * last episode and whether all episodes stayed feasible.
 *
 * # Safety
 * `cost` and `feasible` must be writable.
 */
enum ArmpcStatus armpc_controller_simulate(struct ArmpcController *ctrl,
                                           uint64_t seed,
                                           double *cost,
                                           bool *feasible);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ARMPC_H */
