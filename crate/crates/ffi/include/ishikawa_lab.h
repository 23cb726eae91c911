#ifndef ISHIKAWA_LAB_H
#define ISHIKAWA_LAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  IL_STATUS_OK = 0,
  IL_STATUS_NULL_POINTER = 1,
  IL_STATUS_INVALID_UTF8 = 2,
  IL_STATUS_CONFIG_ERROR = 3,
  IL_STATUS_VALIDATION_FAILED = 4,
  IL_STATUS_DIVERGED = 5,
  IL_STATUS_ANCHOR_NON_CONVERGENCE = 6,
  IL_STATUS_IO = 7,
  IL_STATUS_PANIC = 8,
} IlStatus;

/**
 * Anchor path estimate of the limit point.
 */
typedef struct IlAnchor IlAnchor;

/**
 * Parsed and built experiment config.
 */
typedef struct IlConfig IlConfig;

/**
 * Recorded run.
 */
typedef struct IlTrajectory IlTrajectory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or NULL.
 *
 * The pointer stays valid until the next `il_*` call on the same thread.
 */
const char *il_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *il_version(void);

/**
 * Releases a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and must not be freed twice.
 */
void il_string_free(char *s);

/**
 * Parses a JSON experiment config.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
IlStatus il_config_from_json(const char *json, IlConfig **out);

/**
 * Loads a config file path, or a bundled preset given as `preset:<name>`.
 *
 * # Safety
 * `source` must be a NUL-terminated string; `out` must be writable.
 */
IlStatus il_config_load(const char *source, IlConfig **out);

/**
 * Serializes the config back to JSON.
 *
 * # Safety
 * `cfg` must be a live handle; `out` must be writable.
 */
IlStatus il_config_to_json(const IlConfig *cfg, char **out);

/**
 * Dimension of the config's space.
 *
 * # Safety
 * `cfg` must be a live handle or NULL (which yields 0).
 */
size_t il_config_dim(const IlConfig *cfg);

/**
 * # Safety
 * `cfg` must come from this library and must not be freed twice. NULL is ignored.
 */
void il_config_free(IlConfig *cfg);

/**
 * Checks the hypotheses of a theorem label ("2.1", "3.1", "3.2", "3.3").
 *
 * Writes whether every item passed to `passed` and, when `report_json` is not
 * NULL, the item list as JSON. Returns `ValidationFailed` when an item fails
 * and `ConfigError` when the label does not apply to the config's scheme.
 *
 * # Safety
 * `cfg` must be a live handle, `theorem` a NUL-terminated string, `passed`
 * writable; `report_json` may be NULL.
 */
IlStatus il_validate(const IlConfig *cfg, const char *theorem, bool *passed, char **report_json);

/**
 * Runs the iteration. `reference` may be NULL; otherwise it holds `ref_len`
 * coordinates used for the distance column.
 *
 * A run stopped by the divergence guard still yields a trajectory in `out`
 * and returns `Diverged`.
 *
 * # Safety
 * `cfg` must be a live handle, `reference` valid for `ref_len` reads, `out` writable.
 */
IlStatus il_run(const IlConfig *cfg, const double *reference, size_t ref_len, IlTrajectory **out);

/**
 * Number of recorded rows, `x_0` included.
 *
 * # Safety
 * `traj` must be a live handle or NULL (which yields 0).
 */
size_t il_trajectory_len(const IlTrajectory *traj);

/**
 * Stop reason: "max_iters", "residual_below_tol" or "diverged". Static storage.
 *
 * # Safety
 * `traj` must be a live handle or NULL (which yields NULL).
 */
const char *il_trajectory_stop_reason(const IlTrajectory *traj);

/**
 * Copies `x_index` into `out`, which must hold `len` = dimension entries, and
 * writes its residual `‖x − Tx‖` to `residual` when not NULL.
 *
 * # Safety
 * `traj` must be a live handle and `out` valid for `len` writes.
 */
IlStatus il_trajectory_iterate(const IlTrajectory *traj,
                               size_t index,
                               double *out,
                               size_t len,
                               double *residual);

/**
 * Renders the trajectory as CSV.
 *
 * # Safety
 * `traj` must be a live handle; `out` must be writable.
 */
IlStatus il_trajectory_csv(const IlTrajectory *traj, char **out);

/**
 * # Safety
 * `traj` must come from this library and must not be freed twice. NULL is ignored.
 */
void il_trajectory_free(IlTrajectory *traj);

/**
 * Estimates the limit point along the anchor path `t ↓ 0`.
 *
 * A path that stops before reaching its tolerance still yields a handle in
 * `out` and returns `AnchorNonConvergence`; an inner solve that fails yields
 * no handle.
 *
 * # Safety
 * `cfg` must be a live handle; `out` must be writable.
 */
IlStatus il_anchor(const IlConfig *cfg, IlAnchor **out);

/**
 * Copies the estimate into `out`, which must hold `len` = dimension entries.
 *
 * # Safety
 * `anchor` must be a live handle and `out` valid for `len` writes.
 */
IlStatus il_anchor_q_hat(const IlAnchor *anchor, double *out, size_t len);

/**
 * Whether the estimate converged and passed the variational check.
 *
 * # Safety
 * `anchor` must be a live handle or NULL (which yields false).
 */
bool il_anchor_accepted(const IlAnchor *anchor);

/**
 * Full anchor result as JSON.
 *
 * # Safety
 * `anchor` must be a live handle; `out` must be writable.
 */
IlStatus il_anchor_json(const IlAnchor *anchor, char **out);

/**
 * # Safety
 * `anchor` must come from this library and must not be freed twice. NULL is ignored.
 */
void il_anchor_free(IlAnchor *anchor);

/**
 * `‖x‖_p` of the `len` coordinates at `x`.
 *
 * # Safety
 * `x` must be valid for `len` reads; `out` must be writable.
 */
IlStatus il_norm(double p, const double *x, size_t len, double *out);

/**
 * Normalized duality map of `x` in `l_p`, written to `out` (`len` entries).
 *
 * # Safety
 * `x` must be valid for `len` reads and `out` for `len` writes.
 */
IlStatus il_duality_map(double p, const double *x, size_t len, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ISHIKAWA_LAB_H */
