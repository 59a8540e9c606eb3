#ifndef LORHOL_H
#define LORHOL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum LhStatus {
  LH_STATUS_OK = 0,
  LH_STATUS_NULL_POINTER = 1,
  LH_STATUS_INVALID_UTF8 = 2,
  /**
   * Parse, configuration or invalid-input error.
   */
  LH_STATUS_CONFIG = 3,
  /**
   * A mathematical validation failed (signature, Walker structure, ...).
   */
  LH_STATUS_VALIDATION = 4,
  /**
   * Step underflow, singular metric or another numerical failure.
   */
  LH_STATUS_NUMERICAL = 5,
  /**
   * Output buffer shorter than required; nothing was written.
   */
  LH_STATUS_BUFFER_TOO_SMALL = 6,
  /**
   * Point has the wrong number of coordinates.
   */
  LH_STATUS_DIMENSION_MISMATCH = 7,
  LH_STATUS_PANIC = 8,
} LhStatus;

/**
 * Opaque chart handle.
 */
typedef struct LhChart LhChart;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *lh_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *lh_version(void);

/**
 * Frees a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void lh_string_free(char *s);

/**
 * Builds one of the named demo charts (`flat`, `toric-ppwave`, ...).
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a valid pointer.
 */
enum LhStatus lh_chart_from_demo(const char *name, struct LhChart **out);

/**
 * Builds a chart from a TOML document in the CLI config format.
 *
 * # Safety
 * `toml` must be a NUL-terminated string and `out` a valid pointer.
 */
enum LhStatus lh_chart_from_toml(const char *toml, struct LhChart **out);

/**
 * Releases a chart. NULL is ignored.
 *
 * # Safety
 * `chart` must come from this library and not have been freed.
 */
void lh_chart_free(struct LhChart *chart);

/**
 * Manifold dimension `n + 2`, or 0 for NULL.
 *
 * # Safety
 * `chart` must be NULL or a live handle.
 */
size_t lh_chart_dim(const struct LhChart *chart);

/**
 * Writes the chart box: `lo` and `hi`, `dim` values each.
 *
 * # Safety
 * `chart` must be a live handle and the buffers must hold `len` values.
 */
enum LhStatus lh_chart_domain(const struct LhChart *chart, double *lo, double *hi, size_t len);

/**
 * `g_ij` at `point`, row-major, `dim²` values.
 *
 * # Safety
 * `point` must hold `point_len` values and `out` `out_len` values.
 */
enum LhStatus lh_metric(const struct LhChart *chart,
                        const double *point,
                        size_t point_len,
                        double *out,
                        size_t out_len);

/**
 * `Γ^k_ij` at `point`, laid out `[k][i][j]`, `dim³` values.
 *
 * # Safety
 * `point` must hold `point_len` values and `out` `out_len` values.
 */
enum LhStatus lh_christoffel(const struct LhChart *chart,
                             const double *point,
                             size_t point_len,
                             double *out,
                             size_t out_len);

/**
 * `R^l_ijk` at `point`, laid out `[l][i][j][k]`, `dim⁴` values.
 *
 * # Safety
 * `point` must hold `point_len` values and `out` `out_len` values.
 */
enum LhStatus lh_riemann(const struct LhChart *chart,
                         const double *point,
                         size_t point_len,
                         double *out,
                         size_t out_len);

/**
 * Counts of negative and positive eigenvalues of `g` at `point`.
 *
 * # Safety
 * `point` must hold `point_len` values; `neg` and `pos` must be valid.
 */
enum LhStatus lh_signature(const struct LhChart *chart,
                           const double *point,
                           size_t point_len,
                           size_t *neg,
                           size_t *pos);

/**
 * Holonomy report of the chart as JSON, same document as
 * `lorhol holonomy --format json`. Free the result with `lh_string_free`.
 *
 * # Safety
 * `chart` must be a live handle and `out` a valid pointer.
 */
enum LhStatus lh_holonomy_json(const struct LhChart *chart, uint64_t seed, char **out);

/**
 * Runs a CLI command (`check`, `holonomy`, `geodesic`, `structure`,
 * `complete`) on the chart's configuration and returns the JSON report.
 * Non-zero report codes map to `LH_STATUS_VALIDATION` or
 * `LH_STATUS_NUMERICAL`, but the report is still written to `out`.
 *
 * # Safety
 * `chart` must be a live handle, `command` a NUL-terminated string and
 * `out` a valid pointer.
 */
enum LhStatus lh_run_json(const struct LhChart *chart,
                          const char *command,
                          uint64_t seed,
                          char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LORHOL_H */
