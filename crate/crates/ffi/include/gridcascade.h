#ifndef GRIDCASCADE_H
#define GRIDCASCADE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum GcStatus {
  GC_STATUS_OK = 0,
  GC_STATUS_NULL_POINTER = 1,
  GC_STATUS_INVALID_ARGUMENT = 2,
  GC_STATUS_IO = 3,
  GC_STATUS_PARSE = 4,
  GC_STATUS_VALIDATION = 5,
  GC_STATUS_ISLANDED = 6,
  GC_STATUS_INFEASIBLE = 7,
  GC_STATUS_SOLVER = 8,
  GC_STATUS_CONFIG = 9,
  GC_STATUS_PANIC = 10,
  GC_STATUS_OTHER = 11,
} GcStatus;

/**
 * A network case.
 */
typedef struct GcCase GcCase;

/**
 * A generalized shift distribution factor matrix (lines × buses).
 */
typedef struct GcGsdf GcGsdf;

/**
 * The result of a study run.
 */
typedef struct GcStudy GcStudy;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. The pointer is
 * valid until the next gridcascade call on the same thread.
 */
const char *gc_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *gc_version(void);

/**
 * Load a built-in case (`rts79`, `rts79_wind`, `five_bus`).
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a valid pointer.
 */
enum GcStatus gc_case_builtin(const char *name, struct GcCase **out);

/**
 * Load a TOML case file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum GcStatus gc_case_load(const char *path, struct GcCase **out);

/**
 * # Safety
 * `case` must come from a `gc_case_*` constructor and not be used after.
 */
void gc_case_free(struct GcCase *case_);

/**
 * # Safety
 * `case` must be a valid handle or NULL (returns 0).
 */
size_t gc_case_n_buses(const struct GcCase *case_);

/**
 * # Safety
 * `case` must be a valid handle or NULL (returns 0).
 */
size_t gc_case_n_lines(const struct GcCase *case_);

/**
 * # Safety
 * `case` must be a valid handle or NULL (returns 0).
 */
size_t gc_case_n_generators(const struct GcCase *case_);

/**
 * Failure probability of line `line` (0-based) carrying `flow` MW.
 *
 * # Safety
 * `case` must be a valid handle and `out` a valid pointer.
 */
enum GcStatus gc_line_failure_probability(const struct GcCase *case_,
                                          size_t line,
                                          double flow,
                                          double *out);

/**
 * Build the GSDF for a line state (`n_lines` bytes, nonzero = in service).
 *
 * # Safety
 * `line_state` must point to `n_lines` readable bytes; `out` must be valid.
 */
enum GcStatus gc_gsdf_build(const struct GcCase *case_,
                            const uint8_t *line_state,
                            size_t n_lines,
                            struct GcGsdf **out);

/**
 * Remove `n_removed` lines (0-based indices) from `parent` by a low-rank
 * update. Returns `GC_STATUS_ISLANDED` when the removal splits the network.
 *
 * # Safety
 * `removed` must point to `n_removed` indices; handles and `out` must be valid.
 */
enum GcStatus gc_gsdf_remove_lines(const struct GcCase *case_,
                                   const struct GcGsdf *parent,
                                   const size_t *removed,
                                   size_t n_removed,
                                   struct GcGsdf **out);

/**
 * Entry for `line` and `bus` (both 0-based).
 *
 * # Safety
 * `gsdf` must be a valid handle and `out` a valid pointer.
 */
enum GcStatus gc_gsdf_get(const struct GcGsdf *gsdf, size_t line, size_t bus, double *out);

/**
 * Copy the matrix, row-major (lines × buses), into `buf` of `len` doubles.
 *
 * # Safety
 * `buf` must point to `len` writable doubles.
 */
enum GcStatus gc_gsdf_copy(const struct GcGsdf *gsdf, double *buf, size_t len);

/**
 * Line flows for bus injections `injections` (`n_buses` values, MW).
 *
 * # Safety
 * `injections` must hold `n_buses` values and `flows` room for `n_lines`.
 */
enum GcStatus gc_gsdf_flows(const struct GcGsdf *gsdf,
                            const double *injections,
                            size_t n_buses,
                            double *flows,
                            size_t n_lines);

/**
 * # Safety
 * `gsdf` must be a valid handle or NULL (returns 0).
 */
size_t gc_gsdf_n_lines(const struct GcGsdf *gsdf);

/**
 * # Safety
 * `gsdf` must be a valid handle or NULL (returns 0).
 */
size_t gc_gsdf_n_buses(const struct GcGsdf *gsdf);

/**
 * # Safety
 * `gsdf` must come from a `gc_gsdf_*` constructor and not be used after.
 */
void gc_gsdf_free(struct GcGsdf *gsdf);

/**
 * Run a study described by TOML text (same keys as the CLI config file;
 * NULL or empty uses the defaults).
 *
 * # Safety
 * `config_toml` must be NULL or NUL-terminated; `out` must be valid.
 */
enum GcStatus gc_study_run(const char *config_toml, struct GcStudy **out);

/**
 * # Safety
 * `study` must be a valid handle or NULL (returns 0).
 */
size_t gc_study_n_hours(const struct GcStudy *study);

/**
 * # Safety
 * `study` must be a valid handle or NULL (returns 0).
 */
size_t gc_study_n_paths(const struct GcStudy *study);

/**
 * Largest shedding over the paths of hour `hour` (MW).
 *
 * # Safety
 * `study` must be a valid handle and `out` a valid pointer.
 */
enum GcStatus gc_study_max_shed(const struct GcStudy *study, size_t hour, double *out);

/**
 * Write the report files into directory `dir`.
 *
 * # Safety
 * `study` must be a valid handle and `dir` NUL-terminated.
 */
enum GcStatus gc_study_write(const struct GcStudy *study, const char *dir);

/**
 * # Safety
 * `study` must come from [`gc_study_run`] and not be used after.
 */
void gc_study_free(struct GcStudy *study);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GRIDCASCADE_H */
