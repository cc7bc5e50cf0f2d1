#ifndef HAHNLOC_H
#define HAHNLOC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stdint.h>

typedef enum HlStatus {
  HL_STATUS_OK = 0,
  /**
   * A report was produced and at least one check failed.
   */
  HL_STATUS_CHECK_FAILED = 1,
  HL_STATUS_INVALID_INPUT = 2,
  HL_STATUS_NULL_POINTER = 3,
  HL_STATUS_UTF8 = 4,
  HL_STATUS_INTERNAL = 5,
} HlStatus;

/**
 * A parsed and validated model document.
 */
typedef struct HlModel HlModel;

/**
 * The result of running a command on a model.
 */
typedef struct HlReport HlReport;

typedef struct HlOptions {
  uint64_t seed;
  uint32_t grid_denominator;
  uint32_t probe_depth;
  bool strict;
  /**
   * Adds run metadata, including a timestamp, to rendered reports.
   */
  bool meta;
} HlOptions;

/**
 * Default options: seed 0, grid denominator 64, probe depth 2.
 */
struct HlOptions hl_default_options(void);

/**
 * Parses a model document. On `InvalidInput` the error message lists the
 * positioned diagnostics, one per line.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum HlStatus hl_model_parse(const char *text, struct HlModel **out);

/**
 * # Safety
 * `model` must be null or come from [`hl_model_parse`], and not be used again.
 */
void hl_model_free(struct HlModel *model);

/**
 * Writes the canonical text of a model.
 *
 * # Safety
 * `model` must come from [`hl_model_parse`]; `out` must be a valid pointer.
 */
enum HlStatus hl_model_emit(const struct HlModel *model, char **out);

/**
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void hl_string_free(char *s);

/**
 * Runs a command (`"kraft"`, `"verify-localization"`, ...) on a model.
 * `options` may be null for the defaults. Returns `Ok` or `CheckFailed`
 * with a report, or an error status with `*out` set to null.
 *
 * # Safety
 * `model` must come from [`hl_model_parse`], `command` must be a
 * NUL-terminated string, `options` null or valid, and `out` valid.
 */
enum HlStatus hl_run(const struct HlModel *model,
                     const char *command,
                     const struct HlOptions *options,
                     struct HlReport **out);

/**
 * The command-line exit code for a report: 0 pass, 1 check failure.
 * Returns -1 for a null report.
 *
 * # Safety
 * `report` must be null or come from [`hl_run`].
 */
int32_t hl_report_exit_code(const struct HlReport *report);

/**
 * Renders a report in the machine format when `machine` is true and the
 * human format otherwise.
 *
 * # Safety
 * `report` must come from [`hl_run`]; `out` must be a valid pointer.
 */
enum HlStatus hl_report_text(const struct HlReport *report, bool machine, char **out);

/**
 * # Safety
 * `report` must be null or come from [`hl_run`], and not be used again.
 */
void hl_report_free(struct HlReport *report);

/**
 * The message for the last failed call on this thread, or null. The
 * pointer stays valid until the next call into the library on this thread.
 */
const char *hl_last_error_message(void);

#endif  /* HAHNLOC_H */
