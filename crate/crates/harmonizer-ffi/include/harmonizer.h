/* C interface for the harmonizer data-harmonization engine. */

#ifndef HARMONIZER_H
#define HARMONIZER_H

/* This file is generated by cbindgen from harmonizer-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by fallible calls.
 */
typedef enum {
  HMZ_STATUS_OK = 0,
  /**
   * A required pointer argument was NULL.
   */
  HMZ_STATUS_NULL_ARGUMENT = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  HMZ_STATUS_INVALID_UTF8 = 2,
  /**
   * A document could not be parsed.
   */
  HMZ_STATUS_PARSE = 3,
  /**
   * A document parsed but violates its schema or contract.
   */
  HMZ_STATUS_INVALID = 4,
  /**
   * Reading or writing backing storage failed.
   */
  HMZ_STATUS_STORAGE = 5,
  /**
   * The requested item does not exist.
   */
  HMZ_STATUS_NOT_FOUND = 6,
  /**
   * A job was mis-configured or data failed to transform.
   */
  HMZ_STATUS_JOB = 7,
  /**
   * An internal panic was caught at the boundary.
   */
  HMZ_STATUS_PANIC = 8,
} HmzStatus;

typedef struct HmzDataFile HmzDataFile;

typedef struct HmzDictionary HmzDictionary;

typedef struct HmzRule HmzRule;

typedef struct HmzStore HmzStore;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the calling thread's most recent failure, or NULL.
 * The pointer stays valid until the next failing call on this thread.
 */
const char *hmz_last_error_message(void);

/**
 * Engine version as a static string; do not free.
 */
const char *hmz_version(void);

/**
 * Release a string returned by this library.
 *
 * # Safety
 * `s` must be a pointer previously returned by a `hmz_` function that
 * transfers string ownership, and must not be used afterwards.
 */
void hmz_string_free(char *s);

/**
 * Parse a dictionary JSON document. Returns NULL on failure.
 *
 * # Safety
 * `json` must be a valid NUL-terminated string.
 */
HmzDictionary *hmz_dictionary_parse(const char *json);

/**
 * Canonical JSON text of a dictionary.
 *
 * # Safety
 * `dictionary` must be a live handle from `hmz_dictionary_parse`.
 */
char *hmz_dictionary_to_json(const HmzDictionary *dictionary);

/**
 * # Safety
 * `dictionary` must be a live handle; it is invalid afterwards.
 */
void hmz_dictionary_free(HmzDictionary *dictionary);

/**
 * Parse a single-rule JSON document. Returns NULL on failure.
 *
 * # Safety
 * `json` must be a valid NUL-terminated string.
 */
HmzRule *hmz_rule_parse(const char *json);

/**
 * Canonical serialization of a rule.
 *
 * # Safety
 * `rule` must be a live handle from `hmz_rule_parse`.
 */
char *hmz_rule_serialize(const HmzRule *rule);

/**
 * Validate a rule against dictionaries. Writes a JSON report
 * `{"valid": bool, "violations": [string]}` to `out_report`.
 *
 * # Safety
 * `rule` and every entry of `dictionaries[0..n_dictionaries]` must be live
 * handles; `out_report` must be a valid pointer.
 */
HmzStatus hmz_rule_validate(const HmzRule *rule,
                            const HmzDictionary *const *dictionaries,
                            uintptr_t n_dictionaries,
                            char **out_report);

/**
 * Apply a rule to one tagged-JSON value; returns the result in the same
 * encoding, or NULL with a data error.
 *
 * # Safety
 * `rule` must be a live handle; `value_json` a valid NUL-terminated string.
 */
char *hmz_rule_apply_json(const HmzRule *rule, const char *value_json);

/**
 * # Safety
 * `rule` must be a live handle; it is invalid afterwards.
 */
void hmz_rule_free(HmzRule *rule);

/**
 * Parse CSV text against a dictionary into a data file handle.
 *
 * # Safety
 * `name` and `csv` must be valid NUL-terminated strings; `dictionary` a
 * live handle.
 */
HmzDataFile *hmz_data_file_read_csv(const char *name,
                                    const char *csv,
                                    const HmzDictionary *dictionary);

/**
 * Canonical CSV bytes of a data file.
 *
 * # Safety
 * `file` must be a live handle from `hmz_data_file_read_csv`.
 */
char *hmz_data_file_write_csv(const HmzDataFile *file);

/**
 * Number of records in a data file; 0 with an error set on a NULL handle.
 *
 * # Safety
 * `file` must be a live handle or NULL.
 */
uintptr_t hmz_data_file_row_count(const HmzDataFile *file);

/**
 * # Safety
 * `file` must be a live handle; it is invalid afterwards.
 */
void hmz_data_file_free(HmzDataFile *file);

/**
 * Open (creating if needed) a rule store rooted at a directory.
 *
 * # Safety
 * `path` must be a valid NUL-terminated string.
 */
HmzStore *hmz_store_open(const char *path);

/**
 * Persist a rule; `out_overwrote` (optional) reports whether an earlier
 * rule for the same source/target pair was replaced.
 *
 * # Safety
 * `store` must be a live mutable handle and `rule` a live handle;
 * `out_overwrote` may be NULL.
 */
HmzStatus hmz_store_put(HmzStore *store, const HmzRule *rule, bool *out_overwrote);

/**
 * Fetch the stored rule for a (source, target) element pair; NULL with
 * `NotFound` when absent.
 *
 * # Safety
 * `store` must be a live handle; the four name arguments valid strings.
 */
HmzRule *hmz_store_get(const HmzStore *store,
                       const char *source_dictionary,
                       const char *source_element,
                       const char *target_dictionary,
                       const char *target_element);

/**
 * # Safety
 * `store` must be a live handle; it is invalid afterwards.
 */
void hmz_store_free(HmzStore *store);

/**
 * Run a harmonization job described by a JSON request:
 *
 * ```json
 * {
 *   "dictionaries": [<dictionary documents>],
 *   "target": "<target dictionary name>",
 *   "error_policy": "fail-fast" | "collect",
 *   "inputs": [
 *     {"name": "...", "csv": "...", "rules": [<rule documents>]}
 *   ]
 * }
 * ```
 *
 * On success returns `{"output_csv": ..., "log_ndjson": ..., "reports":
 * [...]}`; the CSV is in canonical form so replaying the log reproduces
 * it byte for byte.
 *
 * # Safety
 * `request_json` must be a valid NUL-terminated string.
 */
char *hmz_run_job_json(const char *request_json);

/**
 * Replay a log against original data files:
 *
 * ```json
 * {
 *   "dictionaries": [<dictionary documents>],
 *   "target": "<target dictionary name>",
 *   "log_ndjson": "...",
 *   "originals": [{"name": "...", "csv": "..."}]
 * }
 * ```
 *
 * Returns `{"output_csv": ...}`, byte-identical to the original job's
 * output when given the same originals in the same order.
 *
 * # Safety
 * `request_json` must be a valid NUL-terminated string.
 */
char *hmz_replay_json(const char *request_json);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* HARMONIZER_H */
