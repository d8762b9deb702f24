#ifndef TEAMCREDIT_H
#define TEAMCREDIT_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum TcStatus {
  TC_STATUS_OK = 0,
  TC_STATUS_NULL_POINTER = 1,
  TC_STATUS_INVALID_ARGUMENT = 2,
  TC_STATUS_CONFIG = 3,
  TC_STATUS_IO = 4,
  TC_STATUS_NUMERIC = 5,
  TC_STATUS_OUT_OF_RANGE = 6,
  TC_STATUS_PANIC = 7,
} TcStatus;

/**
 * Parsed experiment config.
 */
typedef struct TcConfig TcConfig;

/**
 * Metric rows from a finished experiment.
 */
typedef struct TcMetrics TcMetrics;

/**
 * Verifier output.
 */
typedef struct TcVerifyReport TcVerifyReport;

/**
 * One metric row without its name.
 */
typedef struct TcMetricRow {
  size_t trial;
  size_t team_size;
  size_t checkpoint;
  double value;
} TcMetricRow;

/**
 * One verifier row without its check name.
 */
typedef struct TcCheckRow {
  size_t n;
  double expected;
  double observed;
  double tolerance;
  bool pass;
} TcCheckRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Last error message on this thread, or null if none. Valid until the
 * next failing call on the same thread.
 */
const char *tc_last_error_message(void);

void tc_clear_error(void);

/**
 * `1 - zeta^(n-1)`.
 *
 * # Safety
 * `out` must be a valid pointer to a double.
 */
enum TcStatus tc_theorem1_probability(double zeta, size_t n, double *out);

/**
 * Differential entropy in nats of a Gaussian with the given variance.
 *
 * # Safety
 * `out` must be a valid pointer to a double.
 */
enum TcStatus tc_gaussian_reward_entropy(double variance, double *out);

/**
 * Team-mean rewards for `population` agents in contiguous teams of
 * `team_size`.
 *
 * # Safety
 * `env_rewards` and `out` must each point to `population` doubles.
 */
enum TcStatus tc_team_reward(const double *env_rewards,
                             size_t population,
                             size_t team_size,
                             double *out);

/**
 * Parses config text into a new handle.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` a valid pointer.
 */
enum TcStatus tc_config_parse(const char *text, struct TcConfig **out);

/**
 * # Safety
 * `cfg` must come from [`tc_config_parse`] and not be used afterwards.
 */
void tc_config_free(struct TcConfig *cfg);

/**
 * Overrides the trial count.
 *
 * # Safety
 * `cfg` must be a live handle.
 */
enum TcStatus tc_config_set_trials(struct TcConfig *cfg, size_t trials);

/**
 * Runs every team size of the config.
 *
 * # Safety
 * `cfg` must be a live handle; `out` a valid pointer.
 */
enum TcStatus tc_run_experiment(const struct TcConfig *cfg, struct TcMetrics **out);

/**
 * Row count, or 0 for a null handle.
 *
 * # Safety
 * `m` must be null or a live handle.
 */
size_t tc_metrics_len(const struct TcMetrics *m);

/**
 * # Safety
 * `m` must be a live handle; `out` a valid pointer.
 */
enum TcStatus tc_metrics_row(const struct TcMetrics *m, size_t index, struct TcMetricRow *out);

/**
 * Metric name of a row, or null if out of range. Owned by the handle.
 *
 * # Safety
 * `m` must be null or a live handle.
 */
const char *tc_metrics_name(const struct TcMetrics *m, size_t index);

/**
 * Writes the rows as CSV with the standard header.
 *
 * # Safety
 * `m` must be a live handle; `path` a NUL-terminated string.
 */
enum TcStatus tc_metrics_write_csv(const struct TcMetrics *m, const char *path);

/**
 * # Safety
 * `m` must come from [`tc_run_experiment`] and not be used afterwards.
 */
void tc_metrics_free(struct TcMetrics *m);

/**
 * Runs a verifier target: `theorem1`, `lemma1`, `info-convergence`,
 * `joint-oracle` or `all`.
 *
 * # Safety
 * `target` must be a NUL-terminated string; `out` a valid pointer.
 */
enum TcStatus tc_verify(const char *target, uint64_t seed, struct TcVerifyReport **out);

/**
 * # Safety
 * `r` must be null or a live handle.
 */
size_t tc_verify_len(const struct TcVerifyReport *r);

/**
 * # Safety
 * `r` must be null or a live handle.
 */
bool tc_verify_all_passed(const struct TcVerifyReport *r);

/**
 * # Safety
 * `r` must be a live handle; `out` a valid pointer.
 */
enum TcStatus tc_verify_row(const struct TcVerifyReport *r, size_t index, struct TcCheckRow *out);

/**
 * Check name of a row, or null if out of range. Owned by the handle.
 *
 * # Safety
 * `r` must be null or a live handle.
 */
const char *tc_verify_name(const struct TcVerifyReport *r, size_t index);

/**
 * # Safety
 * `r` must come from [`tc_verify`] and not be used afterwards.
 */
void tc_verify_free(struct TcVerifyReport *r);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TEAMCREDIT_H */
