#ifndef QOPTIC_H
#define QOPTIC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum QopticStatus {
  QOPTIC_STATUS_OK = 0,
  QOPTIC_STATUS_NULL_POINTER = 1,
  QOPTIC_STATUS_INVALID_UTF8 = 2,
  QOPTIC_STATUS_SETUP_FILE = 3,
  QOPTIC_STATUS_VALIDATION = 4,
  QOPTIC_STATUS_DEGENERATE = 5,
  QOPTIC_STATUS_OUT_OF_RANGE = 6,
  QOPTIC_STATUS_NO_OBJECTIVE = 7,
  QOPTIC_STATUS_BUFFER_TOO_SMALL = 8,
  QOPTIC_STATUS_IO = 9,
  QOPTIC_STATUS_INTERNAL = 10,
} QopticStatus;

typedef enum QopticBackend {
  QOPTIC_BACKEND_QUBIT = 0,
  QOPTIC_BACKEND_ORACLE = 1,
} QopticBackend;

/**
 * A decoded output distribution, sorted by descending probability.
 */
typedef struct QopticDistribution QopticDistribution;

/**
 * A parsed setup and, when it has one, its compiled objective.
 */
typedef struct QopticSetup QopticSetup;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parse a setup from TOML text.
 *
 * # Safety
 * `toml` must be a NUL-terminated string; `out` must be writable.
 */
enum QopticStatus qoptic_setup_from_toml(const char *toml, struct QopticSetup **out);

/**
 * Load a setup from a file path.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum QopticStatus qoptic_setup_load(const char *path, struct QopticSetup **out);

/**
 * # Safety
 * `setup` must come from this library and not be freed twice. NULL is ignored.
 */
void qoptic_setup_free(struct QopticSetup *setup);

/**
 * Number of declared parameters, 0 for a NULL handle.
 *
 * # Safety
 * `setup` must be NULL or a live handle.
 */
size_t qoptic_setup_param_count(const struct QopticSetup *setup);

/**
 * Name of parameter `index`, in declaration order.
 *
 * # Safety
 * `setup` must be a live handle; `buf` must hold `len` bytes.
 */
enum QopticStatus qoptic_setup_param_name(const struct QopticSetup *setup,
                                          size_t index,
                                          char *buf,
                                          size_t len,
                                          size_t *needed);

/**
 * Declared initial values.
 *
 * # Safety
 * `out` must hold `len` doubles, `len` equal to the parameter count.
 */
enum QopticStatus qoptic_setup_param_values(const struct QopticSetup *setup,
                                            double *out,
                                            size_t len);

/**
 * Objective value at `x` (declared values when `x` is NULL and `len` is 0).
 *
 * # Safety
 * `x` must hold `len` doubles; `value` must be writable.
 */
enum QopticStatus qoptic_evaluate(const struct QopticSetup *setup,
                                  const double *x,
                                  size_t len,
                                  double *value);

/**
 * Objective value and gradient; `grad` receives one entry per parameter.
 *
 * # Safety
 * `x` and `grad` must hold `len` doubles (`x` may be NULL with `len` 0,
 * then `grad` must hold the parameter count); `value` may be NULL.
 */
enum QopticStatus qoptic_gradient(const struct QopticSetup *setup,
                                  const double *x,
                                  size_t len,
                                  double *value,
                                  double *grad);

/**
 * Output distribution over Fock states. `steps` of 0 uses the file's value.
 *
 * # Safety
 * `x` must hold `len` doubles or be NULL with `len` 0; `out` must be writable.
 */
enum QopticStatus qoptic_distribution_compute(const struct QopticSetup *setup,
                                              const double *x,
                                              size_t len,
                                              enum QopticBackend backend,
                                              size_t steps,
                                              struct QopticDistribution **out);

/**
 * # Safety
 * `dist` must be NULL or a live handle.
 */
size_t qoptic_distribution_len(const struct QopticDistribution *dist);

/**
 * Probability mass on photon-number-correct states; NaN when undefined.
 *
 * # Safety
 * `dist` must be NULL or a live handle.
 */
double qoptic_distribution_valid_fraction(const struct QopticDistribution *dist);

/**
 * # Safety
 * `dist` must be a live handle; `out` must be writable.
 */
enum QopticStatus qoptic_distribution_probability(const struct QopticDistribution *dist,
                                                  size_t index,
                                                  double *out);

/**
 * Fock label of row `index`, e.g. `1@(0,a) 2@(0,b)`.
 *
 * # Safety
 * `dist` must be a live handle; `buf` must hold `len` bytes.
 */
enum QopticStatus qoptic_distribution_label(const struct QopticDistribution *dist,
                                            size_t index,
                                            char *buf,
                                            size_t len,
                                            size_t *needed);

/**
 * # Safety
 * `dist` must come from this library and not be freed twice. NULL is ignored.
 */
void qoptic_distribution_free(struct QopticDistribution *dist);

/**
 * Message of the last failed call on this thread, empty after a success.
 * Valid until the next call into the library on this thread.
 */
const char *qoptic_last_error_message(void);

const char *qoptic_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QOPTIC_H */
