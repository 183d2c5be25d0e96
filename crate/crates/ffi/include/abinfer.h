#ifndef ABINFER_H
#define ABINFER_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum AbinferStatus {
  ABINFER_STATUS_OK = 0,
  ABINFER_STATUS_NULL_POINTER = 1,
  ABINFER_STATUS_INVALID_ARGUMENT = 2,
  ABINFER_STATUS_DIMENSION_MISMATCH = 3,
  ABINFER_STATUS_NUMERICAL = 4,
  ABINFER_STATUS_IO = 5,
  ABINFER_STATUS_PARSE = 6,
  ABINFER_STATUS_RUNTIME = 7,
  ABINFER_STATUS_PANIC = 8,
} AbinferStatus;

/**
 * A fitted Gaussian mixture.
 */
typedef struct AbinferMixture AbinferMixture;

/**
 * A registered simulator model.
 */
typedef struct AbinferModel AbinferModel;

/**
 * The outcome of an inference run.
 */
typedef struct AbinferResult AbinferResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * The message of the last failed call on this thread, or null.
 *
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *abinfer_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *abinfer_version(void);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must be null or a string obtained from this library, freed once.
 */
void abinfer_string_free(char *s);

/**
 * Fits a Gaussian mixture to `n` row-major points of dimension `d`,
 * choosing among 1 to `max_components` components by BIC.
 *
 * # Safety
 * `points` must hold `n * d` values and `out` must be writable.
 */
enum AbinferStatus abinfer_mixture_fit(const double *points,
                                       size_t n,
                                       size_t d,
                                       size_t max_components,
                                       uint64_t seed,
                                       struct AbinferMixture **out);

/**
 * Builds a mixture from its JSON form (`weights`, `means`, `covariances`).
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` must be writable.
 */
enum AbinferStatus abinfer_mixture_from_json(const char *json, struct AbinferMixture **out);

/**
 * Serializes a mixture to JSON; release the result with
 * [`abinfer_string_free`].
 *
 * # Safety
 * `mixture` must be a live handle and `out` must be writable.
 */
enum AbinferStatus abinfer_mixture_to_json(const struct AbinferMixture *mixture, char **out);

/**
 * Dimension of the mixture, or 0 for a null handle.
 *
 * # Safety
 * `mixture` must be null or a live handle.
 */
size_t abinfer_mixture_dim(const struct AbinferMixture *mixture);

/**
 * Number of components, or 0 for a null handle.
 *
 * # Safety
 * `mixture` must be null or a live handle.
 */
size_t abinfer_mixture_num_components(const struct AbinferMixture *mixture);

/**
 * Log density at a point of length `d`.
 *
 * # Safety
 * `point` must hold `d` values and `out` must be writable.
 */
enum AbinferStatus abinfer_mixture_log_density(const struct AbinferMixture *mixture,
                                               const double *point,
                                               size_t d,
                                               double *out);

/**
 * Draws `count` points into a row-major buffer of `out_len >= count * d`.
 *
 * # Safety
 * `out` must hold `out_len` values.
 */
enum AbinferStatus abinfer_mixture_sample(const struct AbinferMixture *mixture,
                                          size_t count,
                                          uint64_t seed,
                                          double *out,
                                          size_t out_len);

/**
 * Releases a mixture handle.
 *
 * # Safety
 * `mixture` must be null or a handle from this library, freed once.
 */
void abinfer_mixture_free(struct AbinferMixture *mixture);

/**
 * Trimmed MSW distance between two row-major point sets in `R^d`, using
 * `num_slices` random directions drawn from `seed`.
 *
 * # Safety
 * `a` must hold `na * d` values, `b` must hold `nb * d`, and `out` must be
 * writable.
 */
enum AbinferStatus abinfer_msw_distance(const double *a,
                                        size_t na,
                                        const double *b,
                                        size_t nb,
                                        size_t d,
                                        double p,
                                        double delta,
                                        double lambda,
                                        size_t num_slices,
                                        uint64_t seed,
                                        double *out);

/**
 * Exact empirical W1 between two equal-size row-major point sets.
 *
 * # Safety
 * `a` and `b` must each hold `n * d` values and `out` must be writable.
 */
enum AbinferStatus abinfer_exact_w1(const double *a,
                                    const double *b,
                                    size_t n,
                                    size_t d,
                                    double *out);

/**
 * Looks up a registered model by name.
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` must be writable.
 */
enum AbinferStatus abinfer_model_new(const char *name, struct AbinferModel **out);

/**
 * Parameter dimension, or 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t abinfer_model_theta_dim(const struct AbinferModel *model);

/**
 * Length of one simulated data vector, or 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t abinfer_model_data_dim(const struct AbinferModel *model);

/**
 * Writes the model's default observation into `out`, which must hold at
 * least the data dimension.
 *
 * # Safety
 * `out` must hold `out_len` values.
 */
enum AbinferStatus abinfer_model_observation(const struct AbinferModel *model,
                                             double *out,
                                             size_t out_len);

/**
 * Releases a model handle.
 *
 * # Safety
 * `model` must be null or a handle from this library, freed once.
 */
void abinfer_model_free(struct AbinferModel *model);

/**
 * Runs adaptive inference for `model` given the observation `x_star`.
 *
 * `config_json` holds an inference config with omitted keys defaulted;
 * pass null for all defaults.
 *
 * # Safety
 * `x_star` must hold `x_len` values, `config_json` must be null or a
 * NUL-terminated string, and `out` must be writable.
 */
enum AbinferStatus abinfer_run(const struct AbinferModel *model,
                               const double *x_star,
                               size_t x_len,
                               const char *config_json,
                               struct AbinferResult **out);

/**
 * Number of completed iterations, or 0 for a null handle.
 *
 * # Safety
 * `result` must be null or a live handle.
 */
size_t abinfer_result_iterations(const struct AbinferResult *result);

/**
 * Parameter dimension of the posterior, or 0 for a null handle.
 *
 * # Safety
 * `result` must be null or a live handle.
 */
size_t abinfer_result_theta_dim(const struct AbinferResult *result);

/**
 * Tolerance chosen at iteration `index` (0-based).
 *
 * # Safety
 * `result` must be a live handle and `out` must be writable.
 */
enum AbinferStatus abinfer_result_epsilon(const struct AbinferResult *result,
                                          size_t index,
                                          double *out);

/**
 * Per-iteration reports as a JSON array; release with
 * [`abinfer_string_free`].
 *
 * # Safety
 * `result` must be a live handle and `out` must be writable.
 */
enum AbinferStatus abinfer_result_reports_json(const struct AbinferResult *result, char **out);

/**
 * Draws `count` parameters from the fitted posterior, in the original
 * parameter space, into a row-major buffer of `out_len >= count * dim`.
 *
 * # Safety
 * `out` must hold `out_len` values.
 */
enum AbinferStatus abinfer_result_sample(const struct AbinferResult *result,
                                         size_t count,
                                         uint64_t seed,
                                         double *out,
                                         size_t out_len);

/**
 * Releases a result handle.
 *
 * # Safety
 * `result` must be null or a handle from this library, freed once.
 */
void abinfer_result_free(struct AbinferResult *result);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ABINFER_H */
