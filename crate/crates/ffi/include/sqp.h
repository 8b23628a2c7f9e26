#ifndef SQP_H
#define SQP_H

/* Generated by cbindgen from crates/ffi/src; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SqpObjective {
  SQP_OBJECTIVE_EFFECTIVENESS = 0,
  SQP_OBJECTIVE_QUERY_COUNT = 1,
} SqpObjective;

typedef enum SqpStatus {
  SQP_STATUS_OK = 0,
  /**
   * Unreadable or malformed input.
   */
  SQP_STATUS_INPUT = 2,
  /**
   * Valid input that violates an operation's preconditions.
   */
  SQP_STATUS_CONTRACT = 3,
  SQP_STATUS_NULL_POINTER = 4,
  SQP_STATUS_INVALID_UTF8 = 5,
  SQP_STATUS_OUT_OF_RANGE = 6,
  SQP_STATUS_PANIC = 7,
} SqpStatus;

/**
 * Opaque effectiveness matrix.
 */
typedef struct SqpMatrix SqpMatrix;

/**
 * Opaque matching model.
 */
typedef struct SqpModel SqpModel;

/**
 * Opaque selected pool.
 */
typedef struct SqpPool SqpPool;

typedef struct SqpStep {
  double risk;
  double reward;
  double gain;
  double envelope_mean_after;
} SqpStep;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. Free with
 * `sqp_string_free`.
 */
char *sqp_last_error(void);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library, freed once.
 */
void sqp_string_free(char *s);

char *sqp_version(void);

/**
 * Loads a matrix TSV file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` a writable handle slot.
 */
enum SqpStatus sqp_matrix_load(const char *path, struct SqpMatrix **out);

/**
 * Parses matrix TSV text held in memory.
 *
 * # Safety
 * As for `sqp_matrix_load`.
 */
enum SqpStatus sqp_matrix_parse(const char *tsv, struct SqpMatrix **out);

/**
 * # Safety
 * `m` must be NULL or a live handle from `sqp_matrix_load`/`sqp_matrix_parse`.
 */
void sqp_matrix_free(struct SqpMatrix *m);

/**
 * # Safety
 * `m` must be NULL or a live matrix handle.
 */
size_t sqp_matrix_num_configs(const struct SqpMatrix *m);

/**
 * # Safety
 * `m` must be NULL or a live matrix handle.
 */
size_t sqp_matrix_num_queries(const struct SqpMatrix *m);

/**
 * # Safety
 * `m` a live matrix handle, ids NUL-terminated, `out` writable.
 */
enum SqpStatus sqp_matrix_score(const struct SqpMatrix *m,
                                const char *config_id,
                                const char *query_id,
                                double *out);

/**
 * Greedy selection of `k` configurations over every query of the matrix.
 *
 * # Safety
 * `m` a live matrix handle, `baseline` NUL-terminated, `out` writable.
 */
enum SqpStatus sqp_select(const struct SqpMatrix *m,
                          const char *baseline,
                          enum SqpObjective objective,
                          double beta,
                          size_t k,
                          struct SqpPool **out);

/**
 * # Safety
 * `p` must be NULL or a live pool handle.
 */
void sqp_pool_free(struct SqpPool *p);

/**
 * # Safety
 * `p` must be NULL or a live pool handle.
 */
size_t sqp_pool_len(const struct SqpPool *p);

/**
 * Configuration id chosen at step `i`; free with `sqp_string_free`.
 *
 * # Safety
 * `p` a live pool handle, `out` writable.
 */
enum SqpStatus sqp_pool_config_id(const struct SqpPool *p, size_t i, char **out);

/**
 * # Safety
 * `p` a live pool handle, `out` writable.
 */
enum SqpStatus sqp_pool_step(const struct SqpPool *p, size_t i, struct SqpStep *out);

/**
 * Pool serialized as JSON; free with `sqp_string_free`.
 *
 * # Safety
 * `p` a live pool handle, `out` writable.
 */
enum SqpStatus sqp_pool_to_json(const struct SqpPool *p, char **out);

/**
 * Loads a model JSON file written by `sqp train`.
 *
 * # Safety
 * `path` NUL-terminated, `out` writable.
 */
enum SqpStatus sqp_model_load(const char *path, struct SqpModel **out);

/**
 * # Safety
 * `m` must be NULL or a live model handle.
 */
void sqp_model_free(struct SqpModel *m);

/**
 * Number of features the model expects, in `sqp_model_feature_name` order.
 *
 * # Safety
 * `m` must be NULL or a live model handle.
 */
size_t sqp_model_num_features(const struct SqpModel *m);

/**
 * # Safety
 * `m` a live model handle, `out` writable.
 */
enum SqpStatus sqp_model_feature_name(const struct SqpModel *m, size_t i, char **out);

/**
 * Assigns a configuration to one query given its aggregated feature values
 * in schema order. `config_out` is freed with `sqp_string_free`;
 * `similarity_out` may be NULL.
 *
 * # Safety
 * `m` a live model handle, `values` readable for `n` doubles, outputs writable.
 */
enum SqpStatus sqp_model_match(const struct SqpModel *m,
                               const char *query_id,
                               const double *values,
                               size_t n,
                               char **config_out,
                               double *similarity_out);

/**
 * Two-tailed paired t-test on `a - b`.
 *
 * # Safety
 * `a` and `b` readable for `n` doubles; `t_out`, `p_out` writable.
 */
enum SqpStatus sqp_paired_t_test(const double *a,
                                 const double *b,
                                 size_t n,
                                 double *t_out,
                                 double *p_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SQP_H */
