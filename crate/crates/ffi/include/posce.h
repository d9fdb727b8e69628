#ifndef POSCE_H
#define POSCE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes shared by every function.
 */
typedef enum PosceStatus {
  POSCE_STATUS_OK = 0,
  POSCE_STATUS_NULL_POINTER = 1,
  POSCE_STATUS_INVALID_UTF8 = 2,
  POSCE_STATUS_IO = 3,
  POSCE_STATUS_PARSE = 4,
  POSCE_STATUS_VALIDATION = 5,
  POSCE_STATUS_NUMERIC = 6,
  POSCE_STATUS_BUFFER_TOO_SMALL = 7,
  POSCE_STATUS_CALLBACK = 8,
  POSCE_STATUS_PANIC = 9,
} PosceStatus;

/**
 * Loaded classifier checkpoint.
 */
typedef struct PosceModel PosceModel;

/**
 * PosCE profile table.
 */
typedef struct PosceTable PosceTable;

/**
 * Payoff callback for the Shapley entry points. Receives the coalition as a
 * bitmask (bit i set means player i is present) and writes its payoff to
 * `out_payoff`. A non-zero return aborts the computation.
 */
typedef int32_t (*PosceGameCallback)(uint64_t coalition, void *user_data, double *out_payoff);

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *posce_version(void);

/**
 * Message for the last failed call on this thread, or "" after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *posce_last_error(void);

enum PosceStatus posce_model_load(const char *path, struct PosceModel **out);

void posce_model_free(struct PosceModel *model);

/**
 * Longest input the model accepts; also the width of its table rows.
 */
size_t posce_model_max_len(const struct PosceModel *model);

enum PosceStatus posce_table_load(const char *path, struct PosceTable **out);

/**
 * A table whose rows are all uniform.
 */
enum PosceStatus posce_table_unbuilt(size_t max_len, struct PosceTable **out);

void posce_table_free(struct PosceTable *table);

/**
 * Writes the profile for an aspect at position `t` in a sentence of `len`
 * tokens into `out[0..len]`.
 */
enum PosceStatus posce_table_lookup(const struct PosceTable *table,
                                    size_t t,
                                    size_t len,
                                    double *out,
                                    size_t out_len);

/**
 * Class probabilities (positive, neutral, negative) for the aspect spanning
 * tokens `[aspect_from, aspect_to)` of `text`. `table` may be null, in which
 * case a uniform profile is used.
 */
enum PosceStatus posce_predict(const struct PosceModel *model,
                               const struct PosceTable *table,
                               const char *text,
                               size_t aspect_from,
                               size_t aspect_to,
                               double *out_probs);

/**
 * Shapley contribution of every token toward `payoff_class` (0, 1, 2, or -1
 * for the predicted class). Values are written for the tokens kept after
 * truncation to the model's input length; their count goes to `out_count`.
 * Sentences with at most 12 context words are solved exactly, longer ones
 * with `samples` seeded permutations.
 */
enum PosceStatus posce_attribute(const struct PosceModel *model,
                                 const struct PosceTable *table,
                                 const char *text,
                                 size_t aspect_from,
                                 size_t aspect_to,
                                 int32_t payoff_class,
                                 size_t samples,
                                 uint64_t seed,
                                 double *out_values,
                                 size_t out_len,
                                 size_t *out_count);

/**
 * Exact Shapley values of a `players`-player game (at most 20 players).
 */
enum PosceStatus posce_shapley_exact(size_t players,
                                     PosceGameCallback callback,
                                     void *user_data,
                                     double *out_values,
                                     size_t out_len);

/**
 * Permutation-sampling estimate (at most 64 players). Deterministic for a
 * given seed.
 */
enum PosceStatus posce_shapley_permutation(size_t players,
                                           size_t samples,
                                           uint64_t seed,
                                           PosceGameCallback callback,
                                           void *user_data,
                                           double *out_values,
                                           size_t out_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* POSCE_H */
