/* C interface to the kgattr embedding and attribute-ranking pipeline. */

#ifndef KGATTR_H
#define KGATTR_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every fallible call in this ABI.
typedef enum KgattrStatus {
  // Success.
  KGATTR_STATUS_OK = 0,
  // A required pointer argument was null.
  KGATTR_STATUS_NULL_ARGUMENT = 1,
  // A string argument was not valid UTF-8.
  KGATTR_STATUS_INVALID_STRING = 2,
  // An out-buffer had the wrong length.
  KGATTR_STATUS_BAD_LENGTH = 3,
  // The operation itself failed; see `kgattr_last_error_message`.
  KGATTR_STATUS_FAILURE = 4,
  // An internal invariant broke. The handle state is unspecified.
  KGATTR_STATUS_PANIC = 5,
} KgattrStatus;

// Opaque embedding model handle.
typedef struct KgattrModel KgattrModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the most recent failure on the calling thread, or null
// when no call has failed yet. The pointer stays valid until the next
// failing call on the same thread.
const char *kgattr_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *kgattr_version(void);

// Loads a vector file (the trainer's output, or any word2vec text
// file) into a new model handle. `ngram_min`/`ngram_max` give the
// character n-gram range for files that carry subword buckets; pass
// 3 and 6 unless the producing configuration said otherwise. On `Ok`
// the caller owns the handle written to `out_model` and must release
// it with `kgattr_model_free`.
//
// # Safety
// `path` must be null or NUL-terminated; `out_model` must be null or
// valid for one pointer write.
enum KgattrStatus kgattr_model_load(const char *path,
                                    size_t ngram_min,
                                    size_t ngram_max,
                                    struct KgattrModel **out_model);

// Releases a model handle. Null is a no-op.
//
// # Safety
// `model` must be null or a handle returned by `kgattr_model_load`
// that has not been freed before.
void kgattr_model_free(struct KgattrModel *model);

// Vector dimensionality of the model.
//
// # Safety
// `model` must be null or a live handle; `out_dim` must be null or
// valid for one write.
enum KgattrStatus kgattr_model_dim(const struct KgattrModel *model, size_t *out_dim);

// Number of in-vocabulary words.
//
// # Safety
// `model` must be null or a live handle; `out_size` must be null or
// valid for one write.
enum KgattrStatus kgattr_model_vocab_size(const struct KgattrModel *model, size_t *out_size);

// Writes the vector of `word` into `out`, which must hold exactly
// `len == kgattr_model_dim` doubles. Out-of-vocabulary words compose
// from character n-grams when the model has subword buckets and come
// back as the zero vector otherwise.
//
// # Safety
// `model` must be null or a live handle; `word` null or
// NUL-terminated; `out` null or valid for `len` writes.
enum KgattrStatus kgattr_model_word_vector(const struct KgattrModel *model,
                                           const char *word,
                                           double *out,
                                           size_t len);

// Cosine similarity of two words' vectors, written to `out`. Zero when
// either vector is all zeros.
//
// # Safety
// `model` must be null or a live handle; `a` and `b` null or
// NUL-terminated; `out` null or valid for one write.
enum KgattrStatus kgattr_model_similarity(const struct KgattrModel *model,
                                          const char *a,
                                          const char *b,
                                          double *out);

// Runs the full staged pipeline (preprocess, train when needed, match,
// rank, and eval when labels are configured) for one method. `method`
// is `"subword"`, `"wordvec"`, or `"textrank"`. Artifacts land in the
// working directory named by the configuration file.
//
// # Safety
// `config_path` and `method` must each be null or NUL-terminated.
enum KgattrStatus kgattr_pipeline_run(const char *config_path, const char *method);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KGATTR_H */
