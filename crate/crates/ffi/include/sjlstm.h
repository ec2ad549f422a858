#ifndef SJLSTM_H
#define SJLSTM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes.
typedef enum SjStatus {
  SJ_STATUS_OK = 0,
  SJ_STATUS_NULL_POINTER = 1,
  SJ_STATUS_INVALID_UTF8 = 2,
  SJ_STATUS_IO = 3,
  SJ_STATUS_INVALID_CHECKPOINT = 4,
  SJ_STATUS_EMPTY_DOCUMENT = 5,
  SJ_STATUS_BUFFER_TOO_SMALL = 6,
  SJ_STATUS_INTERNAL = 7,
} SjStatus;

// Opaque model handle.
typedef struct SjModel SjModel;

// Outcome of reading one document.
typedef struct SjReading {
  // Predicted class index.
  size_t prediction;
  // Number of tokens in the document, punctuation included.
  size_t tokens;
  size_t read;
  size_t skipped;
  size_t jumped;
  // Analytic FLOPs of this episode.
  uint64_t flops;
  // Analytic FLOPs of a plain full read of the same document.
  uint64_t flops_full_read;
} SjReading;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Loads `checkpoint_path` and the vocab.txt / labels.txt beside it. On
// success `*out` receives a handle to release with [`sj_model_free`].
//
// # Safety
// `checkpoint_path` must be a NUL-terminated string and `out` a valid
// pointer to writable storage for one handle.
enum SjStatus sj_model_load(const char *checkpoint_path, struct SjModel **out);

// Releases a handle from [`sj_model_load`]. Null is ignored.
//
// # Safety
// `model` must be null or a handle not yet freed.
void sj_model_free(struct SjModel *model);

// Number of classes, or 0 for a null handle.
//
// # Safety
// `model` must be null or a live handle.
size_t sj_model_num_classes(const struct SjModel *model);

// Name of class `index`, owned by the model; null when out of range.
//
// # Safety
// `model` must be null or a live handle. The returned pointer is valid
// until the model is freed.
const char *sj_model_label(const struct SjModel *model, size_t index);

// Reads `text` greedily (or every token when `force_read` is non-zero).
// `reading` receives the prediction and counts; when `probs` is non-null it
// receives the class probabilities and must hold `probs_len` >= the number
// of classes.
//
// # Safety
// `model` must be a live handle, `text` a NUL-terminated string, `reading`
// writable, and `probs` null or valid for `probs_len` doubles.
enum SjStatus sj_model_classify(const struct SjModel *model,
                                const char *text,
                                int32_t force_read,
                                struct SjReading *reading,
                                double *probs,
                                size_t probs_len);

// Renders the reading of `text` with `~skipped~` tokens and `[[jumped]]`
// spans. `*out` receives a string to release with [`sj_string_free`].
//
// # Safety
// `model` must be a live handle, `text` a NUL-terminated string and `out`
// writable.
enum SjStatus sj_model_trace(const struct SjModel *model,
                             const char *text,
                             int32_t force_read,
                             char **out);

// Releases a string returned by this library. Null is ignored.
//
// # Safety
// `s` must be null or a string from this library not yet freed.
void sj_string_free(char *s);

// Message of the last failed call on this thread; empty if none. Valid
// until the next failing call on the same thread.
const char *sj_last_error(void);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* SJLSTM_H */
