#ifndef MATCHPROBE_H
#define MATCHPROBE_H

/* Generated by cbindgen from matchprobe-capi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every fallible call.
typedef enum MpStatus {
  MP_STATUS_OK = 0,
  // A required pointer argument was null.
  MP_STATUS_NULL_ARGUMENT = 1,
  // A string argument was not valid UTF-8.
  MP_STATUS_UTF8 = 2,
  MP_STATUS_IO = 3,
  MP_STATUS_CONFIG = 4,
  MP_STATUS_PARSE = 5,
  MP_STATUS_SHAPE = 6,
  MP_STATUS_INPUT = 7,
  MP_STATUS_LOAD = 8,
  MP_STATUS_NUMERIC = 9,
  MP_STATUS_EVAL = 10,
  // A panic was caught at the boundary.
  MP_STATUS_PANIC = 11,
} MpStatus;

// Opaque engine handle: loaded weights plus the vocabulary and the
// input-length budget.
typedef struct MpEngine MpEngine;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Version string of the library (static storage, do not free).
const char *mp_version(void);

// Message of the calling thread's most recent error, or null when the
// last call succeeded. The pointer stays valid until the next failing
// call on the same thread; do not free it.
const char *mp_last_error(void);

// Load an engine from a model config (JSON), a weight archive and a
// vocabulary file. `max_len` caps the assembled input length (pass 0
// for the model's maximum). On success writes the handle to
// `out_engine`; free it with [`mp_engine_free`].
//
// # Safety
//
// Path arguments must be valid NUL-terminated strings and `out_engine`
// a valid pointer.
enum MpStatus mp_engine_new(const char *config_path,
                            const char *weights_path,
                            const char *vocab_path,
                            uintptr_t max_len,
                            struct MpEngine **out_engine);

// Release an engine. Passing null is a no-op.
//
// # Safety
//
// `engine` must be a handle returned by [`mp_engine_new`] that has not
// been freed yet.
void mp_engine_free(struct MpEngine *engine);

// Number of encoder layers.
//
// # Safety
//
// `engine` must be a live handle.
uintptr_t mp_engine_num_layers(const struct MpEngine *engine);

// Number of attention heads per layer.
//
// # Safety
//
// `engine` must be a live handle.
uintptr_t mp_engine_num_heads(const struct MpEngine *engine);

// Validate an ablation spec (text grammar or JSON array) against the
// engine's model bounds.
//
// # Safety
//
// `engine` must be a live handle and `spec` a valid string.
enum MpStatus mp_spec_validate(const struct MpEngine *engine, const char *spec);

// Score a query-document pair. `ablation_spec` may be null (no
// ablation) or a spec in the text grammar / JSON form. The relevance
// score (relevant minus non-relevant logit) is written to `out_score`.
//
// # Safety
//
// `engine` must be a live handle; strings valid; `out_score` writable.
enum MpStatus mp_score(const struct MpEngine *engine,
                       const char *query,
                       const char *doc,
                       const char *ablation_spec,
                       float *out_score);

// Attention mass sent along `target_part <- source_part` for every
// (layer, head) of an unablated forward pass over one pair. Part names
// are CLS, Q, SEP1, D, SEP2, and ALL for the source. Writes
// `num_layers * num_heads` values (layer-major) to `out_masses`, which
// must hold at least `out_len >= num_layers * num_heads` doubles.
//
// # Safety
//
// `engine` must be a live handle; strings valid; `out_masses` writable
// for `out_len` doubles.
enum MpStatus mp_direction_mass(const struct MpEngine *engine,
                                const char *query,
                                const char *doc,
                                const char *target_part,
                                const char *source_part,
                                double *out_masses,
                                uintptr_t out_len);

// Singular-vector alignment of one head's query-key form: writes the
// normalized score to `out_normalized` and the unnormalized sum to
// `out_raw`.
//
// # Safety
//
// `engine` must be a live handle; out-pointers writable.
enum MpStatus mp_head_alignment(const struct MpEngine *engine,
                                uintptr_t layer,
                                uintptr_t head,
                                double *out_normalized,
                                double *out_raw);

// nDCG@k of a ranked grade list against an ideal grade multiset.
// Grades below 0 count as gain 0.
//
// # Safety
//
// `ranked` must point to `ranked_len` bytes and `ideal` to `ideal_len`.
double mp_ndcg_at_k(const int8_t *ranked,
                    uintptr_t ranked_len,
                    const int8_t *ideal,
                    uintptr_t ideal_len,
                    uintptr_t k);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* MATCHPROBE_H */
