#ifndef SCRIBO_H
#define SCRIBO_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum ScriboStatus {
  SCRIBO_STATUS_OK = 0,
  SCRIBO_STATUS_NULL_ARGUMENT = 1,
  SCRIBO_STATUS_INVALID_UTF8 = 2,
  SCRIBO_STATUS_INVALID_ARGUMENT = 3,
  /**
   * Bad input data: unreadable files, malformed models or audio.
   */
  SCRIBO_STATUS_DATA_ERROR = 4,
  SCRIBO_STATUS_PANIC = 5,
} ScriboStatus;

/**
 * Loaded n-gram language model.
 */
typedef struct ScriboLm ScriboLm;

/**
 * Loaded acoustic model.
 */
typedef struct ScriboModel ScriboModel;

/**
 * Transcript normalizer bound to an alphabet.
 */
typedef struct ScriboNormalizer ScriboNormalizer;

/**
 * Decoding options. `beam_width` 0 selects greedy decoding unless an LM is
 * given; `alpha`/`beta` below zero use the defaults; `chunk_seconds` at or
 * below zero disables streaming.
 */
typedef struct ScriboDecodeOptions {
  uint32_t beam_width;
  double alpha;
  double beta;
  double chunk_seconds;
  const struct ScriboLm *lm;
} ScriboDecodeOptions;

/**
 * Timing of one transcription, in seconds.
 */
typedef struct ScriboRtf {
  double clip_duration;
  double wall_time;
  double rtf;
  double features;
  double forward;
  double decode;
} ScriboRtf;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * Valid until the next call on the same thread.
 */
const char *scribo_last_error(void);

/**
 * # Safety
 * `s` must come from this library, or be null.
 */
void scribo_string_free(char *s);

/**
 * Defaults: greedy decoding, no LM, no streaming.
 */
struct ScriboDecodeOptions scribo_decode_options_default(void);

/**
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum ScriboStatus scribo_model_load(const char *path, struct ScriboModel **out);

/**
 * # Safety
 * `model` must come from [`scribo_model_load`], or be null.
 */
void scribo_model_free(struct ScriboModel *model);

/**
 * Output columns (alphabet size plus blank).
 *
 * # Safety
 * `model` must be a live handle.
 */
enum ScriboStatus scribo_model_output_width(const struct ScriboModel *model, uint32_t *out);

/**
 * Transcribes a WAV file. `opts` and `rtf` may be null.
 *
 * # Safety
 * Pointers must be valid; `*text` receives a string to release with
 * [`scribo_string_free`].
 */
enum ScriboStatus scribo_model_transcribe_wav(const struct ScriboModel *model,
                                              const char *wav_path,
                                              const struct ScriboDecodeOptions *opts,
                                              char **text,
                                              struct ScriboRtf *rtf);

/**
 * Decodes `frames x width` row-major log-probabilities with the model's
 * alphabet.
 *
 * # Safety
 * `logits` must point to `frames * width` floats.
 */
enum ScriboStatus scribo_model_decode_logits(const struct ScriboModel *model,
                                             const float *logits,
                                             size_t frames,
                                             size_t width,
                                             const struct ScriboDecodeOptions *opts,
                                             char **text);

/**
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum ScriboStatus scribo_lm_load(const char *path, struct ScriboLm **out);

/**
 * # Safety
 * `lm` must come from [`scribo_lm_load`], or be null.
 */
void scribo_lm_free(struct ScriboLm *lm);

/**
 * log10 probability of a whitespace-separated sentence.
 *
 * # Safety
 * Pointers must be valid.
 */
enum ScriboStatus scribo_lm_score(const struct ScriboLm *lm,
                                  const char *sentence,
                                  bool with_markers,
                                  double *log10);

/**
 * `rules` is a language tag or rule file; `alphabet` a preset name or JSON
 * file, or null for the preset matching the rules' language.
 *
 * # Safety
 * Pointers must be valid.
 */
enum ScriboStatus scribo_normalizer_new(const char *rules,
                                        const char *alphabet,
                                        struct ScriboNormalizer **out);

/**
 * # Safety
 * `n` must come from [`scribo_normalizer_new`], or be null.
 */
void scribo_normalizer_free(struct ScriboNormalizer *n);

/**
 * # Safety
 * Pointers must be valid; `*out` is released with [`scribo_string_free`].
 */
enum ScriboStatus scribo_normalize(const struct ScriboNormalizer *n, const char *text, char **out);

/**
 * Word error rate of `hypothesis` against a non-empty `reference`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum ScriboStatus scribo_word_error_rate(const char *reference,
                                         const char *hypothesis,
                                         double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SCRIBO_H */
