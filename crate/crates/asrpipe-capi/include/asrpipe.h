#ifndef ASRPIPE_H
#define ASRPIPE_H

/* Generated by cbindgen from asrpipe-capi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes shared by every fallible function.
 */
typedef enum AsrpipeStatus {
  ASRPIPE_STATUS_OK = 0,
  ASRPIPE_STATUS_INVALID_ARGUMENT = 1,
  ASRPIPE_STATUS_IO_ERROR = 2,
  ASRPIPE_STATUS_PARSE_ERROR = 3,
  ASRPIPE_STATUS_INTERNAL_ERROR = 4,
} AsrpipeStatus;

/**
 * Opaque emissions handle.
 */
typedef struct AsrpipeEmissions AsrpipeEmissions;

/**
 * Opaque lexicon handle (bound to the vocabulary it was loaded with).
 */
typedef struct AsrpipeLexicon AsrpipeLexicon;

/**
 * Opaque language-model handle.
 */
typedef struct AsrpipeLm AsrpipeLm;

/**
 * Beam-search options mirroring the library defaults.
 */
typedef struct AsrpipeBeamOptions {
  uint32_t beam_size;
  double lm_weight;
  double word_bonus;
  uint32_t nbest;
} AsrpipeBeamOptions;

/**
 * Word-error-rate counts for one reference/hypothesis pair.
 */
typedef struct AsrpipeWer {
  uint64_t substitutions;
  uint64_t insertions;
  uint64_t deletions;
  uint64_t ref_words;
  double wer;
} AsrpipeWer;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *asrpipe_last_error(void);

/**
 * Library version as a static string; do not free.
 */
const char *asrpipe_version(void);

/**
 * Frees a string returned by this library.
 *
 * # Safety
 * `s` must be a pointer previously returned by an asrpipe function that
 * documents `asrpipe_string_free`, or null.
 */
void asrpipe_string_free(char *s);

/**
 * Loads an ARPA language model; null on failure.
 *
 * # Safety
 * `path` must be a NUL-terminated UTF-8 string.
 */
struct AsrpipeLm *asrpipe_lm_read_arpa(const char *path);

/**
 * # Safety
 * `lm` must come from `asrpipe_lm_read_arpa` and not be freed twice.
 */
void asrpipe_lm_free(struct AsrpipeLm *lm);

/**
 * log10 probability of a whitespace-tokenized sentence (with implicit
 * sentence boundaries), written to `out`.
 *
 * # Safety
 * `lm` must be a live handle; `text` a NUL-terminated UTF-8 string; `out`
 * a valid pointer.
 */
enum AsrpipeStatus asrpipe_lm_sentence_logprob(const struct AsrpipeLm *lm,
                                               const char *text,
                                               double *out);

/**
 * Perplexity of a one-sentence-per-line corpus file, written to `out`.
 *
 * # Safety
 * `lm` must be a live handle; `corpus_path` a NUL-terminated UTF-8 path;
 * `out` a valid pointer.
 */
enum AsrpipeStatus asrpipe_lm_perplexity_file(const struct AsrpipeLm *lm,
                                              const char *corpus_path,
                                              double *out);

/**
 * Reads a CTCE emissions file; null on failure.
 *
 * # Safety
 * `path` must be a NUL-terminated UTF-8 string.
 */
struct AsrpipeEmissions *asrpipe_emissions_read(const char *path);

/**
 * # Safety
 * `em` must come from `asrpipe_emissions_read` and not be freed twice.
 */
void asrpipe_emissions_free(struct AsrpipeEmissions *em);

/**
 * Reads a lexicon file resolved against the emissions' vocabulary; null on
 * failure.
 *
 * # Safety
 * `path` must be a NUL-terminated UTF-8 string; `em` a live handle.
 */
struct AsrpipeLexicon *asrpipe_lexicon_read(const char *path, const struct AsrpipeEmissions *em);

/**
 * # Safety
 * `lex` must come from `asrpipe_lexicon_read` and not be freed twice.
 */
void asrpipe_lexicon_free(struct AsrpipeLexicon *lex);

/**
 * Greedy CTC decode; returns the transcript (free with
 * `asrpipe_string_free`) or null.
 *
 * # Safety
 * `em` must be a live handle.
 */
char *asrpipe_decode_greedy(const struct AsrpipeEmissions *em);

/**
 * Prefix beam search. `lm` and `lexicon` may be null (no fusion, no
 * constraint). Returns a JSON array of hypotheses `{text,
 * acoustic_logprob, lm_log10prob, combined_score, token_count, word_count,
 * confidence}` (free with `asrpipe_string_free`) or null.
 *
 * # Safety
 * `em` must be a live handle; `lm`/`lexicon` live handles or null;
 * `options` a valid pointer or null for defaults.
 */
char *asrpipe_decode_beam(const struct AsrpipeEmissions *em,
                          const struct AsrpipeBeamOptions *options,
                          const struct AsrpipeLm *lm,
                          const struct AsrpipeLexicon *lexicon);

/**
 * Transcript preprocessing (lowercase, punctuation policy, digit
 * spelling). Free the result with `asrpipe_string_free`.
 *
 * # Safety
 * `text` must be a NUL-terminated UTF-8 string.
 */
char *asrpipe_preprocess(const char *text, bool spell_digits);

/**
 * Removes diacritical marks. Free the result with `asrpipe_string_free`.
 *
 * # Safety
 * `text` must be a NUL-terminated UTF-8 string.
 */
char *asrpipe_strip_diacritics(const char *text);

/**
 * WER with default transcript preprocessing on both sides.
 *
 * # Safety
 * `reference` and `hypothesis` must be NUL-terminated UTF-8 strings; `out`
 * a valid pointer.
 */
enum AsrpipeStatus asrpipe_wer(const char *reference,
                               const char *hypothesis,
                               struct AsrpipeWer *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ASRPIPE_H */
