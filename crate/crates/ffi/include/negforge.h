#ifndef NEGFORGE_H
#define NEGFORGE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum NfStatus {
  NF_STATUS_OK = 0,
  /**
   * A required pointer was null.
   */
  NF_STATUS_NULL_ARGUMENT = 1,
  /**
   * A string argument was not UTF-8.
   */
  NF_STATUS_INVALID_UTF8 = 2,
  /**
   * CoNLL-U or JSON input could not be parsed.
   */
  NF_STATUS_PARSE_ERROR = 3,
  /**
   * An argument was out of range or otherwise unusable.
   */
  NF_STATUS_INVALID_ARGUMENT = 4,
  /**
   * A configuration object was rejected.
   */
  NF_STATUS_CONFIG_ERROR = 5,
  /**
   * The library panicked; the handle involved should be discarded.
   */
  NF_STATUS_INTERNAL = 6,
} NfStatus;

/**
 * Token unit for edit distances.
 */
typedef enum NfDistanceUnit {
  NF_DISTANCE_UNIT_TOKEN = 0,
  NF_DISTANCE_UNIT_CHAR = 1,
} NfDistanceUnit;

/**
 * Parsed CoNLL-U sentences.
 */
typedef struct NfCorpus NfCorpus;

/**
 * A filter configuration together with its cue lexicon.
 */
typedef struct NfFilter NfFilter;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static string; do not free.
 */
const char *nf_version(void);

/**
 * Message for the last failed call on this thread, empty after a success.
 * Valid until the next call into the library on the same thread; do not free.
 */
const char *nf_last_error(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` is null or a pointer previously returned through a `char **` out
 * parameter and not yet freed.
 */
void nf_string_free(char *s);

/**
 * Parses a CoNLL-U document into a corpus handle.
 *
 * # Safety
 * `conllu` is a NUL-terminated string; `out` is valid for one write.
 */
enum NfStatus nf_corpus_parse_conllu(const char *conllu, struct NfCorpus **out);

/**
 * Number of sentences in the corpus; 0 for null.
 *
 * # Safety
 * `corpus` is null or a live handle.
 */
size_t nf_corpus_len(const struct NfCorpus *corpus);

/**
 * Mask proposals for sentence `index` (0-based) as a JSON array.
 * `config_json` is a mask configuration object or null for defaults.
 *
 * # Safety
 * `corpus` is a live handle; `config_json` is null or NUL-terminated;
 * `out` is valid for one write.
 */
enum NfStatus nf_corpus_propose_masks_json(const struct NfCorpus *corpus,
                                           size_t index,
                                           const char *config_json,
                                           char **out);

/**
 * Releases a corpus. Null is ignored.
 *
 * # Safety
 * `corpus` is null or a handle from [`nf_corpus_parse_conllu`] not yet freed.
 */
void nf_corpus_free(struct NfCorpus *corpus);

/**
 * Creates a filter from a JSON filter configuration, or defaults when null.
 * A `cue_lexicon_path` in the configuration is loaded here.
 *
 * # Safety
 * `config_json` is null or NUL-terminated; `out` is valid for one write.
 */
enum NfStatus nf_filter_new(const char *config_json, struct NfFilter **out);

/**
 * Filters candidate negations of `original`. `candidates_json` is a JSON
 * array of strings; the result is the filtered set as JSON.
 *
 * # Safety
 * `filter` is a live handle; the strings are NUL-terminated; `out` is
 * valid for one write.
 */
enum NfStatus nf_filter_run_json(const struct NfFilter *filter,
                                 const char *original,
                                 const char *candidates_json,
                                 char **out);

/**
 * Releases a filter. Null is ignored.
 *
 * # Safety
 * `filter` is null or a handle from [`nf_filter_new`] not yet freed.
 */
void nf_filter_free(struct NfFilter *filter);

/**
 * Edit distance divided by the longer length.
 *
 * # Safety
 * `a` and `b` are NUL-terminated; `out` is valid for one write.
 */
enum NfStatus nf_norm_levenshtein(const char *a,
                                  const char *b,
                                  enum NfDistanceUnit unit,
                                  double *out);

/**
 * Self-BLEU of a JSON array of sentences. Needs at least two sentences.
 *
 * # Safety
 * `sentences_json` is NUL-terminated; `out` is valid for one write.
 */
enum NfStatus nf_self_bleu(const char *sentences_json, size_t max_n, double *out);

/**
 * Perplexity from `len` natural-log token probabilities.
 *
 * # Safety
 * `logprobs` points to `len` readable doubles; `out` is valid for one write.
 */
enum NfStatus nf_perplexity(const double *logprobs, size_t len, double *out);

/**
 * Tree edit distance between the UPOS-labeled dependency trees of two
 * single-sentence CoNLL-U documents.
 *
 * # Safety
 * `a` and `b` are NUL-terminated; `out` is valid for one write.
 */
enum NfStatus nf_tree_edit_distance_conllu(const char *a, const char *b, size_t *out);

/**
 * Builds a generation prompt with the default special tokens.
 *
 * # Safety
 * `original` and `masked` are NUL-terminated; `out` is valid for one write.
 */
enum NfStatus nf_build_prompt(const char *original, const char *masked, char **out);

/**
 * Negation cues found in `text` by the bundled lexicon, as a JSON array.
 *
 * # Safety
 * `sentence` is NUL-terminated; `out` is valid for one write.
 */
enum NfStatus nf_detect_cues_json(const char *sentence, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NEGFORGE_H */
