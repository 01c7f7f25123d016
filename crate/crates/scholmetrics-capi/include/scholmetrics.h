/*
 * C ABI for the scholmetrics toolkit.
 *
 * Conventions:
 *   - Every fallible function returns an SmStatus and writes its result
 *     through an out-pointer only when it returns SM_OK.
 *   - On any other status, sm_last_error_message() returns a thread-local,
 *     NUL-terminated description valid until the next failing call on the
 *     same thread.
 *   - Handles (SmOntology, SmClassifier) are opaque. Release them with the
 *     matching *_free function; passing NULL to a *_free is a no-op.
 *   - Strings returned through out-pointers are owned by the caller and
 *     must be released with sm_string_free().
 *   - All string arguments are NUL-terminated UTF-8.
 *
 * This header is maintained by hand and kept in sync with the Rust
 * implementation by the crate's header_sync test.
 */

#ifndef SCHOLMETRICS_H
#define SCHOLMETRICS_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum SmStatus {
  /* The call succeeded and any out-parameter was written. */
  SM_OK = 0,
  /* A required pointer argument was null. */
  SM_NULL_ARGUMENT = 1,
  /* A string argument was not valid UTF-8. */
  SM_INVALID_UTF8 = 2,
  /* An argument was outside its documented domain. */
  SM_INVALID_ARGUMENT = 3,
  /* Input text could not be parsed; the message names the line. */
  SM_PARSE_ERROR = 4,
  /* The underlying file operation failed. */
  SM_IO_ERROR = 5,
  /* The requested quantity has no defined value for this input. */
  SM_UNDEFINED = 6
} SmStatus;

/* Opaque handle over a loaded topic ontology. */
typedef struct SmOntology SmOntology;

/* Opaque handle over a configured classifier. */
typedef struct SmClassifier SmClassifier;

/* Library version as a static NUL-terminated string. Do not free. */
const char *sm_version(void);

/* Message recorded by the last failing call on this thread, or an empty
 * string. Do not free. */
const char *sm_last_error_message(void);

/* Parses an ontology from in-memory text: one tab-separated triple per
 * line, `subject<TAB>predicate<TAB>object`, with predicates superTopicOf,
 * relatedEquivalent, and primaryLabel. */
SmStatus sm_ontology_parse(const char *text, SmOntology **out);

/* Loads an ontology from a file in the same triple format. */
SmStatus sm_ontology_load_file(const char *path, SmOntology **out);

/* Writes the number of distinct topic labels in the ontology. */
SmStatus sm_ontology_topic_count(const SmOntology *ontology,
                                 size_t *out_count);

/* Releases an ontology handle. Classifiers created from it stay valid. */
void sm_ontology_free(SmOntology *ontology);

/* Creates a classifier with the built-in stopword list. threshold is the
 * minimum label similarity in (0, 1]; 1.0 means exact matching only. */
SmStatus sm_classifier_new(const SmOntology *ontology, double threshold,
                           SmClassifier **out);

/* Creates a classifier with a caller-supplied stopword list: one word per
 * line, `#` comments and blank lines ignored. */
SmStatus sm_classifier_new_with_stopwords(const SmOntology *ontology,
                                          const char *stopwords,
                                          double threshold,
                                          SmClassifier **out);

/* Classifies a text and writes one allocated annotation line:
 * `paper_id<TAB>direct topics<TAB>enrichment-only topics`, each topic list
 * joined with `;`. Release the line with sm_string_free(). */
SmStatus sm_classifier_classify(const SmClassifier *classifier,
                                const char *paper_id, const char *text,
                                char **out_line);

/* Releases a classifier handle. */
void sm_classifier_free(SmClassifier *classifier);

/* Releases a string returned by this library. */
void sm_string_free(char *s);

/* Writes the Levenshtein edit distance between two UTF-8 strings, counted
 * over Unicode scalar values. */
SmStatus sm_levenshtein_distance(const char *a, const char *b,
                                 size_t *out_distance);

/* Writes the normalized Levenshtein similarity in [0, 1]; two empty
 * strings are fully similar. */
SmStatus sm_levenshtein_similarity(const char *a, const char *b,
                                   double *out_similarity);

/* Writes Spearman's rank correlation between two length-len arrays.
 * Returns SM_UNDEFINED when either array has zero rank variance and
 * SM_INVALID_ARGUMENT when len < 2 or a value is not finite. */
SmStatus sm_spearman_rho(const double *xs, const double *ys, size_t len,
                         double *out_rho);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* SCHOLMETRICS_H */
