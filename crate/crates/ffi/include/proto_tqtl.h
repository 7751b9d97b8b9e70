#ifndef PROTO_TQTL_H
#define PROTO_TQTL_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Values accepted for the `class_source` argument of [`ptq_evaluate`].
typedef enum PtqClassSource {
  PTQ_CLASS_SOURCE_PREDICTED = 0,
  PTQ_CLASS_SOURCE_GROUND_TRUTH = 1,
} PtqClassSource;

// Values accepted wherever a class is passed as `int32_t`.
typedef enum PtqLabel {
  PTQ_LABEL_REAL = 0,
  PTQ_LABEL_FAKE = 1,
} PtqLabel;

typedef enum PtqStatus {
  PTQ_STATUS_OK = 0,
  PTQ_STATUS_NULL_POINTER = 1,
  PTQ_STATUS_INVALID_UTF8 = 2,
  PTQ_STATUS_PARSE_ERROR = 3,
  PTQ_STATUS_SCOPE_ERROR = 4,
  PTQ_STATUS_IO_ERROR = 5,
  PTQ_STATUS_INVALID_TRACE = 6,
  PTQ_STATUS_EVAL_ERROR = 7,
  PTQ_STATUS_INVALID_ARGUMENT = 8,
  PTQ_STATUS_PANIC = 9,
} PtqStatus;

typedef enum PtqVerdict {
  PTQ_VERDICT_SAT = 0,
  PTQ_VERDICT_UNSAT = 1,
  PTQ_VERDICT_INCONCLUSIVE = 2,
} PtqVerdict;

// A parsed, scope-checked formula.
typedef struct PtqFormula PtqFormula;

// A validated similarity trace.
typedef struct PtqTrace PtqTrace;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Parses and scope-checks a formula.
//
// # Safety
// `source` must be a NUL-terminated string and `out` a valid pointer.
enum PtqStatus ptq_formula_parse(const char *source, struct PtqFormula **out_formula);

// Builds `phi1`, `phi2` or `phi3` with the default parameters for the
// given target class.
//
// # Safety
// `name` must be a NUL-terminated string and `out` a valid pointer.
enum PtqStatus ptq_formula_builtin(const char *name,
                                   int32_t target_class,
                                   struct PtqFormula **out_formula);

// Canonical text of a formula. Release with [`ptq_string_free`].
//
// # Safety
// `formula` must come from this library and `out` be a valid pointer.
enum PtqStatus ptq_formula_to_string(const struct PtqFormula *formula, char **out_text);

// # Safety
// `s` must be null or a string returned by this library.
void ptq_string_free(char *s);

// # Safety
// `formula` must be null or a formula returned by this library.
void ptq_formula_free(struct PtqFormula *formula);

// Reads a trace file.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
enum PtqStatus ptq_trace_read(const char *path, struct PtqTrace **out_trace);

// Builds a trace from a row-major `frames x m` score table and the class of
// each prototype.
//
// # Safety
// `scores` must point to `frames * m` doubles, `classes` to `m` integers,
// `video_id` must be a NUL-terminated string and `out` a valid pointer.
enum PtqStatus ptq_trace_from_scores(const char *video_id,
                                     const double *scores,
                                     size_t frames,
                                     size_t m,
                                     const int32_t *classes,
                                     int32_t ground_truth,
                                     int32_t predicted,
                                     struct PtqTrace **out_trace);

// Number of frames, or 0 for a null trace.
//
// # Safety
// `trace` must be null or a trace returned by this library.
size_t ptq_trace_len(const struct PtqTrace *trace);

// # Safety
// `trace` must be null or a trace returned by this library.
void ptq_trace_free(struct PtqTrace *trace);

// Robustness of `formula` at frame 0 of `trace`. Infinite robustness is
// reported as `±INFINITY`. Either out-pointer may be null.
//
// # Safety
// `formula` and `trace` must come from this library.
enum PtqStatus ptq_evaluate(const struct PtqFormula *formula,
                            const struct PtqTrace *trace,
                            int32_t class_source,
                            double *out_robustness,
                            enum PtqVerdict *out_verdict);

// Message for the last call on this thread; empty after a success. The
// pointer stays valid until the next library call on the same thread.
const char *ptq_last_error_message(void);

const char *ptq_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PROTO_TQTL_H */
