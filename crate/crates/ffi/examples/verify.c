/* Evaluates a formula against a trace file and prints the verdict.
 *
 *   cc verify.c -I../include -L../../../target/release -lproto_tqtl_ffi -o verify
 *   ./verify trace.jsonl "always freeze t . forall p at t . S(t, p) < 0.95"
 */
#include <stdio.h>

#include "proto_tqtl.h"

static const char *verdicts[] = {"SAT", "UNSAT", "INCONCLUSIVE"};

int main(int argc, char **argv) {
  if (argc != 3) {
    fprintf(stderr, "usage: %s TRACE FORMULA\n", argv[0]);
    return 1;
  }
  PtqTrace *trace = NULL;
  PtqFormula *formula = NULL;
  if (ptq_trace_read(argv[1], &trace) != PTQ_STATUS_OK ||
      ptq_formula_parse(argv[2], &formula) != PTQ_STATUS_OK) {
    fprintf(stderr, "error: %s\n", ptq_last_error_message());
    ptq_trace_free(trace);
    return 1;
  }
  double robustness;
  enum PtqVerdict verdict;
  int status = ptq_evaluate(formula, trace, PTQ_CLASS_SOURCE_PREDICTED, &robustness, &verdict);
  if (status == PTQ_STATUS_OK) {
    printf("%s\t%g\n", verdicts[verdict], robustness);
  } else {
    fprintf(stderr, "error: %s\n", ptq_last_error_message());
  }
  ptq_formula_free(formula);
  ptq_trace_free(trace);
  return status == PTQ_STATUS_OK ? 0 : 2;
}
