#ifndef ABSUM_H
#define ABSUM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum AbsumStatus {
  ABSUM_STATUS_OK = 0,
  ABSUM_STATUS_INVALID_ARGUMENT = 1,
  ABSUM_STATUS_POLE = 2,
  ABSUM_STATUS_NO_CONVERGENCE = 3,
  ABSUM_STATUS_DIVISION_BY_ZERO = 4,
  ABSUM_STATUS_IDENTITY_VIOLATION = 5,
  ABSUM_STATUS_CONTEXT_MISMATCH = 6,
  ABSUM_STATUS_PARSE = 7,
  ABSUM_STATUS_CACHE = 8,
  ABSUM_STATUS_NULL_POINTER = 9,
  ABSUM_STATUS_PANIC = 10,
} AbsumStatus;

/**
 * Opaque evaluation result.
 */
typedef struct AbsumResult AbsumResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Evaluates S(x, N, m). `method` may be null or "auto" for automatic selection.
 */
enum AbsumStatus absum_eval(const char *x,
                            uint64_t n,
                            uint32_t m,
                            const char *method,
                            uint32_t bits,
                            double tol,
                            struct AbsumResult **out);

/**
 * Evaluates the two-parameter sum S(x, y, m, n). `form` selects the method:
 * 0 series, 30, 34 or 36 for the quadrature forms.
 */
enum AbsumStatus absum_eval_two_param(const char *x,
                                      const char *y,
                                      uint32_t m,
                                      uint32_t n,
                                      uint32_t form,
                                      uint32_t bits,
                                      double tol,
                                      struct AbsumResult **out);

/**
 * Cross-validates every applicable method; `passed` receives 1 or 0 and
 * `report_json` (optional) the report document.
 */
enum AbsumStatus absum_validate(const char *x,
                                uint64_t n,
                                uint32_t m,
                                uint32_t bits,
                                double tol,
                                int32_t *passed,
                                char **report_json);

/**
 * The value as "p/q", a decimal string or "re+imi". Free with [`absum_string_free`].
 */
char *absum_result_value(const struct AbsumResult *r);

/**
 * The result as a JSON object. Free with [`absum_string_free`].
 */
char *absum_result_json(const struct AbsumResult *r);

/**
 * Method identifier; static storage, do not free.
 */
const char *absum_result_method(const struct AbsumResult *r);

bool absum_result_is_exact(const struct AbsumResult *r);

/**
 * Absolute error bound; 0 for exact results, NaN for a null handle.
 */
double absum_result_error_bound(const struct AbsumResult *r);

/**
 * Nearest double to the real part.
 */
double absum_result_real(const struct AbsumResult *r);

double absum_result_imag(const struct AbsumResult *r);

uint64_t absum_result_terms_used(const struct AbsumResult *r);

void absum_result_free(struct AbsumResult *r);

void absum_string_free(char *s);

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next call into the library on the same thread.
 */
const char *absum_last_error(void);

/**
 * Library version; static storage.
 */
const char *absum_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ABSUM_H */
