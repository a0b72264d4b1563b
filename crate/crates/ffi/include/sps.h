#ifndef SPS_H
#define SPS_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SpsStatus {
  SPS_STATUS_OK = 0,
  // A required pointer argument was null.
  SPS_STATUS_NULL_POINTER = 1,
  // A string argument was not valid UTF-8.
  SPS_STATUS_INVALID_UTF8 = 2,
  // Malformed JSON, a bad expression or a problem that fails validation.
  SPS_STATUS_INVALID_INPUT = 3,
  // The numerics failed: no reduced solution, Newton divergence.
  SPS_STATUS_NUMERIC_FAILURE = 4,
  // An output buffer is shorter than the result.
  SPS_STATUS_BUFFER_TOO_SMALL = 5,
  // A Rust panic was caught at the boundary.
  SPS_STATUS_PANIC = 6,
} SpsStatus;

// The composite approximation of a problem at one `eps`.
typedef struct SpsApproximation SpsApproximation;

// A validated problem together with its reduced solution.
typedef struct SpsProblem SpsProblem;

// A reference solution on a layer-adapted mesh.
typedef struct SpsSolution SpsSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *sps_version(void);

// Message of the last failed call on this thread, or NULL. The pointer stays
// valid until the next failing call on the same thread.
const char *sps_last_error_message(void);

// Parses and validates a JSON problem document and resolves its reduced
// solution.
//
// # Safety
// `json` must be a NUL-terminated string and `out` a writable pointer.
enum SpsStatus sps_problem_from_json(const char *json, struct SpsProblem **out);

// # Safety
// `problem` must be NULL or a handle from [`sps_problem_from_json`] that has
// not been freed.
void sps_problem_free(struct SpsProblem *problem);

// Writes `a`, `gamma`, `b`, the margin `m = -k - lambda` and the problem's
// default `eps`.
//
// # Safety
// `problem` must be a live handle; every output pointer must be writable.
enum SpsStatus sps_problem_parameters(const struct SpsProblem *problem,
                                      double *a,
                                      double *gamma,
                                      double *b,
                                      double *m,
                                      double *eps);

// Builds the composite approximation at `eps > 0`.
//
// # Safety
// `problem` must be a live handle and `out` writable.
enum SpsStatus sps_approximation_new(const struct SpsProblem *problem,
                                     double eps,
                                     struct SpsApproximation **out);

// # Safety
// `approx` must be NULL or a live handle from [`sps_approximation_new`].
void sps_approximation_free(struct SpsApproximation *approx);

// Sign case `1..=4` of the boundary jumps.
//
// # Safety
// `approx` must be a live handle.
uint8_t sps_approximation_case(const struct SpsApproximation *approx);

// Evaluates `y~` (and `w~ = y~'` when `w` is not NULL) at `n` points.
//
// # Safety
// `t` and `y` (and `w` when given) must hold `n` doubles.
enum SpsStatus sps_approximation_eval(const struct SpsApproximation *approx,
                                      const double *t,
                                      size_t n,
                                      double *y,
                                      double *w);

// Bounds `lo <= y~ - y <= hi` at `n` points.
//
// # Safety
// `t`, `lo` and `hi` must hold `n` doubles.
enum SpsStatus sps_approximation_envelope(const struct SpsApproximation *approx,
                                          const double *t,
                                          size_t n,
                                          double *lo,
                                          double *hi);

// Solves the problem at `eps` on a mesh of `cells` intervals (a multiple of
// 4, at least 64).
//
// # Safety
// `problem` must be a live handle and `out` writable.
enum SpsStatus sps_solve(const struct SpsProblem *problem,
                         double eps,
                         size_t cells,
                         struct SpsSolution **out);

// # Safety
// `solution` must be NULL or a live handle from [`sps_solve`].
void sps_solution_free(struct SpsSolution *solution);

// Number of mesh nodes, `cells + 1`.
//
// # Safety
// `solution` must be a live handle.
size_t sps_solution_len(const struct SpsSolution *solution);

// Newton iterations taken.
//
// # Safety
// `solution` must be a live handle.
size_t sps_solution_newton_iterations(const struct SpsSolution *solution);

// Copies nodes, values and derivative estimates into buffers of `capacity`
// doubles each.
//
// # Safety
// `t`, `y` and `w` must each hold `capacity` doubles.
enum SpsStatus sps_solution_copy(const struct SpsSolution *solution,
                                 double *t,
                                 double *y,
                                 double *w,
                                 size_t capacity);

// Feasible `lambda` interval for a problem with `f = y^2 + u`. `found` is
// false when no `lambda` satisfies every condition.
//
// # Safety
// `json` must be a NUL-terminated string; the output pointers writable.
enum SpsStatus sps_quadratic_lambda_interval(const char *json, double *lo, double *hi, bool *found);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPS_H */
