#ifndef GAUSSCONVEX_H
#define GAUSSCONVEX_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum GcStatus {
  GC_STATUS_OK = 0,
  GC_STATUS_NULL_POINTER = 1,
  /**
   * Bad text, parameter or dimension.
   */
  GC_STATUS_INVALID_ARGUMENT = 2,
  /**
   * A numerical routine missed its tolerance.
   */
  GC_STATUS_NUMERICAL_FAILURE = 3,
  GC_STATUS_UNSUPPORTED = 4,
  GC_STATUS_PANIC = 5,
} GcStatus;

typedef enum GcVerdict {
  GC_VERDICT_CONCAVE_WITHIN_TOL = 0,
  GC_VERDICT_VIOLATION = 1,
  GC_VERDICT_INCONCLUSIVE = 2,
} GcVerdict;

/**
 * Opaque convex body.
 */
typedef struct GcBody GcBody;

/**
 * Opaque concavity transform.
 */
typedef struct GcTransform GcTransform;

/**
 * Spherical quadrature settings; see [`gc_rule_default`].
 */
typedef struct GcRule {
  double tol;
  size_t max_panels;
  size_t mc_directions;
  uint64_t seed;
  double fail_tol;
} GcRule;

/**
 * A value and its absolute error bound.
 */
typedef struct GcEstimate {
  double value;
  double err;
} GcEstimate;

typedef struct GcConcavity {
  double max_second_difference;
  double budget;
  double worst_ratio;
  double worst_t;
  enum GcVerdict verdict;
} GcConcavity;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *gc_version(void);

/**
 * Copies the calling thread's last error message into `buf` (truncated,
 * always NUL-terminated when `len > 0`) and returns its full length.
 *
 * # Safety
 * `buf` must be valid for `len` bytes or null.
 */
size_t gc_last_error(char *buf, size_t len);

struct GcRule gc_rule_default(void);

/**
 * Parses a body in the one-line grammar; `n = 0` takes the dimension from
 * the text.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` must be writable.
 */
enum GcStatus gc_body_parse(const char *text_, size_t n, struct GcBody **out);

/**
 * # Safety
 * `body` must come from [`gc_body_parse`] and not be used afterwards.
 */
void gc_body_free(struct GcBody *body);

/**
 * Dimension of `body`, or 0 for null.
 *
 * # Safety
 * `body` must be a live handle or null.
 */
size_t gc_body_dim(const struct GcBody *body);

/**
 * Gaussian measure of `body`; `rule` may be null for defaults.
 *
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum GcStatus gc_measure(const struct GcBody *body,
                         const struct GcRule *rule,
                         struct GcEstimate *out);

/**
 * Parses `psi_inv`, `phi_inv`, `power:p=..`, `conjecture_F:c0=..`,
 * `weak_F:c0=..` or `bad_func`; `n` is used by the last three.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` must be writable.
 */
enum GcStatus gc_transform_parse(const char *text_, size_t n, struct GcTransform **out);

/**
 * # Safety
 * `t` must come from [`gc_transform_parse`] and not be used afterwards.
 */
void gc_transform_free(struct GcTransform *t);

/**
 * Transform value at measure `a`.
 *
 * # Safety
 * `t` must be live; `out` must be writable.
 */
enum GcStatus gc_transform_apply(const struct GcTransform *t, double a, struct GcEstimate *out);

/**
 * Concavity of `t -> F(gamma((1-t) K + t L))` on `grid_points` interior
 * points of a uniform grid (at least 9).
 *
 * # Safety
 * Handles must be live; `rule` may be null; `out` must be writable.
 */
enum GcStatus gc_concavity_check(const struct GcTransform *transform,
                                 const struct GcBody *k,
                                 const struct GcBody *l,
                                 size_t grid_points,
                                 const struct GcRule *rule,
                                 struct GcConcavity *out);

/**
 * Normal distribution function.
 */
double gc_psi(double t);

/**
 * # Safety
 * `out` must be writable.
 */
enum GcStatus gc_psi_inv(double a, double *out);

/**
 * Inverse of `erf(t / sqrt 2)`, the half-width of a strip of measure `a`.
 *
 * # Safety
 * `out` must be writable.
 */
enum GcStatus gc_phi_inv(double a, double *out);

/**
 * Concavity power of the round `k`-cylinder of measure `a`.
 *
 * # Safety
 * `out` must be writable.
 */
enum GcStatus gc_cylinder_ps(size_t k, double a, double *out);

/**
 * Torsional rigidity (source 1) of a half-space of measure `a`.
 *
 * # Safety
 * `out` must be writable.
 */
enum GcStatus gc_torsion_halfspace(double a, struct GcEstimate *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GAUSSCONVEX_H */
