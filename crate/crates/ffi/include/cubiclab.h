#ifndef CUBICLAB_H
#define CUBICLAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CubiclabStatus {
  CUBICLAB_STATUS_OK = 0,
  CUBICLAB_STATUS_NULL_POINTER = 1,
  CUBICLAB_STATUS_DOMAIN = 2,
  CUBICLAB_STATUS_POLE = 3,
  CUBICLAB_STATUS_NOT_IN_SLICE = 4,
  CUBICLAB_STATUS_BRANCH_AMBIGUITY = 5,
  CUBICLAB_STATUS_SOLVER_FAILURE = 6,
  CUBICLAB_STATUS_ILL_CONDITIONED = 7,
  CUBICLAB_STATUS_NOT_FOUND = 8,
  CUBICLAB_STATUS_TUNE_FAILED = 9,
  CUBICLAB_STATUS_NOT_HYPERBOLIC_CANTOR = 10,
  CUBICLAB_STATUS_INCREASE_DEPTH = 11,
  CUBICLAB_STATUS_NO_ESTIMATE = 12,
  CUBICLAB_STATUS_UNDEFINED_INPUT = 13,
  CUBICLAB_STATUS_PANIC = 14,
} CubiclabStatus;

typedef enum CubiclabFamilyKind {
  CUBICLAB_FAMILY_KIND_CUBIC = 0,
  CUBICLAB_FAMILY_KIND_DEGREE_D = 1,
  CUBICLAB_FAMILY_KIND_MC_MULLEN = 2,
} CubiclabFamilyKind;

/**
 * A member of one of the families.
 */
typedef struct CubiclabFamily CubiclabFamily;

/**
 * A parameter slice `ζ(a, b) = ζ₀`.
 */
typedef struct CubiclabSlice CubiclabSlice;

typedef struct CubiclabComplex {
  double re;
  double im;
} CubiclabComplex;

typedef struct CubiclabPotential {
  double value;
  bool escaped;
  uint32_t iterations_used;
  double final_modulus;
  bool inner_captured;
} CubiclabPotential;

typedef struct CubiclabEstimate {
  double value;
  double uncertainty;
  /**
   * NaN when the method has no fit
   */
  double fit_residual;
} CubiclabEstimate;

typedef struct CubiclabSlicePoint {
  struct CubiclabComplex a;
  struct CubiclabComplex b;
  double residual;
} CubiclabSlicePoint;

typedef struct CubiclabOmegaWitness {
  int8_t sign1;
  int8_t sign2;
  int64_t a1;
  int64_t a2;
  struct CubiclabComplex beta;
} CubiclabOmegaWitness;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *cubiclab_version(void);

/**
 * Message for the last failing call on this thread, or an empty string.
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *cubiclab_last_error(void);

/**
 * Creates a family member. `degree` is ignored for the cubic family and is
 * the exponent `n` for McMullen maps.
 *
 * # Safety
 * `out` must point to writable storage for one handle pointer.
 */
enum CubiclabStatus cubiclab_family_new(enum CubiclabFamilyKind kind,
                                        uint32_t degree,
                                        struct CubiclabComplex a,
                                        struct CubiclabComplex b,
                                        struct CubiclabFamily **out);

/**
 * # Safety
 * `f` must be null or a handle from [`cubiclab_family_new`] not yet freed.
 */
void cubiclab_family_free(struct CubiclabFamily *f);

/**
 * # Safety
 * `f` must be a live family handle and `out` writable.
 */
enum CubiclabStatus cubiclab_family_eval(const struct CubiclabFamily *f,
                                         struct CubiclabComplex z,
                                         struct CubiclabComplex *out);

/**
 * Green's function of the basin of infinity at `z`.
 *
 * # Safety
 * `f` must be a live family handle and `out` writable.
 */
enum CubiclabStatus cubiclab_potential(const struct CubiclabFamily *f,
                                       struct CubiclabComplex z,
                                       double tol,
                                       uint32_t max_depth,
                                       struct CubiclabPotential *out);

/**
 * Böttcher coordinate at `z`; `residual` receives the conjugacy defect.
 *
 * # Safety
 * `f` must be a live family handle; `out` and `residual` writable.
 */
enum CubiclabStatus cubiclab_boettcher(const struct CubiclabFamily *f,
                                       struct CubiclabComplex z,
                                       double tol,
                                       struct CubiclabComplex *out,
                                       double *residual);

/**
 * Slice coordinate `ζ` of a member whose co-critical point escapes faster.
 *
 * # Safety
 * `f` must be a live family handle and `out` writable.
 */
enum CubiclabStatus cubiclab_zeta_of(const struct CubiclabFamily *f, struct CubiclabComplex *out);

/**
 * Box-counting dimension of the Julia set on a `resolution`² raster.
 *
 * # Safety
 * `f` must be a live family handle and `out` writable.
 */
enum CubiclabStatus cubiclab_box_dimension(const struct CubiclabFamily *f,
                                           uint32_t resolution,
                                           uint32_t depth,
                                           struct CubiclabEstimate *out);

/**
 * Hausdorff dimension of a Cantor Julia set from the pressure equation.
 *
 * # Safety
 * `f` must be a live family handle and `out` writable.
 */
enum CubiclabStatus cubiclab_pressure_dimension(const struct CubiclabFamily *f,
                                                uint32_t refinement_depth,
                                                struct CubiclabEstimate *out);

/**
 * # Safety
 * `out` must point to writable storage for one handle pointer.
 */
enum CubiclabStatus cubiclab_slice_new(struct CubiclabComplex zeta,
                                       enum CubiclabFamilyKind kind,
                                       uint32_t degree,
                                       struct CubiclabSlice **out);

/**
 * # Safety
 * `s` must be null or a handle from [`cubiclab_slice_new`] not yet freed.
 */
void cubiclab_slice_free(struct CubiclabSlice *s);

/**
 * Solves for `b` on the slice at parameter `a`. A null `b_seed` uses the
 * built-in seed.
 *
 * # Safety
 * `s` must be a live slice handle, `b_seed` null or readable, `out` writable.
 */
enum CubiclabStatus cubiclab_slice_solve(const struct CubiclabSlice *s,
                                         struct CubiclabComplex a,
                                         const struct CubiclabComplex *b_seed,
                                         struct CubiclabSlicePoint *out);

/**
 * Tests `alpha ∈ Ω_{p,q}`. `found` receives whether it is a member; `out`
 * receives the witness when it is.
 *
 * # Safety
 * `found` and `out` must be writable.
 */
enum CubiclabStatus cubiclab_omega_membership(int64_t p,
                                              int64_t q,
                                              int64_t n1,
                                              int64_t n2,
                                              double beta_im_bound,
                                              struct CubiclabComplex alpha,
                                              bool *found,
                                              struct CubiclabOmegaWitness *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CUBICLAB_H */
