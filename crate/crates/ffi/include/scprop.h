#ifndef SCPROP_H
#define SCPROP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ScpMethod {
  SCP_METHOD_SMOOTHED_IVR = 0,
  SCP_METHOD_HERMAN_KLUK = 1,
  SCP_METHOD_HELLER = 2,
} ScpMethod;

typedef enum ScpRule {
  SCP_RULE_SMOOTHED_PLUS_I = 0,
  SCP_RULE_ANTISMOOTHED_MINUS_I = 1,
  SCP_RULE_WEYL_WKB = 2,
} ScpRule;

typedef enum ScpStatus {
  SCP_STATUS_OK = 0,
  SCP_STATUS_NULL_POINTER = 1,
  SCP_STATUS_INVALID_ARGUMENT = 2,
  SCP_STATUS_COMPUTE_ERROR = 3,
  SCP_STATUS_PANIC = 4,
  SCP_STATUS_BUFFER_TOO_SMALL = 5,
} ScpStatus;

typedef enum ScpSymbol {
  SCP_SYMBOL_WEYL = 0,
  SCP_SYMBOL_SMOOTHED = 1,
  SCP_SYMBOL_ANTISMOOTHED = 2,
} ScpSymbol;

/**
 * Opaque result of a sine-basis diagonalization.
 */
typedef struct ScpEigen ScpEigen;

/**
 * Opaque Hamiltonian with its coherent-state widths.
 */
typedef struct ScpModel ScpModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *scp_version(void);

/**
 * Length in bytes (without NUL) of the calling thread's last error message.
 */
size_t scp_last_error_length(void);

/**
 * Copies the last error message (NUL-terminated, truncated to fit) into
 * `buf`. Returns the number of bytes written excluding the NUL.
 *
 * # Safety
 * `buf` must be valid for `len` bytes or null.
 */
size_t scp_last_error_message(char *buf, size_t len);

/**
 * H = p²/2m + mω²q²/2.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum ScpStatus scp_model_harmonic(double mass,
                                  double omega,
                                  double b,
                                  double hbar,
                                  struct ScpModel **out);

/**
 * H = p²/2m + Σ coeffs[k] q^k.
 *
 * # Safety
 * `coeffs` must point to `n` doubles (or be null with `n == 0`); `out` must be valid.
 */
enum ScpStatus scp_model_polynomial(double mass,
                                    const double *coeffs,
                                    size_t n,
                                    double b,
                                    double hbar,
                                    struct ScpModel **out);

/**
 * H = p²/2m + V0 [e^{α(q−A)} + e^{−α(q+A)}].
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum ScpStatus scp_model_barrier(double v0,
                                 double alpha,
                                 double a,
                                 double mass,
                                 double b,
                                 double hbar,
                                 struct ScpModel **out);

/**
 * # Safety
 * `model` must come from a `scp_model_*` constructor and not be used again.
 */
void scp_model_destroy(struct ScpModel *model);

/**
 * Evaluates ⟨x|K(t)|z′⟩ for the chosen method, z′ labelled by (q0, p0),
 * at the `n` points `xs`.
 *
 * # Safety
 * `xs`, `out_re`, `out_im` must be valid for `n` doubles.
 */
enum ScpStatus scp_mixed_packet(const struct ScpModel *model,
                                enum ScpMethod method,
                                double q0,
                                double p0,
                                double t,
                                const double *xs,
                                size_t n,
                                double *out_re,
                                double *out_im);

/**
 * Semiclassical ⟨z″|e^{−iĤt/ħ}|z′⟩ from the principal complex trajectory.
 *
 * # Safety
 * `out_re` and `out_im` must be valid pointers.
 */
enum ScpStatus scp_coherent_propagator(const struct ScpModel *model,
                                       enum ScpSymbol symbol,
                                       double z1_re,
                                       double z1_im,
                                       double z2_re,
                                       double z2_im,
                                       double t,
                                       double *out_re,
                                       double *out_im);

/**
 * Energy of level m under the given quantization rule.
 *
 * # Safety
 * `out_energy` must be a valid pointer.
 */
enum ScpStatus scp_quantize(const struct ScpModel *model,
                            enum ScpRule rule,
                            size_t m,
                            double *out_energy);

/**
 * Diagonalizes the Weyl Hamiltonian in a sine basis of `size` functions.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum ScpStatus scp_eigen_solve(const struct ScpModel *model, size_t size, struct ScpEigen **out);

/**
 * Number of levels, and how many of the lowest are converged.
 *
 * # Safety
 * `eigen` must be a live handle; outputs may be null.
 */
enum ScpStatus scp_eigen_count(const struct ScpEigen *eigen,
                               size_t *out_total,
                               size_t *out_trusted);

/**
 * Copies the lowest `len` energies (ascending) into `buf`.
 *
 * # Safety
 * `buf` must be valid for `len` doubles.
 */
enum ScpStatus scp_eigen_energies(const struct ScpEigen *eigen, double *buf, size_t len);

/**
 * # Safety
 * `eigen` must come from `scp_eigen_solve` and not be used again.
 */
void scp_eigen_destroy(struct ScpEigen *eigen);

/**
 * Stationary-phase value of ∫g e^{if/ħ}dx from derivatives at the stationary
 * point: `f` holds f..f⁗ (5 values), `g` holds g, g′, g″. `out` receives
 * [Re A0, Im A0, R, Re A, Im A] with A = A0(1 + iħR).
 *
 * # Safety
 * `f` must hold 5 doubles, `g` 3, `out` 5.
 */
enum ScpStatus scp_spa(const double *f, const double *g, double hbar, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SCPROP_H */
