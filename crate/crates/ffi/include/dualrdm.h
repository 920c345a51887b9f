#ifndef DUALRDM_H
#define DUALRDM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Condition bits for [`DualrdmSolveOptions::conditions`].
 */
#define DUALRDM_CONDITION_P 1

#define DUALRDM_CONDITION_Q 2

#define DUALRDM_CONDITION_G 4

/**
 * Status codes; the nonzero values match the command-line exit codes where they overlap.
 */
typedef enum DualrdmStatus {
  DUALRDM_STATUS_OK = 0,
  DUALRDM_STATUS_NULL_POINTER = 1,
  DUALRDM_STATUS_INVALID_INPUT = 2,
  DUALRDM_STATUS_NOT_CONVERGED = 3,
  DUALRDM_STATUS_NUMERICAL = 4,
  DUALRDM_STATUS_PANIC = 5,
} DualrdmStatus;

/**
 * Why the outer iteration stopped.
 */
typedef enum DualrdmStop {
  DUALRDM_STOP_SLOPE_TEST = 0,
  DUALRDM_STOP_ZERO_DISTANCE = 1,
  DUALRDM_STOP_START_AT_ZERO = 2,
} DualrdmStop;

/**
 * Opaque integral set together with its reduced Hamiltonian.
 */
typedef struct DualrdmSystem DualrdmSystem;

/**
 * Solver settings. Obtain defaults from [`dualrdm_solve_options_default`].
 */
typedef struct DualrdmSolveOptions {
  /**
   * Use `mu0` instead of the Aufbau starting value.
   */
  bool has_mu0;
  double mu0;
  double damping;
  double epsilon;
  size_t max_outer;
  /**
   * Absolute gradient tolerance; zero or negative selects the default.
   */
  double tol_g;
  size_t max_inner;
  size_t memory;
  /**
   * Bitwise or of `DUALRDM_CONDITION_*`; must include P.
   */
  uint32_t conditions;
  bool confirm;
} DualrdmSolveOptions;

typedef struct DualrdmSolution {
  /**
   * Lower bound in the integrals' energy unit, core energy included.
   */
  double energy;
  double mu_star;
  size_t outer_iterations;
  size_t refinements;
  size_t inner_iterations;
  uint32_t stop;
} DualrdmSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Loads an FCIDUMP file. `path` is a NUL-terminated UTF-8 string.
 */
enum DualrdmStatus dualrdm_system_from_fcidump(const char *path, struct DualrdmSystem **out);

/**
 * Two-site Hubbard model at half filling.
 */
enum DualrdmStatus dualrdm_system_hubbard_dimer(double t, double u, struct DualrdmSystem **out);

/**
 * Seeded random integrals over `n_orbitals` spin orbitals (even).
 */
enum DualrdmStatus dualrdm_system_random(uint64_t seed,
                                         size_t n_orbitals,
                                         size_t n_electrons,
                                         double scale,
                                         struct DualrdmSystem **out);

/**
 * Releases a system; null is ignored.
 */
void dualrdm_system_free(struct DualrdmSystem *system);

/**
 * Spin orbitals of the system, 0 for null.
 */
size_t dualrdm_system_n_orbitals(const struct DualrdmSystem *system);

/**
 * Electrons of the system, 0 for null.
 */
size_t dualrdm_system_n_electrons(const struct DualrdmSystem *system);

struct DualrdmSolveOptions dualrdm_solve_options_default(void);

/**
 * Computes the lower bound. `options` may be null for defaults.
 */
enum DualrdmStatus dualrdm_solve(const struct DualrdmSystem *system,
                                 const struct DualrdmSolveOptions *options,
                                 struct DualrdmSolution *out);

/**
 * Full-CI ground-state energy, core energy included.
 */
enum DualrdmStatus dualrdm_fci_energy(const struct DualrdmSystem *system, double *out);

/**
 * Samples `δ` and `δ′` at `n` shifts. Points whose projection failed are written as NaN;
 * the call still returns OK when at least one point succeeded.
 */
enum DualrdmStatus dualrdm_sample_curve(const struct DualrdmSystem *system,
                                        const struct DualrdmSolveOptions *options,
                                        const double *mu,
                                        size_t n,
                                        double *delta_out,
                                        double *derivative_out);

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated, truncated to
 * `len`) and returns the length needed including the terminator. `buf` may be null to
 * query the length.
 */
size_t dualrdm_last_error_message(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *dualrdm_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DUALRDM_H */
