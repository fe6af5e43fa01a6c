#ifndef TDHO_H
#define TDHO_H

/* Generated by cbindgen from the tdho-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// ABI revision; bump on any breaking change to this header.
#define TDHO_ABI_VERSION 1

// Breadth of the cyclic-solution set in a window.
typedef enum TdhoCyclicKind {
  TdhoCyclicNone = 0,
  TdhoCyclicDenumerable = 1,
  TdhoCyclicAllDefiniteParity = 2,
  TdhoCyclicAllStates = 3,
} TdhoCyclicKind;

// Status codes returned by every fallible call.
typedef enum TdhoStatus {
  TdhoOk = 0,
  TdhoNullPointer = 1,
  TdhoInvalidArgument = 2,
  TdhoNumericalFailure = 3,
  TdhoInternalPanic = 4,
} TdhoStatus;

// Opaque Hamiltonian profile handle.
typedef struct TdhoProfile TdhoProfile;

// Opaque trajectory handle.
typedef struct TdhoTrajectory TdhoTrajectory;

// One stored trajectory node: time, invariant vector, the 3x3 evolution
// matrix (row-major), the 2x2 quadrature matrix (row-major), and the two
// phase accumulators.
typedef struct TdhoNode {
  double t;
  double e[3];
  double e_mat[9];
  double q_mat[4];
  double a1;
  double a2;
} TdhoNode;

// Phase functionals of a window for a state with `u(0) = u0 e0`.
typedef struct TdhoPhases {
  double alpha_tau;
  double hannay;
  double dynamical;
  double total;
  double geometric;
  double u0;
} TdhoPhases;

// Cyclic-window verdict: kind, the window phase (NaN when not defined),
// the special-window integer (i64::MIN when absent), the fixed vector
// and its scale-free square, and the boundary flag.
typedef struct TdhoVerdict {
  enum TdhoCyclicKind kind;
  double alpha_tau;
  int64_t n_special;
  double eta[3];
  double eta_sq;
  bool boundary;
} TdhoVerdict;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// ABI revision of this library.
uint32_t tdho_abi_version(void);

// Copies the most recent error message of the current thread into `buf`
// (NUL-terminated, truncated to `cap`); returns the full message length.
//
// # Safety
// `buf` must point to `cap` writable bytes (or be null to query the
// length only).
size_t tdho_last_error(char *buf, size_t cap);

// Builds an analytic-family profile. `family` is the ASCII letter
// 'A'..'D'; the modulation phase is linear with the given rate; `t_max`
// bounds the integration window.
//
// # Safety
// `out` must be a valid pointer; the handle must be released with
// [`tdho_profile_free`].
enum TdhoStatus tdho_profile_new_family(char family,
                                        double n1,
                                        double n3,
                                        double lambda,
                                        double rate,
                                        double t_max,
                                        struct TdhoProfile **out);

// Builds a tabulated profile from CSV text with header
// `t,omega,n1,n2,n3`.
//
// # Safety
// `csv_text` must be a NUL-terminated UTF-8 string; `out` as above.
enum TdhoStatus tdho_profile_new_csv(const char *csv_text, struct TdhoProfile **out);

// Releases a profile handle (null-safe).
//
// # Safety
// `profile` must come from a `tdho_profile_new_*` call and not be used
// afterwards.
void tdho_profile_free(struct TdhoProfile *profile);

// End of the profile's valid time range.
//
// # Safety
// `profile` must be a live handle.
double tdho_profile_t_max(const struct TdhoProfile *profile);

// Integrates the flow over `[0, t_end]` on a uniform grid of `nodes`
// points from the initial chart `(xi0, phi0)`. `step_target` <= 0 picks
// the default step policy.
//
// # Safety
// `profile` must be a live handle; `out` must be valid; the trajectory
// must be released with [`tdho_trajectory_free`].
enum TdhoStatus tdho_integrate(const struct TdhoProfile *profile,
                               double xi0,
                               double phi0,
                               double t_end,
                               size_t nodes,
                               double step_target,
                               struct TdhoTrajectory **out);

// Releases a trajectory handle (null-safe).
//
// # Safety
// `traj` must come from [`tdho_integrate`] and not be used afterwards.
void tdho_trajectory_free(struct TdhoTrajectory *traj);

// Number of stored nodes.
//
// # Safety
// `traj` must be a live handle.
size_t tdho_trajectory_len(const struct TdhoTrajectory *traj);

// Copies node `index` into `out`.
//
// # Safety
// `traj` must be a live handle and `out` a valid pointer.
enum TdhoStatus tdho_trajectory_node(const struct TdhoTrajectory *traj,
                                     size_t index,
                                     struct TdhoNode *out);

// Phase functionals at the final node for a state with `u(0) = u0 e0`.
//
// # Safety
// `traj` must be a live handle and `out` a valid pointer.
enum TdhoStatus tdho_phases(const struct TdhoTrajectory *traj, double u0, struct TdhoPhases *out);

// Cyclic-window verdict at the final node of the trajectory. The window
// phase `alpha_tau` is recomputed by re-integration where the verdict
// needs it; it is NaN for windows without cyclic solutions.
//
// # Safety
// `traj` must be a live handle and `out` a valid pointer.
enum TdhoStatus tdho_cyclic_verdict(const struct TdhoTrajectory *traj, struct TdhoVerdict *out);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* TDHO_H */
