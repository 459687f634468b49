#ifndef SSE_H
#define SSE_H

#pragma once

#include <stddef.h>
#include <stdint.h>

// Result code of every fallible entry point.
typedef enum SseStatus {
  SSE_STATUS_OK = 0,
  // A required pointer argument was null.
  SSE_STATUS_NULL_POINTER = 1,
  // An argument violated a precondition.
  SSE_STATUS_INVALID_ARGUMENT = 2,
  // The computation failed or produced non-finite values.
  SSE_STATUS_NUMERICAL = 3,
  // An internal panic was caught at the boundary.
  SSE_STATUS_PANIC = 4,
} SseStatus;

// Assembled P1 system on a uniform mesh.
typedef struct SseFemSystem SseFemSystem;

// Sampled truncated Wiener path.
typedef struct SsePath SsePath;

// Model problem with its noise description.
typedef struct SseProblem SseProblem;

// Statistics returned by [`sse_strong_error`].
typedef struct SseStrongError {
  double rms_re;
  double rms_im;
  double rms;
  double std_error;
  uintptr_t n_samples;
  uintptr_t excluded;
} SseStrongError;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or an empty string.
//
// The pointer stays valid until the next call into this library on the
// same thread.
const char *sse_last_error(void);

// Continuous Dirichlet eigenvalue `(jπ)²`, `j ≥ 1`.
//
// # Safety
// `out` must be null or point to writable memory for one `double`.
enum SseStatus sse_eigenvalue(uintptr_t j, double *out);

// Hilbert–Schmidt norm of `A^{θ/2} Q^{1/2}` truncated to `num_modes`.
//
// # Safety
// `out` must be null or point to writable memory for one `double`.
enum SseStatus sse_hs_norm(double theta, double s, uintptr_t num_modes, double *out);

// Assembles the system on a mesh with `num_cells` cells.
//
// # Safety
// `out` must be null or point to writable memory for one pointer. On
// success it receives a handle to release with [`sse_fem_system_free`].
enum SseStatus sse_fem_system_new(uintptr_t num_cells, struct SseFemSystem **out);

// Releases a system. Null is ignored.
//
// # Safety
// `system` must be null or a handle from [`sse_fem_system_new`] that has
// not been freed.
void sse_fem_system_free(struct SseFemSystem *system);

// Number of interior nodes, which is also the number of eigenvalues.
//
// # Safety
// `system` must be null or a live handle.
uintptr_t sse_fem_system_num_dofs(const struct SseFemSystem *system);

// Copies the discrete eigenvalues in increasing order into `out`.
//
// # Safety
// `system` must be a live handle and `out` must hold `len` doubles.
enum SseStatus sse_fem_system_eigenvalues(const struct SseFemSystem *system,
                                          double *out,
                                          uintptr_t len);

// Samples a path with `num_steps` steps on `[0, final_time]`.
//
// # Safety
// `out` must be null or point to writable memory for one pointer. On
// success it receives a handle to release with [`sse_path_free`].
enum SseStatus sse_path_sample(double s,
                               uintptr_t num_modes,
                               double final_time,
                               uintptr_t num_steps,
                               uint64_t seed,
                               uint64_t sample_index,
                               struct SsePath **out);

// New path whose steps are sums of `factor` consecutive steps of `path`.
//
// # Safety
// `path` must be a live handle; `out` as for [`sse_path_sample`].
enum SseStatus sse_path_coarsen(const struct SsePath *path, uintptr_t factor, struct SsePath **out);

// Number of steps and modes of a path. Either output may be null.
//
// # Safety
// `path` must be a live handle; non-null outputs must be writable.
enum SseStatus sse_path_shape(const struct SsePath *path,
                              uintptr_t *num_steps,
                              uintptr_t *num_modes);

// Copies the increments of step `step` of both processes.
//
// # Safety
// `path` must be a live handle; `dw1` and `dw2` must each hold `len`
// doubles, with `len` at least the number of modes.
enum SseStatus sse_path_increments(const struct SsePath *path,
                                   uintptr_t step,
                                   double *dw1,
                                   double *dw2,
                                   uintptr_t len);

// Releases a path. Null is ignored.
//
// # Safety
// `path` must be null or a live handle that has not been freed.
void sse_path_free(struct SsePath *path);

// Model problem with the built-in data, semilinear when `semilinear` is
// non-zero and linear additive otherwise.
//
// # Safety
// `out` must be null or point to writable memory for one pointer. On
// success it receives a handle to release with [`sse_problem_free`].
enum SseStatus sse_problem_new(double s,
                               uintptr_t num_modes,
                               double final_time,
                               int32_t semilinear,
                               struct SseProblem **out);

// Releases a problem. Null is ignored.
//
// # Safety
// `problem` must be null or a live handle that has not been freed.
void sse_problem_free(struct SseProblem *problem);

// Runs the scheme along `path` and writes the interior nodal values of
// the final state into `re` and `im`.
//
// # Safety
// All handles must be live; `re` and `im` must each hold `len` doubles,
// with `len` at least the number of interior nodes.
enum SseStatus sse_run_final(const struct SseProblem *problem,
                             const struct SseFemSystem *system,
                             const struct SsePath *path,
                             double *re,
                             double *im,
                             uintptr_t len);

// Monte Carlo strong error at `T` of the `(n_cells, n_steps)` scheme
// against the scheme at `(ref_cells, ref_steps)`, over coupled paths.
//
// # Safety
// `problem` must be a live handle and `out` must be writable.
enum SseStatus sse_strong_error(const struct SseProblem *problem,
                                uintptr_t n_cells,
                                uintptr_t n_steps,
                                uintptr_t ref_cells,
                                uintptr_t ref_steps,
                                uintptr_t n_samples,
                                uint64_t seed,
                                struct SseStrongError *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SSE_H */
