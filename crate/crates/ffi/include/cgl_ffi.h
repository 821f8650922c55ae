#ifndef CGL_FFI_H
#define CGL_FFI_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CglStatus {
  CGL_STATUS_OK = 0,
  CGL_STATUS_INVALID_ARGUMENT = 1,
  CGL_STATUS_NULL_POINTER = 2,
  CGL_STATUS_LATTICE_MISMATCH = 3,
  CGL_STATUS_RESOURCE = 4,
  CGL_STATUS_NUMERICAL_ABORT = 5,
  CGL_STATUS_IO = 6,
  CGL_STATUS_INTERNAL = 7,
} CglStatus;

typedef struct CglField CglField;

typedef struct CglLattice CglLattice;

typedef struct CglTable CglTable;

typedef struct CglTrajectory CglTrajectory;

/**
 * Equation parameters; see `cgl_core::dynamics::EquationParams`.
 */
typedef struct CglParams {
  double epsilon;
  double mu;
  double b;
  double c;
  uint32_t m;
  uint32_t p;
  uint32_t q;
} CglParams;

typedef struct CglStepControl {
  double cfl_fraction;
  double dtau_max;
  double checkpoint_dt;
  bool self_check;
} CglStepControl;

/**
 * A complex amplitude, layout-compatible with C99 `double _Complex`.
 */
typedef struct CglComplex {
  double re;
  double im;
} CglComplex;

typedef struct CglDivisorStats {
  /**
   * False when every divisor vanishes (gap is infinite).
   */
  bool has_gap;
  uint64_t gap;
  uint64_t max_freq;
} CglDivisorStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the last failure on this thread; empty after success.
 * The pointer stays valid until the next call into this library on the thread.
 */
const char *cgl_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *cgl_version(void);

/**
 * Default parameters: `epsilon = 0.1`, `c = 1`, `m = p = q = 1`, others zero.
 */
struct CglParams cgl_params_default(void);

/**
 * Default step control with 64 checkpoints over `horizon`.
 */
struct CglStepControl cgl_step_control_default(double horizon);

/**
 * # Safety
 * `out` must be valid for writes.
 */
enum CglStatus cgl_lattice_new(size_t dim, size_t cutoff, struct CglLattice **out);

/**
 * # Safety
 * `lattice` must be null or a handle from `cgl_lattice_new` not yet freed.
 */
void cgl_lattice_free(struct CglLattice *lattice);

/**
 * Number of modes, or 0 for a null handle.
 *
 * # Safety
 * `lattice` must be null or a live handle.
 */
size_t cgl_lattice_len(const struct CglLattice *lattice);

/**
 * `lambda = |k|^2` of the mode at `index`.
 *
 * # Safety
 * `lattice` must be a live handle and `out` valid for writes.
 */
enum CglStatus cgl_lattice_lambda(const struct CglLattice *lattice, size_t index, int64_t *out);

/**
 * Index of the mode with coordinates `coords[0..dim]`.
 *
 * # Safety
 * `coords` must point to `dim` readable integers; `out` valid for writes.
 */
enum CglStatus cgl_lattice_index_of(const struct CglLattice *lattice,
                                    const int32_t *coords,
                                    size_t dim,
                                    size_t *out);

/**
 * Creates a field from `len` amplitudes in lattice order (`len` must equal
 * the lattice size).
 *
 * # Safety
 * `amps` must point to `len` readable values; `out` valid for writes.
 */
enum CglStatus cgl_field_new(const struct CglLattice *lattice,
                             const struct CglComplex *amps,
                             size_t len,
                             struct CglField **out);

/**
 * # Safety
 * `field` must be null or a live handle.
 */
void cgl_field_free(struct CglField *field);

/**
 * Number of amplitudes, or 0 for a null handle.
 *
 * # Safety
 * `field` must be null or a live handle.
 */
size_t cgl_field_len(const struct CglField *field);

/**
 * Copies the amplitudes into `out[0..len]`; `len` must equal the field size.
 *
 * # Safety
 * `out` must be valid for `len` writes.
 */
enum CglStatus cgl_field_amps(const struct CglField *field, struct CglComplex *out, size_t len);

/**
 * `|v|_s`.
 *
 * # Safety
 * `field` must be a live handle and `out` valid for writes.
 */
enum CglStatus cgl_field_h_norm(const struct CglField *field, double s, double *out);

/**
 * Actions `|v_k|^2 / 2` into `out[0..len]`.
 *
 * # Safety
 * `out` must be valid for `len` writes.
 */
enum CglStatus cgl_field_actions(const struct CglField *field, double *out, size_t len);

/**
 * Builds the resonant table of degree `n`; `budget = 0` selects the default.
 *
 * # Safety
 * `lattice` must be a live handle; `out` valid for writes.
 */
enum CglStatus cgl_table_build(const struct CglLattice *lattice,
                               size_t n,
                               uint64_t budget,
                               struct CglTable **out);

/**
 * # Safety
 * `path` must be a NUL-terminated string; `out` valid for writes.
 */
enum CglStatus cgl_table_load(const char *path, struct CglTable **out);

/**
 * # Safety
 * `table` must be a live handle; `path` a NUL-terminated string.
 */
enum CglStatus cgl_table_save(const struct CglTable *table, const char *path);

/**
 * # Safety
 * `table` must be null or a live handle.
 */
void cgl_table_free(struct CglTable *table);

/**
 * Total number of resonant tuples, or 0 for a null handle.
 *
 * # Safety
 * `table` must be null or a live handle.
 */
uint64_t cgl_table_total(const struct CglTable *table);

/**
 * Number of resonant tuples for the mode at `target`.
 *
 * # Safety
 * `table` must be a live handle; `out` valid for writes.
 */
enum CglStatus cgl_table_count(const struct CglTable *table, size_t target, uint64_t *out);

/**
 * # Safety
 * `table` must be a live handle; `out` valid for writes.
 */
enum CglStatus cgl_table_divisor(const struct CglTable *table, struct CglDivisorStats *out);

/**
 * Full nonlinearity `P(v)` by dealiased collocation.
 *
 * # Safety
 * `field` and `params` must be valid; `out` valid for writes.
 */
enum CglStatus cgl_nonlinearity(const struct CglField *field,
                                const struct CglParams *params,
                                struct CglField **out);

/**
 * Resonant field `R(v) = b R(v, p) + ic R(v, q)` from degree-`p` and degree-`q` tables.
 *
 * # Safety
 * All handles must be live; `out` valid for writes.
 */
enum CglStatus cgl_resonant_field(const struct CglField *field,
                                  const struct CglTable *table_p,
                                  const struct CglTable *table_q,
                                  const struct CglParams *params,
                                  struct CglField **out);

/**
 * Integrates the full system. Tables are optional (pass null for both); when
 * given, `H_res` is recorded at checkpoints. On a numerical abort `*out`
 * receives the trajectory up to the last good checkpoint and the status is
 * `CGL_STATUS_NUMERICAL_ABORT`.
 *
 * # Safety
 * All non-null pointers must be valid; `out` valid for writes.
 */
enum CglStatus cgl_integrate_full(const struct CglField *datum,
                                  const struct CglParams *params,
                                  const struct CglStepControl *control,
                                  double horizon,
                                  const struct CglTable *table_p,
                                  const struct CglTable *table_q,
                                  struct CglTrajectory **out);

/**
 * Integrates the effective system; both tables are required.
 *
 * # Safety
 * All pointers must be valid; `out` valid for writes.
 */
enum CglStatus cgl_integrate_effective(const struct CglField *datum,
                                       const struct CglParams *params,
                                       const struct CglStepControl *control,
                                       double horizon,
                                       const struct CglTable *table_p,
                                       const struct CglTable *table_q,
                                       struct CglTrajectory **out);

/**
 * # Safety
 * `traj` must be null or a live handle.
 */
void cgl_trajectory_free(struct CglTrajectory *traj);

/**
 * Number of checkpoints (including the initial datum), or 0 for null.
 *
 * # Safety
 * `traj` must be null or a live handle.
 */
size_t cgl_trajectory_len(const struct CglTrajectory *traj);

/**
 * Slow time of checkpoint `index`.
 *
 * # Safety
 * `traj` must be a live handle; `out` valid for writes.
 */
enum CglStatus cgl_trajectory_tau(const struct CglTrajectory *traj, size_t index, double *out);

/**
 * New field handle holding the state at checkpoint `index`.
 *
 * # Safety
 * `traj` must be a live handle; `out` valid for writes.
 */
enum CglStatus cgl_trajectory_field(const struct CglTrajectory *traj,
                                    size_t index,
                                    struct CglField **out);

/**
 * `sup_tau |I(v(tau)) - I(a(tau))|~_{s1}` over aligned checkpoints.
 *
 * # Safety
 * Both handles must be live; `out_sup` valid for writes.
 */
enum CglStatus cgl_compare_actions(const struct CglTrajectory *full,
                                   const struct CglTrajectory *effective,
                                   double s1,
                                   double *out_sup);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CGL_FFI_H */
