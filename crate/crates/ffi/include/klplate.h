#ifndef KLPLATE_H
#define KLPLATE_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum KlpStatus {
  KLP_STATUS_OK = 0,
  KLP_STATUS_NULL_POINTER = 1,
  KLP_STATUS_INVALID_UTF8 = 2,
  KLP_STATUS_CONFIG = 3,
  KLP_STATUS_INVALID = 4,
  KLP_STATUS_INSTABILITY = 5,
  KLP_STATUS_SOLVER = 6,
  KLP_STATUS_NO_CONVERGENCE = 7,
  KLP_STATUS_NO_DYNAMICS = 8,
  KLP_STATUS_IO = 9,
  KLP_STATUS_OUT_OF_RANGE = 10,
  KLP_STATUS_PANIC = 11,
} KlpStatus;

/**
 * Eigenpairs from a modal solve.
 */
typedef struct KlpModes KlpModes;

/**
 * A running simulation.
 */
typedef struct KlpSimulation KlpSimulation;

/**
 * Plate coefficients, field for field the library's `PlateParams`.
 */
typedef struct KlpPlateParams {
  double rho_h;
  double k0;
  double tension;
  double d;
  double k1;
  double t1;
  double nu;
} KlpPlateParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Static description of a status code.
 */
const char *klp_status_message(enum KlpStatus status);

/**
 * Message of the last failed call on this thread; empty if none. The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *klp_last_error(void);

/**
 * Largest root modulus of the predictor-corrector characteristic
 * polynomial at `z = re + i im`.
 */
double klp_pc22_amplification(double re, double im);

/**
 * Stable predictor-corrector step on the `n1 x n2` grid of the rectangle
 * `[x0, x1] x [y0, y1]`.
 *
 * # Safety
 * `params` must point to a valid `KlpPlateParams`; `out` must be writable.
 */
enum KlpStatus klp_stable_dt(const struct KlpPlateParams *params,
                             double x0,
                             double x1,
                             double y0,
                             double y1,
                             size_t n1,
                             size_t n2,
                             double csf,
                             double *out);

/**
 * Build a simulation from an experiment configuration (JSON text) and
 * apply its initial conditions.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable. On
 * success `*out` owns a handle to release with `klp_simulation_free`.
 */
enum KlpStatus klp_simulation_from_json(const char *json, struct KlpSimulation **out);

/**
 * Release a simulation; null is ignored.
 *
 * # Safety
 * `sim` must be null or a handle from `klp_simulation_from_json` not yet freed.
 */
void klp_simulation_free(struct KlpSimulation *sim);

/**
 * Take `steps` time steps. On failure the state is left at the last
 * completed step.
 *
 * # Safety
 * `sim` must be a live handle.
 */
enum KlpStatus klp_simulation_advance(struct KlpSimulation *sim, size_t steps);

/**
 * Current time, or NaN for a null handle.
 *
 * # Safety
 * `sim` must be null or a live handle.
 */
double klp_simulation_time(const struct KlpSimulation *sim);

/**
 * Time step, or NaN for a null handle.
 *
 * # Safety
 * `sim` must be null or a live handle.
 */
double klp_simulation_dt(const struct KlpSimulation *sim);

/**
 * Grid points per direction.
 *
 * # Safety
 * `sim` must be a live handle; `n1`, `n2` must be writable.
 */
enum KlpStatus klp_simulation_grid_shape(const struct KlpSimulation *sim, size_t *n1, size_t *n2);

/**
 * Copy the displacement at the physical grid points, first index
 * fastest, into `buf` of length `len >= n1 * n2`.
 *
 * # Safety
 * `sim` must be a live handle; `buf` must hold `len` writable doubles.
 */
enum KlpStatus klp_simulation_copy_displacement(const struct KlpSimulation *sim,
                                                double *buf,
                                                size_t len);

/**
 * Displacement interpolated at `(x, y)`.
 *
 * # Safety
 * `sim` must be a live handle; `out` must be writable.
 */
enum KlpStatus klp_simulation_probe(const struct KlpSimulation *sim,
                                    double x,
                                    double y,
                                    double *out);

/**
 * Lowest `k` eigenpairs for the mesh, plate and boundary of a
 * configuration, to its `study.eig_tol`.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable. On
 * success `*out` owns a handle to release with `klp_modes_free`.
 */
enum KlpStatus klp_modes_solve_json(const char *json, size_t k, struct KlpModes **out);

/**
 * Release a mode set; null is ignored.
 *
 * # Safety
 * `modes` must be null or a handle from `klp_modes_solve_json` not yet freed.
 */
void klp_modes_free(struct KlpModes *modes);

/**
 * Number of modes held, 0 for a null handle.
 *
 * # Safety
 * `modes` must be null or a live handle.
 */
size_t klp_modes_count(const struct KlpModes *modes);

/**
 * Natural frequency (Hz) of mode `i`, ascending from 0.
 *
 * # Safety
 * `modes` must be a live handle; `out` must be writable.
 */
enum KlpStatus klp_modes_frequency(const struct KlpModes *modes, size_t i, double *out);

/**
 * Eigenvalue of mode `i`.
 *
 * # Safety
 * `modes` must be a live handle; `out` must be writable.
 */
enum KlpStatus klp_modes_eigenvalue(const struct KlpModes *modes, size_t i, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KLPLATE_H */
