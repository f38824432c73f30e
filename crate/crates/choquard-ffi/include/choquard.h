/* C interface to the choquard ground-state toolkit. */

#ifndef CHOQUARD_H
#define CHOQUARD_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Call outcome.
 */
typedef enum ChoqStatus {
  /**
   * Success.
   */
  CHOQ_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  CHOQ_STATUS_NULL_ARGUMENT = 1,
  /**
   * A parameter violated its documented domain.
   */
  CHOQ_STATUS_INVALID_ARGUMENT = 2,
  /**
   * The operation is not defined for the given inputs (for example a
   * multi-term nonlinearity passed to the single-power solver).
   */
  CHOQ_STATUS_UNSUPPORTED = 3,
  /**
   * An internal invariant failed.
   */
  CHOQ_STATUS_INTERNAL_ERROR = 4,
} ChoqStatus;

/**
 * Termination status of a ground-state run.
 */
typedef enum ChoqSolveStatus {
  CHOQ_SOLVE_STATUS_CONVERGED = 0,
  CHOQ_SOLVE_STATUS_DEGENERATE_VANISHING = 1,
  CHOQ_SOLVE_STATUS_DEGENERATE_SPREADING = 2,
  CHOQ_SOLVE_STATUS_MAX_ITERS = 3,
} ChoqSolveStatus;

/**
 * Opaque periodic-box discretization.
 */
typedef struct ChoqGrid ChoqGrid;

/**
 * Opaque equation parameters (dimension, Riesz order, nonlinearity).
 */
typedef struct ChoqProblem ChoqProblem;

/**
 * Opaque solver result: the computed field plus residual certificates.
 */
typedef struct ChoqSolution ChoqSolution;

/**
 * Solver settings; obtain defaults from [`choq_solver_options_default`].
 */
typedef struct ChoqSolverOptions {
  unsigned long long max_iters;
  double tol_residual;
  double armijo_c;
  double armijo_shrink;
  unsigned long long recenter_every;
  double init_amplitude;
  double init_width;
  unsigned long long seed;
} ChoqSolverOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Static version string of the underlying crate, NUL-terminated; never
 * freed by the caller.
 */
const char *choq_version(void);

/**
 * Create a periodic-box grid: `dim` in {2, 3}, even `points_per_axis` >= 8,
 * positive `box_length`.
 *
 * # Safety
 * `out` must be a valid pointer; on success it receives a handle that must
 * be released with [`choq_grid_free`].
 */
enum ChoqStatus choq_grid_new(uint32_t dim,
                              uint32_t points_per_axis,
                              double box_length,
                              struct ChoqGrid **out);

/**
 * # Safety
 * `grid` must be null or a handle from [`choq_grid_new`] not yet freed.
 */
void choq_grid_free(struct ChoqGrid *grid);

/**
 * Create equation parameters with the power-sum nonlinearity
 * `F(s) = sum_i coeffs[i] |s|^{exponents[i]} / exponents[i]`
 * (positive coefficients, exponents > 1, `0 < alpha < dim`).
 *
 * # Safety
 * `coeffs` and `exponents` must point to `n_terms` readable doubles; `out`
 * must be valid and receives a handle for [`choq_problem_free`].
 */
enum ChoqStatus choq_problem_new(uint32_t dim,
                                 double alpha,
                                 const double *coeffs,
                                 const double *exponents,
                                 uintptr_t n_terms,
                                 struct ChoqProblem **out);

/**
 * # Safety
 * `problem` must be null or a handle from [`choq_problem_new`] not yet freed.
 */
void choq_problem_free(struct ChoqProblem *problem);

/**
 * Whether the analytic existence hypotheses hold for the problem.
 *
 * # Safety
 * `problem` and `pass` must be valid pointers.
 */
enum ChoqStatus choq_hypothesis_pass(const struct ChoqProblem *problem, bool *pass);

/**
 * Existence range of power exponents for the given dimension and Riesz
 * order; `hi` receives +infinity when `dim` is 2.
 *
 * # Safety
 * `lo` and `hi` must be valid pointers.
 */
enum ChoqStatus choq_existence_range(uint32_t dim, double alpha, double *lo, double *hi);

/**
 * Default solver settings.
 */
struct ChoqSolverOptions choq_solver_options_default(void);

/**
 * Compute a ground-state candidate. Degenerate or unconverged runs still
 * produce a solution handle; inspect [`choq_solution_status`].
 *
 * # Safety
 * `problem`, `grid`, `options` and `out` must be valid pointers; on success
 * `out` receives a handle for [`choq_solution_free`].
 */
enum ChoqStatus choq_solve(const struct ChoqProblem *problem,
                           const struct ChoqGrid *grid,
                           const struct ChoqSolverOptions *options,
                           struct ChoqSolution **out);

/**
 * # Safety
 * `solution` must be null or a handle from [`choq_solve`] not yet freed.
 */
void choq_solution_free(struct ChoqSolution *solution);

/**
 * Energy of the computed state.
 *
 * # Safety
 * `solution` and `out` must be valid pointers.
 */
enum ChoqStatus choq_solution_energy(const struct ChoqSolution *solution, double *out);

/**
 * Relative Euler-Lagrange residual.
 *
 * # Safety
 * `solution` and `out` must be valid pointers.
 */
enum ChoqStatus choq_solution_residual_rel(const struct ChoqSolution *solution, double *out);

/**
 * Relative Pohozaev defect.
 *
 * # Safety
 * `solution` and `out` must be valid pointers.
 */
enum ChoqStatus choq_solution_pohozaev_rel(const struct ChoqSolution *solution, double *out);

/**
 * Relative Nehari defect.
 *
 * # Safety
 * `solution` and `out` must be valid pointers.
 */
enum ChoqStatus choq_solution_nehari_rel(const struct ChoqSolution *solution, double *out);

/**
 * Lagrange multiplier removed by the amplitude rescale.
 *
 * # Safety
 * `solution` and `out` must be valid pointers.
 */
enum ChoqStatus choq_solution_multiplier(const struct ChoqSolution *solution, double *out);

/**
 * Iterations consumed by the reported attempt.
 *
 * # Safety
 * `solution` and `out` must be valid pointers.
 */
enum ChoqStatus choq_solution_iterations(const struct ChoqSolution *solution,
                                         unsigned long long *out);

/**
 * Termination status of the run.
 *
 * # Safety
 * `solution` and `out` must be valid pointers.
 */
enum ChoqStatus choq_solution_status(const struct ChoqSolution *solution,
                                     enum ChoqSolveStatus *out);

/**
 * Number of field samples (M^N).
 *
 * # Safety
 * `solution` and `out` must be valid pointers.
 */
enum ChoqStatus choq_solution_num_values(const struct ChoqSolution *solution, uintptr_t *out);

/**
 * Copy the row-major field samples into a caller buffer of exactly
 * [`choq_solution_num_values`] doubles.
 *
 * # Safety
 * `solution` must be valid and `buffer` must point to `len` writable
 * doubles.
 */
enum ChoqStatus choq_solution_values(const struct ChoqSolution *solution,
                                     double *buffer,
                                     uintptr_t len);

/**
 * Evaluate the energy functional on caller-provided samples (row-major,
 * length M^N for the given grid).
 *
 * # Safety
 * `problem` and `grid` must be valid handles, `values` must point to `len`
 * readable doubles, `out` must be valid.
 */
enum ChoqStatus choq_energy(const struct ChoqProblem *problem,
                            const struct ChoqGrid *grid,
                            const double *values,
                            uintptr_t len,
                            double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CHOQUARD_H */
