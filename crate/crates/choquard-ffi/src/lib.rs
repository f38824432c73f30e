//! C ABI for the ground-state toolkit.
//!
//! The surface follows the usual opaque-handle pattern: constructors return
//! `CHOQ_STATUS_OK` and write a pointer through an out-parameter, every
//! handle has a matching `_free`, and scalar results are written through
//! out-parameters so that every call reports a [`ChoqStatus`]. The build
//! script generates `include/choquard.h` with cbindgen.

use choquard::grid::{Field, GridSpec};
use choquard::model::{energy, hypothesis_check, Nonlinearity, ProblemSpec};
use choquard::solver::{minimize_ground_state, SolveStatus, Solution, SolverConfig};
use choquard::sweep::existence_range;
use std::ffi::{c_char, c_double, c_ulonglong};
use std::panic::{catch_unwind, AssertUnwindSafe};

/// Call outcome.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ChoqStatus {
    /// Success.
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A parameter violated its documented domain.
    InvalidArgument = 2,
    /// The operation is not defined for the given inputs (for example a
    /// multi-term nonlinearity passed to the single-power solver).
    Unsupported = 3,
    /// An internal invariant failed.
    InternalError = 4,
}

/// Termination status of a ground-state run.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ChoqSolveStatus {
    Converged = 0,
    DegenerateVanishing = 1,
    DegenerateSpreading = 2,
    MaxIters = 3,
}

impl From<SolveStatus> for ChoqSolveStatus {
    fn from(s: SolveStatus) -> Self {
        match s {
            SolveStatus::Converged => ChoqSolveStatus::Converged,
            SolveStatus::DegenerateVanishing => ChoqSolveStatus::DegenerateVanishing,
            SolveStatus::DegenerateSpreading => ChoqSolveStatus::DegenerateSpreading,
            SolveStatus::MaxIters => ChoqSolveStatus::MaxIters,
        }
    }
}

/// Opaque periodic-box discretization.
pub struct ChoqGrid(GridSpec);

/// Opaque equation parameters (dimension, Riesz order, nonlinearity).
pub struct ChoqProblem(ProblemSpec);

/// Opaque solver result: the computed field plus residual certificates.
pub struct ChoqSolution {
    inner: Solution,
}

/// Solver settings; obtain defaults from [`choq_solver_options_default`].
#[repr(C)]
#[derive(Clone, Copy)]
pub struct ChoqSolverOptions {
    pub max_iters: c_ulonglong,
    pub tol_residual: c_double,
    pub armijo_c: c_double,
    pub armijo_shrink: c_double,
    pub recenter_every: c_ulonglong,
    pub init_amplitude: c_double,
    pub init_width: c_double,
    pub seed: c_ulonglong,
}

impl From<ChoqSolverOptions> for SolverConfig {
    fn from(o: ChoqSolverOptions) -> Self {
        SolverConfig {
            max_iters: o.max_iters as usize,
            tol_residual: o.tol_residual,
            armijo_c: o.armijo_c,
            armijo_shrink: o.armijo_shrink,
            recenter_every: o.recenter_every as usize,
            init_amplitude: o.init_amplitude,
            init_width: o.init_width,
            seed: o.seed,
        }
    }
}

fn map_error(e: &choquard::Error) -> ChoqStatus {
    match e {
        choquard::Error::MultiTermNonlinearity => ChoqStatus::Unsupported,
        choquard::Error::InvalidParameter { .. }
        | choquard::Error::GridMismatch
        | choquard::Error::KernelMismatch
        | choquard::Error::DirectSumTooLarge { .. }
        | choquard::Error::DegenerateField(_) => ChoqStatus::InvalidArgument,
        _ => ChoqStatus::InternalError,
    }
}

fn guarded(body: impl FnOnce() -> ChoqStatus) -> ChoqStatus {
    catch_unwind(AssertUnwindSafe(body)).unwrap_or(ChoqStatus::InternalError)
}

/// Static version string of the underlying crate, NUL-terminated; never
/// freed by the caller.
#[no_mangle]
pub extern "C" fn choq_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Create a periodic-box grid: `dim` in {2, 3}, even `points_per_axis` >= 8,
/// positive `box_length`.
///
/// # Safety
/// `out` must be a valid pointer; on success it receives a handle that must
/// be released with [`choq_grid_free`].
#[no_mangle]
pub unsafe extern "C" fn choq_grid_new(
    dim: u32,
    points_per_axis: u32,
    box_length: c_double,
    out: *mut *mut ChoqGrid,
) -> ChoqStatus {
    if out.is_null() {
        return ChoqStatus::NullArgument;
    }
    guarded(|| match choquard::make_grid(dim as usize, points_per_axis as usize, box_length) {
        Ok(grid) => {
            unsafe { *out = Box::into_raw(Box::new(ChoqGrid(grid))) };
            ChoqStatus::Ok
        }
        Err(e) => map_error(&e),
    })
}

/// # Safety
/// `grid` must be null or a handle from [`choq_grid_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn choq_grid_free(grid: *mut ChoqGrid) {
    if !grid.is_null() {
        drop(unsafe { Box::from_raw(grid) });
    }
}

/// Create equation parameters with the power-sum nonlinearity
/// `F(s) = sum_i coeffs[i] |s|^{exponents[i]} / exponents[i]`
/// (positive coefficients, exponents > 1, `0 < alpha < dim`).
///
/// # Safety
/// `coeffs` and `exponents` must point to `n_terms` readable doubles; `out`
/// must be valid and receives a handle for [`choq_problem_free`].
#[no_mangle]
pub unsafe extern "C" fn choq_problem_new(
    dim: u32,
    alpha: c_double,
    coeffs: *const c_double,
    exponents: *const c_double,
    n_terms: usize,
    out: *mut *mut ChoqProblem,
) -> ChoqStatus {
    if out.is_null() || coeffs.is_null() || exponents.is_null() {
        return ChoqStatus::NullArgument;
    }
    guarded(|| {
        let c = unsafe { std::slice::from_raw_parts(coeffs, n_terms) };
        let p = unsafe { std::slice::from_raw_parts(exponents, n_terms) };
        let terms: Vec<(f64, f64)> = c.iter().copied().zip(p.iter().copied()).collect();
        let built = Nonlinearity::new(terms)
            .and_then(|nl| ProblemSpec::new(dim as usize, alpha, nl));
        match built {
            Ok(spec) => {
                unsafe { *out = Box::into_raw(Box::new(ChoqProblem(spec))) };
                ChoqStatus::Ok
            }
            Err(e) => map_error(&e),
        }
    })
}

/// # Safety
/// `problem` must be null or a handle from [`choq_problem_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn choq_problem_free(problem: *mut ChoqProblem) {
    if !problem.is_null() {
        drop(unsafe { Box::from_raw(problem) });
    }
}

/// Whether the analytic existence hypotheses hold for the problem.
///
/// # Safety
/// `problem` and `pass` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn choq_hypothesis_pass(
    problem: *const ChoqProblem,
    pass: *mut bool,
) -> ChoqStatus {
    if problem.is_null() || pass.is_null() {
        return ChoqStatus::NullArgument;
    }
    guarded(|| {
        unsafe { *pass = hypothesis_check(&(*problem).0).pass };
        ChoqStatus::Ok
    })
}

/// Existence range of power exponents for the given dimension and Riesz
/// order; `hi` receives +infinity when `dim` is 2.
///
/// # Safety
/// `lo` and `hi` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn choq_existence_range(
    dim: u32,
    alpha: c_double,
    lo: *mut c_double,
    hi: *mut c_double,
) -> ChoqStatus {
    if lo.is_null() || hi.is_null() {
        return ChoqStatus::NullArgument;
    }
    guarded(|| match existence_range(dim as usize, alpha) {
        Ok((a, b)) => {
            unsafe {
                *lo = a;
                *hi = b;
            }
            ChoqStatus::Ok
        }
        Err(e) => map_error(&e),
    })
}

/// Default solver settings.
#[no_mangle]
pub extern "C" fn choq_solver_options_default() -> ChoqSolverOptions {
    let d = SolverConfig::default();
    ChoqSolverOptions {
        max_iters: d.max_iters as c_ulonglong,
        tol_residual: d.tol_residual,
        armijo_c: d.armijo_c,
        armijo_shrink: d.armijo_shrink,
        recenter_every: d.recenter_every as c_ulonglong,
        init_amplitude: d.init_amplitude,
        init_width: d.init_width,
        seed: d.seed,
    }
}

/// Compute a ground-state candidate. Degenerate or unconverged runs still
/// produce a solution handle; inspect [`choq_solution_status`].
///
/// # Safety
/// `problem`, `grid`, `options` and `out` must be valid pointers; on success
/// `out` receives a handle for [`choq_solution_free`].
#[no_mangle]
pub unsafe extern "C" fn choq_solve(
    problem: *const ChoqProblem,
    grid: *const ChoqGrid,
    options: *const ChoqSolverOptions,
    out: *mut *mut ChoqSolution,
) -> ChoqStatus {
    if problem.is_null() || grid.is_null() || options.is_null() || out.is_null() {
        return ChoqStatus::NullArgument;
    }
    guarded(|| {
        let cfg: SolverConfig = unsafe { *options }.into();
        match minimize_ground_state(unsafe { &(*problem).0 }, unsafe { (*grid).0 }, &cfg) {
            Ok(sol) => {
                unsafe { *out = Box::into_raw(Box::new(ChoqSolution { inner: sol })) };
                ChoqStatus::Ok
            }
            Err(e) => map_error(&e),
        }
    })
}

/// # Safety
/// `solution` must be null or a handle from [`choq_solve`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn choq_solution_free(solution: *mut ChoqSolution) {
    if !solution.is_null() {
        drop(unsafe { Box::from_raw(solution) });
    }
}

unsafe fn solution_scalar<T>(
    solution: *const ChoqSolution,
    out: *mut T,
    get: impl Fn(&Solution) -> T,
) -> ChoqStatus {
    if solution.is_null() || out.is_null() {
        return ChoqStatus::NullArgument;
    }
    unsafe { *out = get(&(*solution).inner) };
    ChoqStatus::Ok
}

/// Energy of the computed state.
///
/// # Safety
/// `solution` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn choq_solution_energy(
    solution: *const ChoqSolution,
    out: *mut c_double,
) -> ChoqStatus {
    unsafe { solution_scalar(solution, out, |s| s.energy) }
}

/// Relative Euler-Lagrange residual.
///
/// # Safety
/// `solution` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn choq_solution_residual_rel(
    solution: *const ChoqSolution,
    out: *mut c_double,
) -> ChoqStatus {
    unsafe { solution_scalar(solution, out, |s| s.residual_rel) }
}

/// Relative Pohozaev defect.
///
/// # Safety
/// `solution` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn choq_solution_pohozaev_rel(
    solution: *const ChoqSolution,
    out: *mut c_double,
) -> ChoqStatus {
    unsafe { solution_scalar(solution, out, |s| s.pohozaev_rel) }
}

/// Relative Nehari defect.
///
/// # Safety
/// `solution` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn choq_solution_nehari_rel(
    solution: *const ChoqSolution,
    out: *mut c_double,
) -> ChoqStatus {
    unsafe { solution_scalar(solution, out, |s| s.nehari_rel) }
}

/// Lagrange multiplier removed by the amplitude rescale.
///
/// # Safety
/// `solution` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn choq_solution_multiplier(
    solution: *const ChoqSolution,
    out: *mut c_double,
) -> ChoqStatus {
    unsafe { solution_scalar(solution, out, |s| s.multiplier) }
}

/// Iterations consumed by the reported attempt.
///
/// # Safety
/// `solution` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn choq_solution_iterations(
    solution: *const ChoqSolution,
    out: *mut c_ulonglong,
) -> ChoqStatus {
    unsafe { solution_scalar(solution, out, |s| s.iterations as c_ulonglong) }
}

/// Termination status of the run.
///
/// # Safety
/// `solution` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn choq_solution_status(
    solution: *const ChoqSolution,
    out: *mut ChoqSolveStatus,
) -> ChoqStatus {
    if solution.is_null() || out.is_null() {
        return ChoqStatus::NullArgument;
    }
    unsafe { *out = (*solution).inner.status.into() };
    ChoqStatus::Ok
}

/// Number of field samples (M^N).
///
/// # Safety
/// `solution` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn choq_solution_num_values(
    solution: *const ChoqSolution,
    out: *mut usize,
) -> ChoqStatus {
    if solution.is_null() || out.is_null() {
        return ChoqStatus::NullArgument;
    }
    unsafe { *out = (*solution).inner.field.values().len() };
    ChoqStatus::Ok
}

/// Copy the row-major field samples into a caller buffer of exactly
/// [`choq_solution_num_values`] doubles.
///
/// # Safety
/// `solution` must be valid and `buffer` must point to `len` writable
/// doubles.
#[no_mangle]
pub unsafe extern "C" fn choq_solution_values(
    solution: *const ChoqSolution,
    buffer: *mut c_double,
    len: usize,
) -> ChoqStatus {
    if solution.is_null() || buffer.is_null() {
        return ChoqStatus::NullArgument;
    }
    let values = unsafe { (*solution).inner.field.values() };
    if values.len() != len {
        return ChoqStatus::InvalidArgument;
    }
    unsafe { std::ptr::copy_nonoverlapping(values.as_ptr(), buffer, len) };
    ChoqStatus::Ok
}

/// Evaluate the energy functional on caller-provided samples (row-major,
/// length M^N for the given grid).
///
/// # Safety
/// `problem` and `grid` must be valid handles, `values` must point to `len`
/// readable doubles, `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn choq_energy(
    problem: *const ChoqProblem,
    grid: *const ChoqGrid,
    values: *const c_double,
    len: usize,
    out: *mut c_double,
) -> ChoqStatus {
    if problem.is_null() || grid.is_null() || values.is_null() || out.is_null() {
        return ChoqStatus::NullArgument;
    }
    guarded(|| {
        let slice = unsafe { std::slice::from_raw_parts(values, len) };
        let built = Field::new(unsafe { (*grid).0 }, slice.to_vec())
            .and_then(|field| energy(&field, unsafe { &(*problem).0 }));
        match built {
            Ok(e) => {
                unsafe { *out = e };
                ChoqStatus::Ok
            }
            Err(e) => map_error(&e),
        }
    })
}
