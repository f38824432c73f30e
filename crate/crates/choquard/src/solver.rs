//! Ground-state computation for single-power nonlinearities F(s) = |s|^p / p
//! (scaled by a positive coefficient).
//!
//! The solver minimizes the amplitude-invariant Weinstein quotient
//!
//! ```text
//! Q(u) = (grad_sq + mass_sq) / D(u)^{1/p},
//! ```
//!
//! by descent along -(-Delta + 1)^{-1} grad Q (the Sobolev-preconditioned
//! gradient, applied spectrally) with Armijo backtracking and periodic
//! recentering. A stationary point v satisfies
//! (-Delta + 1) v = lambda (I_alpha * F(v)) F'(v) with
//! lambda = (grad_sq + mass_sq) / (p D(v)); the amplitude rescale
//! u = lambda^{1/(2p-2)} v then removes the multiplier exactly, yielding a
//! critical point of the energy whose Nehari functional vanishes by
//! construction. Outside the existence range the quotient has no localized
//! minimizer and the iteration either spreads toward the box scale, loses its
//! mass, or collapses below the grid resolution; degeneracy monitors turn
//! those runs into explicit degenerate statuses instead of spurious
//! convergence.

use crate::error::{Error, Result};
use crate::grid::{
    boundary_peak_ratio, h1_seminorms, helmholtz_apply, helmholtz_solve, l2_inner, l2_norm_sq,
    recenter, second_moment, symmetrize_midcell, Field, GridSpec,
};
use crate::model::{
    dilation_profile, el_residual_rel, energy, hypothesis_check, nehari_rel, pohozaev_rel,
    DilationCoefficients, Nonlinearity, PathProfile, ProblemSpec,
};
use crate::riesz::{cached_kernel, RieszKernel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::fmt;
use std::sync::Arc;

/// Mass-collapse detector: mass_sq below this fraction of its initial value.
const VANISHING_MASS_FRACTION: f64 = 1e-10;
/// Width-collapse detector, part 1: second moment below dim * h^2 / 8, i.e.
/// the iterate no longer resolves on the lattice.
const COLLAPSE_CELL_FRACTION: f64 = 0.125;
/// Width-collapse detector, part 2: the moment must also have shrunk well
/// below its initial value, so a deliberately narrow start is not
/// misclassified before the descent has moved anywhere.
const COLLAPSE_TREND_FRACTION: f64 = 0.25;
/// A run that converges in residual but grossly violates the Pohozaev
/// identity has collapsed to an unresolvable spike; far above the certified
/// tolerance 1e-4, far below any resolved state's violation.
const POHOZAEV_DEGENERACY_GUARD: f64 = 0.05;
/// Abandon the line search below this step factor.
const MIN_STEP: f64 = 1e-12;
/// Step-growth ceiling for the adaptive line search.
const MAX_STEP: f64 = 1e6;
/// Update-history depth for the extrapolated candidates.
const ANDERSON_MEMORY: usize = 6;
/// History rebuilds allowed after line-search stalls before giving up.
const MAX_STALL_RESETS: usize = 3;
/// Evaluation noise allowance for the quotient (relative): quotient values
/// pass through FFT convolution pipelines whose roundoff is far above one
/// ulp. Near the quotient's floor, steps within this band are judged by
/// their residual decrease instead of the unresolvable Q comparison.
const QUOTIENT_NOISE_REL: f64 = 1e-10;
/// Restart attempts (with seeded perturbations of the initial profile) after
/// an unconverged run.
const MAX_RESTARTS: usize = 2;

#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub max_iters: usize,
    /// Relative H^1 residual target for convergence.
    pub tol_residual: f64,
    pub armijo_c: f64,
    pub armijo_shrink: f64,
    pub recenter_every: usize,
    pub init_amplitude: f64,
    pub init_width: f64,
    /// Seed for randomized restarts.
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iters: 2000,
            tol_residual: 1e-8,
            armijo_c: 1e-4,
            armijo_shrink: 0.5,
            recenter_every: 25,
            init_amplitude: 1.0,
            init_width: 1.0,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::param("max_iters", "need at least one iteration"));
        }
        if !(self.tol_residual > 0.0) {
            return Err(Error::param("tol_residual", "tolerance must be positive"));
        }
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            return Err(Error::param("armijo_c", "must lie in (0, 1)"));
        }
        if !(self.armijo_shrink > 0.0 && self.armijo_shrink < 1.0) {
            return Err(Error::param("armijo_shrink", "must lie in (0, 1)"));
        }
        if self.recenter_every == 0 {
            return Err(Error::param("recenter_every", "must be positive"));
        }
        if !(self.init_amplitude.is_finite() && self.init_amplitude > 0.0) {
            return Err(Error::param("init_amplitude", "must be positive"));
        }
        if !(self.init_width.is_finite() && self.init_width > 0.0) {
            return Err(Error::param("init_width", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    DegenerateVanishing,
    DegenerateSpreading,
    MaxIters,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SolveStatus::Converged => "converged",
            SolveStatus::DegenerateVanishing => "degenerate_vanishing",
            SolveStatus::DegenerateSpreading => "degenerate_spreading",
            SolveStatus::MaxIters => "max_iters",
        };
        f.write_str(s)
    }
}

impl SolveStatus {
    pub fn is_degenerate(&self) -> bool {
        matches!(
            self,
            SolveStatus::DegenerateVanishing | SolveStatus::DegenerateSpreading
        )
    }
}

/// Run-level diagnostics carried alongside the computed field.
#[derive(Clone, Debug, Serialize)]
pub struct SolveDiagnostics {
    /// Largest boundary sample relative to the peak; should stay below ~1e-8
    /// on a well-sized box (reported, never an error).
    pub boundary_peak_ratio: f64,
    /// Mass-weighted second moment of the final iterate.
    pub second_moment: f64,
    /// Whether the analytic hypotheses held for the problem parameters.
    pub hypothesis_pass: bool,
    /// Restarts consumed before the reported attempt.
    pub restarts: usize,
    /// Human-readable witness for degenerate terminations.
    pub witness: Option<String>,
}

/// Computed ground-state candidate with residual certificates.
#[derive(Clone, Debug)]
pub struct Solution {
    pub field: Field,
    pub energy: f64,
    pub residual_rel: f64,
    pub pohozaev_rel: f64,
    pub nehari_rel: f64,
    /// Lagrange multiplier of the quotient minimizer that the amplitude
    /// rescale removed (1 for an already-exact critical point).
    pub multiplier: f64,
    pub iterations: usize,
    pub status: SolveStatus,
    /// Quotient value after every accepted step (the degeneracy witness
    /// trajectory; non-increasing by construction).
    pub quotient_trajectory: Vec<f64>,
    pub diagnostics: SolveDiagnostics,
}

/// Amplitude-invariant Weinstein quotient Q(u) = (grad_sq + mass_sq) / D(u)^{1/p}.
pub fn weinstein_quotient(u: &Field, spec: &ProblemSpec) -> Result<f64> {
    let p = spec
        .nonlinearity()
        .single_exponent()
        .ok_or(Error::MultiTermNonlinearity)?;
    if u.is_zero() {
        return Err(Error::DegenerateField("quotient of the zero field".into()));
    }
    let d = crate::model::nonlocal_term(u, spec)?;
    if !(d > 0.0) {
        return Err(Error::DegenerateField(format!(
            "nonlocal term D(u) = {d} is not positive"
        )));
    }
    Ok(h1_seminorms(u).h1_sq() / d.powf(1.0 / p))
}

/// Cached per-iterate quantities.
struct IterateState {
    u: Field,
    /// I_alpha * F(u).
    conv: Field,
    grad_sq: f64,
    mass_sq: f64,
    /// D(u).
    d: f64,
    /// Q(u).
    quotient: f64,
}

impl IterateState {
    fn h1_sq(&self) -> f64 {
        self.grad_sq + self.mass_sq
    }
}

/// History of (iterate, preconditioned gradient) pairs backing the
/// extrapolated candidates. With the fixed-point map G(u) = u - g, the
/// candidate minimizes the extrapolated update over affine combinations of
/// the stored map values:
///
/// ```text
/// min_theta || g - sum_j theta_j (g - g_j) ||_2,
/// cand = (u - g) - sum_j theta_j [(u - g) - (u_j - g_j)].
/// ```
struct AndersonHistory {
    memory: usize,
    entries: std::collections::VecDeque<(Field, Field)>,
}

impl AndersonHistory {
    fn new(memory: usize) -> Self {
        AndersonHistory {
            memory,
            entries: std::collections::VecDeque::new(),
        }
    }

    fn clear(&mut self) {
        self.entries.clear();
    }

    fn push(&mut self, u: Field, g: Field) {
        if self.entries.len() == self.memory {
            self.entries.pop_front();
        }
        self.entries.push_back((u, g));
    }

    fn candidate(&self, u: &Field, g: &Field) -> Option<Field> {
        let m = self.entries.len();
        if m == 0 {
            return None;
        }
        // Normal equations of the least-squares problem over plain sums
        // (the quadrature weight cancels).
        let diffs: Vec<Vec<f64>> = self
            .entries
            .iter()
            .map(|(_, gj)| {
                g.values()
                    .iter()
                    .zip(gj.values())
                    .map(|(&a, &b)| a - b)
                    .collect()
            })
            .collect();
        let mut a = vec![vec![0.0; m]; m];
        let mut b = vec![0.0; m];
        for i in 0..m {
            for j in i..m {
                let dot: f64 = diffs[i].iter().zip(&diffs[j]).map(|(&x, &y)| x * y).sum();
                a[i][j] = dot;
                a[j][i] = dot;
            }
            b[i] = g.values().iter().zip(&diffs[i]).map(|(&x, &y)| x * y).sum();
        }
        let trace: f64 = (0..m).map(|i| a[i][i]).sum();
        let reg = 1e-12 * (trace / m as f64).max(f64::MIN_POSITIVE);
        for (i, row) in a.iter_mut().enumerate() {
            row[i] += reg;
        }
        let theta = solve_dense(&mut a, &mut b)?;

        // cand = (u - g) - sum_j theta_j [(u - g) - (u_j - g_j)].
        let mut values: Vec<f64> = u
            .values()
            .iter()
            .zip(g.values())
            .map(|(&uv, &gv)| uv - gv)
            .collect();
        for (t, (uj, gj)) in theta.iter().zip(&self.entries) {
            if *t == 0.0 {
                continue;
            }
            for ((v, (&ujv, &gjv)), (&uv, &gv)) in values
                .iter_mut()
                .zip(uj.values().iter().zip(gj.values()))
                .zip(u.values().iter().zip(g.values()))
            {
                *v -= t * ((uv - gv) - (ujv - gjv));
            }
        }
        if values.iter().all(|v| v.is_finite()) {
            Some(Field::from_parts(*u.grid(), values))
        } else {
            None
        }
    }
}

/// Gaussian elimination with partial pivoting for the small extrapolation
/// system; None on (near-)singularity.
fn solve_dense(a: &mut [Vec<f64>], b: &mut [f64]) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| {
            a[i][col]
                .abs()
                .partial_cmp(&a[j][col].abs())
                .expect("finite")
        })?;
        if a[pivot][col].abs() < f64::MIN_POSITIVE {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let mut s = b[col];
        for k in col + 1..n {
            s -= a[col][k] * x[k];
        }
        x[col] = s / a[col][col];
        if !x[col].is_finite() {
            return None;
        }
    }
    Some(x)
}

/// Relative Euler-Lagrange residual of an evaluated iterate after the exact
/// amplitude rescale (scale-invariant, so computed without rescaling).
fn residual_rel_of(state: &IterateState, nl: &Nonlinearity, p: f64) -> Result<f64> {
    let lambda = state.h1_sq() / (p * state.d);
    let rhs_values: Vec<f64> = state
        .conv
        .values()
        .iter()
        .zip(state.u.values())
        .map(|(&cv, &s)| cv * nl.f_prime(s))
        .collect();
    let rhs = Field::from_parts(*state.u.grid(), rhs_values);
    let raw = helmholtz_apply(&state.u).axpy(-lambda, &rhs)?;
    Ok(l2_norm_sq(&raw).sqrt() / state.h1_sq().sqrt())
}

/// Largest per-axis distance, in cells, between the max-|u| sample and the
/// origin index (distances measured on the torus).
fn peak_offset_cells(u: &Field) -> usize {
    let grid = u.grid();
    let m = grid.points_per_axis();
    let origin = grid.origin_axis_index();
    let peak = u
        .values()
        .iter()
        .enumerate()
        .max_by(|(_, a), (_, b)| a.abs().partial_cmp(&b.abs()).expect("finite"))
        .map(|(i, _)| i)
        .expect("nonempty");
    let idx = grid.multi_index(peak);
    (0..grid.dim())
        .map(|a| {
            let d = idx[a].abs_diff(origin);
            d.min(m - d)
        })
        .max()
        .unwrap_or(0)
}

fn evaluate(u: Field, kernel: &RieszKernel, nl: &Nonlinearity, p: f64) -> Result<IterateState> {
    let fu = nl.f_field(&u);
    let conv = kernel.convolve(&fu)?;
    let d = l2_inner(&conv, &fu)?;
    let s = h1_seminorms(&u);
    if !(d > 0.0) || !d.is_finite() || !s.h1_sq().is_finite() {
        return Err(Error::DegenerateField(format!(
            "iterate left the admissible region (D = {d})"
        )));
    }
    let quotient = s.h1_sq() / d.powf(1.0 / p);
    Ok(IterateState {
        u,
        conv,
        grad_sq: s.grad_sq,
        mass_sq: s.mass_sq,
        d,
        quotient,
    })
}

/// Compute the ground state by quotient minimization, then rescale to an
/// exact critical point and populate all residuals.
pub fn minimize_ground_state(
    spec: &ProblemSpec,
    grid: GridSpec,
    cfg: &SolverConfig,
) -> Result<Solution> {
    cfg.validate()?;
    if grid.dim() != spec.dim() {
        return Err(Error::param("grid", "grid dimension differs from the problem dimension"));
    }
    let p = spec
        .nonlinearity()
        .single_exponent()
        .ok_or(Error::MultiTermNonlinearity)?;
    let hypothesis_pass = hypothesis_check(spec).pass;
    let kernel = cached_kernel(grid, spec.alpha())?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut restarts = 0;
    loop {
        // Seeded multiplicative jitter on the initial profile; the first
        // attempt uses the configured profile exactly.
        let (amp, width) = if restarts == 0 {
            (cfg.init_amplitude, cfg.init_width)
        } else {
            (
                cfg.init_amplitude * 2f64.powf(rng.random_range(-1.0..1.0)),
                cfg.init_width * 2f64.powf(rng.random_range(-1.0..1.0)),
            )
        };
        // Center the initial profile on the reflection center of the sample
        // set, -h/2 per axis: the midpoint between the first and last sample,
        // about which the discrete problem (free-space convolution included)
        // is exactly reflection symmetric.
        let c = -0.5 * grid.spacing();
        let inv_w2 = 1.0 / (width * width);
        let init = Field::from_fn(grid, |x| {
            let mut r2 = 0.0;
            for coord in x.iter().take(grid.dim()) {
                let d = coord - c;
                r2 += d * d;
            }
            amp * (-r2 * inv_w2).exp()
        })?;
        let sol = run_descent(spec, &kernel, p, init, cfg, hypothesis_pass, restarts)?;
        if sol.status != SolveStatus::MaxIters || restarts >= MAX_RESTARTS {
            return Ok(sol);
        }
        restarts += 1;
    }
}

fn run_descent(
    spec: &ProblemSpec,
    kernel: &Arc<RieszKernel>,
    p: f64,
    init: Field,
    cfg: &SolverConfig,
    hypothesis_pass: bool,
    restarts: usize,
) -> Result<Solution> {
    let grid = *init.grid();
    let nl = spec.nonlinearity().clone();
    let h = grid.spacing();
    let spread_threshold = (grid.box_length() / 4.0).powi(2);
    let collapse_threshold = grid.dim() as f64 * COLLAPSE_CELL_FRACTION * h * h;

    let mut state = evaluate(init, kernel, &nl, p)?;
    let initial_mass = state.mass_sq;
    let initial_moment = second_moment(&state.u);
    let mut trajectory = vec![state.quotient];
    let mut residual_target = 0.8 * cfg.tol_residual;

    let mut iterations = 0;
    let mut step = 1.0f64;
    // Previous accepted direction and step, for the Barzilai-Borwein trial
    // step; invalidated by recentering (which permutes the samples).
    let mut previous: Option<(Field, f64)> = None;
    // Iterate/update-direction history for the extrapolated candidates.
    let mut history: AndersonHistory = AndersonHistory::new(ANDERSON_MEMORY);
    // A stalled line search usually means the extrapolation history has gone
    // stale; rebuild from fresh map steps a few times before giving up.
    let mut stall_resets = 0;
    let mut outcome: Option<(SolveStatus, Option<String>)> = None;

    while iterations < cfg.max_iters {
        iterations += 1;

        if iterations % cfg.recenter_every == 0 {
            if state.u.is_zero() {
                outcome = Some((
                    SolveStatus::DegenerateVanishing,
                    Some("iterate vanished identically".into()),
                ));
                break;
            }
            // Recenter only an iterate that has wandered more than one cell
            // off the box center; the converged profile peaks at the
            // half-cell reflection center, where max-|u| recentering would
            // just rattle it between the two adjacent samples.
            let peak = peak_offset_cells(&state.u);
            if peak > 1 {
                let (centered, _) = recenter(&state.u);
                let recentered = evaluate(symmetrize_midcell(&centered), kernel, &nl, p)?;
                // Recentering permutes samples, so the quadratic forms are
                // exactly preserved; the free-space nonlocal term moves only
                // through the box-edge coupling of the tails.
                debug_assert!(
                    (recentered.quotient - state.quotient).abs()
                        <= 1e-4 * state.quotient.abs().max(1.0),
                    "recentering moved the quotient: {} -> {}",
                    state.quotient,
                    recentered.quotient
                );
                state = recentered;
                previous = None;
                history.clear();
            }
        }

        // Degeneracy monitors: mass collapse, spreading to the box scale,
        // collapse below grid resolution.
        if state.mass_sq < VANISHING_MASS_FRACTION * initial_mass {
            outcome = Some((
                SolveStatus::DegenerateVanishing,
                Some(format!(
                    "mass collapsed: mass_sq = {:.3e} vs initial {:.3e}",
                    state.mass_sq, initial_mass
                )),
            ));
            break;
        }
        let moment = second_moment(&state.u);
        if moment > spread_threshold {
            outcome = Some((
                SolveStatus::DegenerateSpreading,
                Some(format!(
                    "iterate spread to the box scale: second moment {:.3e} > (L/4)^2 = {:.3e}",
                    moment, spread_threshold
                )),
            ));
            break;
        }
        if moment < collapse_threshold && moment < COLLAPSE_TREND_FRACTION * initial_moment {
            outcome = Some((
                SolveStatus::DegenerateVanishing,
                Some(format!(
                    "iterate collapsed below grid resolution: second moment {:.3e} < {:.3e}",
                    moment, collapse_threshold
                )),
            ));
            break;
        }

        // Multiplier, residual of the rescaled candidate (scale-invariant,
        // so no rescale is needed to measure it), and the preconditioned
        // gradient direction.
        let lambda = state.h1_sq() / (p * state.d);
        let rhs_values: Vec<f64> = state
            .conv
            .values()
            .iter()
            .zip(state.u.values())
            .map(|(&cv, &s)| cv * nl.f_prime(s))
            .collect();
        let rhs = Field::from_parts(grid, rhs_values);
        let hu = helmholtz_apply(&state.u);
        let raw_residual = hu.axpy(-lambda, &rhs)?;
        let res_rel = l2_norm_sq(&raw_residual).sqrt() / state.h1_sq().sqrt();

        if res_rel <= residual_target {
            match finalize(spec, p, &state, lambda, cfg, iterations)? {
                Some(mut sol) => {
                    sol.quotient_trajectory = trajectory;
                    sol.diagnostics.hypothesis_pass = hypothesis_pass;
                    sol.diagnostics.restarts = restarts;
                    return Ok(sol);
                }
                // The honest recomputation after recentering came out above
                // tolerance; tighten the internal target and keep iterating.
                None => {
                    residual_target *= 0.5;
                }
            }
        }

        // g = u - lambda (-Delta+1)^{-1} rhs; the slope of Q along -g is
        // -(2 / D^{1/p}) ||g||_{H^1}^2. The unit step along -g is exactly the
        // stabilized fixed-point map u <- lambda (-Delta+1)^{-1} rhs.
        // Projecting the direction onto the midcell-even sector keeps the
        // iterates exactly in it (the perturbation seeded by FFT roundoff
        // otherwise reactivates the near-unit translation quasi-mode).
        let w = helmholtz_solve(&rhs);
        let g = symmetrize_midcell(&state.u.axpy(-lambda, &w)?);
        let slope = 2.0 / state.d.powf(1.0 / p) * h1_seminorms(&g).h1_sq();

        let trace = match std::env::var("CHOQUARD_TRACE") {
            Ok(v) if v == "all" => true,
            Ok(_) => iterations % 25 == 1,
            Err(_) => false,
        };
        if trace {
            eprintln!(
                "iter {iterations:5}  Q {:.12e}  res {:.3e}  step {:.2e}  moment {:.3e}  hist {}",
                state.quotient,
                res_rel,
                step,
                second_moment(&state.u),
                history.entries.len(),
            );
        }

        // Extrapolated candidate over the update history (Anderson-style
        // least squares on the fixed-point updates), removing the slow modes
        // that plain descent contracts at a near-unit rate. A candidate is
        // accepted when it decreases the quotient, or — once quotient
        // differences drop below floating-point resolution — when it keeps Q
        // within a few ulps while strictly shrinking the equation residual
        // (the geometric shrink factor bounds the total Q drift by a few
        // ulps overall).
        // Acceptance near the quotient's floating-point floor: quotient
        // differences are no longer resolvable, so a step may instead keep Q
        // within a few ulps while strictly shrinking the equation residual
        // (the geometric shrink bounds the total Q drift by a few ulps).
        let q_slack = QUOTIENT_NOISE_REL * state.quotient.abs();
        let q_cur = state.quotient;
        let floor_accept = |trial: &IterateState| -> Result<bool> {
            if trial.quotient > q_cur + q_slack {
                return Ok(false);
            }
            Ok(residual_rel_of(trial, &nl, p)? < 0.9 * res_rel)
        };

        let mut stepped = false;
        if let Some(candidate) = history.candidate(&state.u, &g) {
            if let Ok(trial) = evaluate(candidate, kernel, &nl, p) {
                if trial.quotient.is_finite()
                    && (trial.quotient < state.quotient || floor_accept(&trial)?)
                {
                    history.push(state.u.clone(), g.clone());
                    state = trial;
                    trajectory.push(state.quotient);
                    previous = None;
                    stepped = true;
                }
            }
        }

        if !stepped {
            // Barzilai-Borwein trial step from the previous accepted
            // direction: s = <du, dg> / <dg, dg> with du = -s_prev g_prev.
            // The quotient Hessian couples modes of very different
            // stiffness; the BB step bridges the spectrum while Armijo
            // backtracking keeps Q monotone.
            let mut trial_step = match &previous {
                Some((g_prev, s_prev)) => {
                    let mut num = 0.0;
                    let mut den = 0.0;
                    for (gn, gp) in g.values().iter().zip(g_prev.values()) {
                        let dg = gn - gp;
                        num += -s_prev * gp * dg;
                        den += dg * dg;
                    }
                    let bb = num / den;
                    if bb.is_finite() && bb > 0.0 {
                        bb.min(MAX_STEP)
                    } else {
                        (step * 2.0).min(MAX_STEP)
                    }
                }
                None => step.min(1.0),
            };

            let mut accepted = false;
            while trial_step >= MIN_STEP {
                let trial_field = state.u.axpy(-trial_step, &g)?;
                match evaluate(trial_field, kernel, &nl, p) {
                    Ok(trial) => {
                        let armijo =
                            trial.quotient < state.quotient - cfg.armijo_c * trial_step * slope;
                        if armijo || floor_accept(&trial)? {
                            debug_assert!(trial.quotient <= state.quotient + q_slack);
                            history.push(state.u.clone(), g.clone());
                            state = trial;
                            trajectory.push(state.quotient);
                            accepted = true;
                            break;
                        }
                    }
                    // Trial left the admissible region (e.g. D underflowed):
                    // treat as a rejected step.
                    Err(Error::DegenerateField(_)) => {}
                    Err(e) => return Err(e),
                }
                trial_step *= cfg.armijo_shrink;
            }
            if !accepted {
                if stall_resets < MAX_STALL_RESETS {
                    stall_resets += 1;
                    history.clear();
                    previous = None;
                    step = 1.0;
                    continue;
                }
                outcome = Some((
                    SolveStatus::MaxIters,
                    Some("line search stalled without an acceptable step".into()),
                ));
                break;
            }
            step = trial_step;
            previous = Some((g, trial_step));
        }
    }

    let (status, witness) = outcome.unwrap_or((SolveStatus::MaxIters, None));
    let u = state.u;
    let lambda = (state.grad_sq + state.mass_sq) / (p * state.d);
    Ok(Solution {
        energy: energy(&u, spec)?,
        residual_rel: el_residual_rel(&u, spec)?,
        pohozaev_rel: pohozaev_rel(&u, spec)?,
        nehari_rel: nehari_rel(&u, spec)?,
        multiplier: lambda,
        iterations,
        status,
        quotient_trajectory: trajectory,
        diagnostics: SolveDiagnostics {
            boundary_peak_ratio: boundary_peak_ratio(&u),
            second_moment: second_moment(&u),
            hypothesis_pass,
            restarts,
            witness,
        },
        field: u,
    })
}

/// Rescale the quotient minimizer to an exact critical point, recenter, and
/// recompute every residual from scratch. Returns None when the honest
/// residual recomputation misses the configured tolerance.
fn finalize(
    spec: &ProblemSpec,
    p: f64,
    state: &IterateState,
    lambda: f64,
    cfg: &SolverConfig,
    iterations: usize,
) -> Result<Option<Solution>> {
    // The amplitude rescale; the iterate already sits at the canonical
    // half-cell center, so no final translation is applied.
    let gamma = lambda.powf(1.0 / (2.0 * p - 2.0));
    let centered = state.u.scale(gamma);

    let residual = el_residual_rel(&centered, spec)?;
    if residual > cfg.tol_residual {
        return Ok(None);
    }
    let energy_val = energy(&centered, spec)?;
    let poho = pohozaev_rel(&centered, spec)?;
    let nehari = nehari_rel(&centered, spec)?;

    // A residual-converged state that grossly violates the Pohozaev identity
    // is a sub-grid spike: an exact discrete critical point that represents
    // no continuum solution.
    let (status, witness) = if poho > POHOZAEV_DEGENERACY_GUARD {
        (
            SolveStatus::DegenerateVanishing,
            Some(format!(
                "converged in residual but the Pohozaev identity fails grossly \
                 (relative violation {poho:.3e}): collapsed below grid resolution"
            )),
        )
    } else {
        (SolveStatus::Converged, None)
    };

    Ok(Some(Solution {
        energy: energy_val,
        residual_rel: residual,
        pohozaev_rel: poho,
        nehari_rel: nehari,
        multiplier: lambda,
        iterations,
        status,
        quotient_trajectory: Vec::new(),
        diagnostics: SolveDiagnostics {
            boundary_peak_ratio: boundary_peak_ratio(&centered),
            second_moment: second_moment(&centered),
            hypothesis_pass: true,
            restarts: 0,
            witness,
        },
        field: centered,
    }))
}

/// Tolerances and dilation grid for solution certificates.
#[derive(Clone, Debug)]
pub struct CertifyOptions {
    pub tol_residual: f64,
    pub tol_nehari: f64,
    pub tol_pohozaev: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub t_points: usize,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions {
            tol_residual: 1e-8,
            tol_nehari: 1e-6,
            tol_pohozaev: 1e-4,
            t_min: 0.25,
            t_max: 4.0,
            t_points: 97,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CertificateCheck {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

/// Outcome of re-deriving every certificate from scratch.
#[derive(Clone, Debug, Serialize)]
pub struct CertificateReport {
    pub checks: Vec<CertificateCheck>,
    pub pass: bool,
}

impl CertificateReport {
    pub fn first_violation(&self) -> Option<&CertificateCheck> {
        self.checks.iter().find(|c| !c.pass)
    }
}

/// Logarithmically spaced grid on [lo, hi].
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2 && lo > 0.0 && hi > lo);
    let ratio = hi / lo;
    (0..n)
        .map(|i| lo * ratio.powf(i as f64 / (n - 1) as f64))
        .collect()
}

/// Re-derive the residuals and the dilation-path maximality properties of a
/// converged solution. Any failed check is reported with a named violation.
pub fn certify(
    sol: &Solution,
    spec: &ProblemSpec,
    opts: &CertifyOptions,
) -> Result<CertificateReport> {
    if sol.status != SolveStatus::Converged {
        return Err(Error::NotConverged(sol.status.to_string()));
    }
    let u = &sol.field;
    let mut checks = Vec::new();

    let residual = el_residual_rel(u, spec)?;
    checks.push(CertificateCheck {
        name: "el_residual",
        pass: residual <= opts.tol_residual,
        detail: format!(
            "relative residual {residual:.3e} (tolerance {:.1e})",
            opts.tol_residual
        ),
    });

    let nehari = nehari_rel(u, spec)?;
    checks.push(CertificateCheck {
        name: "nehari",
        pass: nehari <= opts.tol_nehari,
        detail: format!(
            "relative Nehari defect {nehari:.3e} (tolerance {:.1e})",
            opts.tol_nehari
        ),
    });

    let poho = pohozaev_rel(u, spec)?;
    checks.push(CertificateCheck {
        name: "pohozaev",
        pass: poho <= opts.tol_pohozaev,
        detail: format!(
            "relative Pohozaev defect {poho:.3e} (tolerance {:.1e})",
            opts.tol_pohozaev
        ),
    });

    let t_values = log_spaced(opts.t_min, opts.t_max, opts.t_points);
    let profile = dilation_profile(u, spec, &t_values)?;
    let peak = profile.max_index();
    let nearest_one = t_values
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| a.ln().abs().partial_cmp(&b.ln().abs()).expect("finite"))
        .map(|(i, _)| i)
        .expect("nonempty");
    checks.push(CertificateCheck {
        name: "path_max_at_unit_dilation",
        pass: peak == nearest_one,
        detail: format!(
            "profile maximum at t = {:.6} (grid point nearest 1 is t = {:.6})",
            t_values[peak], t_values[nearest_one]
        ),
    });

    let peak_energy = profile.energies[peak];
    let strictly_below = profile
        .energies
        .iter()
        .enumerate()
        .all(|(i, &e)| i == peak || e < peak_energy);
    checks.push(CertificateCheck {
        name: "path_strictly_below_peak",
        pass: strictly_below,
        detail: format!("peak energy {peak_energy:.9e}"),
    });

    let tail = *profile.energies.last().expect("nonempty");
    checks.push(CertificateCheck {
        name: "path_negative_tail",
        pass: tail < 0.0,
        detail: format!("energy at t = {:.3} is {tail:.6e}", opts.t_max),
    });

    let pass = checks.iter().all(|c| c.pass);
    Ok(CertificateReport { checks, pass })
}

/// Dilation profile of a converged solution on the certificate grid.
pub fn certified_profile(
    sol: &Solution,
    spec: &ProblemSpec,
    opts: &CertifyOptions,
) -> Result<PathProfile> {
    let t_values = log_spaced(opts.t_min, opts.t_max, opts.t_points);
    dilation_profile(&sol.field, spec, &t_values)
}

/// Closed-form dilation coefficients of an arbitrary admissible field.
pub fn admissible_coefficients(w: &Field, spec: &ProblemSpec) -> Result<DilationCoefficients> {
    let coeffs = DilationCoefficients::of(w, spec)?;
    if !(coeffs.nonlocal > 0.0) {
        return Err(Error::DegenerateField("field has no nonlocal interaction".into()));
    }
    Ok(coeffs)
}
