//! Parameter studies over (N, alpha, p): the sharp existence range for power
//! nonlinearities, and tabulated ground-state runs reproducing the
//! existence/nonexistence dichotomy.

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::model::{Nonlinearity, ProblemSpec};
use crate::solver::{minimize_ground_state, SolveStatus, SolverConfig};
use rayon::prelude::*;
use serde::Serialize;
use std::time::Instant;

/// Distance from an interval endpoint below which a point is scored as
/// near-critical and excluded from the dichotomy score (grid-limited
/// behavior).
pub const ENDPOINT_BUFFER: f64 = 0.2;

/// Existence range of exponents for the power nonlinearity:
/// (1 + alpha/N, (N+alpha)/(N-2)) for N = 3, and (1 + alpha/2, +inf) for
/// N = 2 (the upper constraint is void in two dimensions).
pub fn existence_range(dim: usize, alpha: f64) -> Result<(f64, f64)> {
    if dim != 2 && dim != 3 {
        return Err(Error::param("N", format!("dimension must be 2 or 3, got {dim}")));
    }
    if !alpha.is_finite() || alpha <= 0.0 || alpha >= dim as f64 {
        return Err(Error::param(
            "alpha",
            format!("Riesz order must lie in (0, {dim}), got {alpha}"),
        ));
    }
    let n = dim as f64;
    if dim == 2 {
        Ok((1.0 + alpha / 2.0, f64::INFINITY))
    } else {
        Ok((1.0 + alpha / n, (n + alpha) / (n - 2.0)))
    }
}

/// One requested study point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepPoint {
    pub dim: usize,
    pub alpha: f64,
    pub p: f64,
}

/// Grids used for the runs, one per supported dimension.
#[derive(Clone, Copy, Debug)]
pub struct SweepGrids {
    pub n2: GridSpec,
    pub n3: GridSpec,
}

impl SweepGrids {
    pub fn grid_for(&self, dim: usize) -> GridSpec {
        if dim == 2 {
            self.n2
        } else {
            self.n3
        }
    }
}

/// Outcome of one study point.
#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub n: usize,
    pub alpha: f64,
    pub p: f64,
    pub interval_lo: f64,
    /// +inf sentinel when N = 2.
    pub interval_hi: f64,
    pub in_range: bool,
    /// Solver status, or None when the run errored.
    pub status: Option<SolveStatus>,
    pub error: Option<String>,
    pub energy: Option<f64>,
    pub residual_rel: Option<f64>,
    pub pohozaev_rel: Option<f64>,
    pub iterations: Option<usize>,
    pub wall_time_s: f64,
    /// Scoring annotations, e.g. `near_endpoint`.
    pub warnings: String,
}

impl SweepRow {
    pub fn status_label(&self) -> String {
        match (&self.status, &self.error) {
            (Some(s), _) => s.to_string(),
            (None, Some(e)) => format!("error: {e}"),
            (None, None) => "unknown".into(),
        }
    }

    /// Whether the run outcome matches the existence-range prediction.
    pub fn matches_prediction(&self) -> bool {
        match self.status {
            Some(SolveStatus::Converged) => {
                self.in_range && self.energy.map(|e| e > 0.0).unwrap_or(false)
            }
            Some(s) if s.is_degenerate() => !self.in_range,
            _ => false,
        }
    }

    pub fn near_endpoint(&self) -> bool {
        let lo_dist = (self.p - self.interval_lo).abs();
        let hi_dist = if self.interval_hi.is_finite() {
            (self.p - self.interval_hi).abs()
        } else {
            f64::INFINITY
        };
        lo_dist < ENDPOINT_BUFFER || hi_dist < ENDPOINT_BUFFER
    }
}

/// Tabulated study results, ordered as the input points.
#[derive(Clone, Debug)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    /// (matched, scored): near-endpoint rows are excluded from scoring.
    pub fn dichotomy_counts(&self) -> (usize, usize) {
        let scored: Vec<&SweepRow> = self.rows.iter().filter(|r| !r.near_endpoint()).collect();
        let matched = scored.iter().filter(|r| r.matches_prediction()).count();
        (matched, scored.len())
    }

    /// Fraction of scored rows matching the prediction (1.0 when nothing is
    /// scored).
    pub fn dichotomy_score(&self) -> f64 {
        let (matched, scored) = self.dichotomy_counts();
        if scored == 0 {
            1.0
        } else {
            matched as f64 / scored as f64
        }
    }

    pub fn all_match(&self) -> bool {
        let (matched, scored) = self.dichotomy_counts();
        matched == scored
    }
}

/// Run one ground-state computation per point. Rows are computed from
/// independent solves on a bounded worker pool and collected in input order;
/// per-row failures are recorded in the row, never aborting the sweep.
pub fn run_sweep(
    points: &[SweepPoint],
    grids: &SweepGrids,
    cfg: &SolverConfig,
) -> Result<SweepResult> {
    if points.is_empty() {
        return Err(Error::EmptySweep);
    }
    let rows: Vec<SweepRow> = points
        .par_iter()
        .map(|pt| run_point(pt, grids, cfg))
        .collect();
    Ok(SweepResult { rows })
}

fn run_point(pt: &SweepPoint, grids: &SweepGrids, cfg: &SolverConfig) -> SweepRow {
    let start = Instant::now();
    let mut row = SweepRow {
        n: pt.dim,
        alpha: pt.alpha,
        p: pt.p,
        interval_lo: f64::NAN,
        interval_hi: f64::NAN,
        in_range: false,
        status: None,
        error: None,
        energy: None,
        residual_rel: None,
        pohozaev_rel: None,
        iterations: None,
        wall_time_s: 0.0,
        warnings: String::new(),
    };

    let outcome = (|| -> Result<()> {
        let (lo, hi) = existence_range(pt.dim, pt.alpha)?;
        row.interval_lo = lo;
        row.interval_hi = hi;
        row.in_range = pt.p > lo && pt.p < hi;
        let spec = ProblemSpec::new(pt.dim, pt.alpha, Nonlinearity::power(pt.p)?)?;
        let sol = minimize_ground_state(&spec, grids.grid_for(pt.dim), cfg)?;
        row.status = Some(sol.status);
        row.energy = Some(sol.energy);
        row.residual_rel = Some(sol.residual_rel);
        row.pohozaev_rel = Some(sol.pohozaev_rel);
        row.iterations = Some(sol.iterations);
        Ok(())
    })();
    if let Err(e) = outcome {
        row.error = Some(e.to_string());
    }
    if row.near_endpoint() {
        row.warnings = "near_endpoint".into();
    }
    row.wall_time_s = start.elapsed().as_secs_f64();
    row
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn existence_range_matches_known_values() {
        let (lo, hi) = existence_range(3, 2.0).unwrap();
        assert!((lo - 5.0 / 3.0).abs() < 1e-15);
        assert!((hi - 5.0).abs() < 1e-15);
        let (lo, hi) = existence_range(3, 1.0).unwrap();
        assert!((lo - 4.0 / 3.0).abs() < 1e-15);
        assert!((hi - 4.0).abs() < 1e-15);
        let (lo, hi) = existence_range(2, 1.0).unwrap();
        assert!((lo - 1.5).abs() < 1e-15);
        assert!(hi.is_infinite() && hi > 0.0);
    }

    #[test]
    fn existence_range_rejects_bad_parameters() {
        assert!(existence_range(4, 1.0).is_err());
        assert!(existence_range(3, 0.0).is_err());
        assert!(existence_range(3, 3.0).is_err());
        assert!(existence_range(2, -1.0).is_err());
    }

    #[test]
    fn empty_sweep_is_rejected() {
        let grids = SweepGrids {
            n2: make_grid(2, 16, 12.0).unwrap(),
            n3: make_grid(3, 16, 12.0).unwrap(),
        };
        assert!(matches!(
            run_sweep(&[], &grids, &SolverConfig::default()),
            Err(Error::EmptySweep)
        ));
    }

    #[test]
    fn near_endpoint_rows_are_flagged_and_unscored() {
        let mk = |p: f64| SweepRow {
            n: 3,
            alpha: 1.0,
            p,
            interval_lo: 4.0 / 3.0,
            interval_hi: 4.0,
            in_range: p > 4.0 / 3.0 && p < 4.0,
            status: Some(SolveStatus::Converged),
            error: None,
            energy: Some(1.0),
            residual_rel: Some(1e-9),
            pohozaev_rel: Some(1e-5),
            iterations: Some(10),
            wall_time_s: 0.0,
            warnings: String::new(),
        };
        assert!(mk(4.0 / 3.0 + 0.01).near_endpoint());
        assert!(mk(3.95).near_endpoint());
        assert!(!mk(2.0).near_endpoint());

        // A converged near-endpoint row does not count toward the score.
        let result = SweepResult {
            rows: vec![mk(4.0 / 3.0 + 0.01), mk(2.0)],
        };
        let (matched, scored) = result.dichotomy_counts();
        assert_eq!(scored, 1);
        assert_eq!(matched, 1);
        assert!(result.all_match());
    }

    #[test]
    fn permuting_points_permutes_rows() {
        // Independent solves: no cross-talk between rows beyond wall time.
        let grids = SweepGrids {
            n2: make_grid(2, 16, 12.0).unwrap(),
            n3: make_grid(3, 16, 12.0).unwrap(),
        };
        let cfg = SolverConfig::default();
        let a = SweepPoint {
            dim: 3,
            alpha: 2.0,
            p: 2.0,
        };
        let b = SweepPoint {
            dim: 3,
            alpha: 1.0,
            p: 4.5,
        };
        let fwd = run_sweep(&[a, b], &grids, &cfg).unwrap();
        let rev = run_sweep(&[b, a], &grids, &cfg).unwrap();
        let key = |r: &SweepRow| {
            (
                r.n,
                r.alpha.to_bits(),
                r.p.to_bits(),
                r.status_label(),
                r.energy.map(f64::to_bits),
                r.iterations,
            )
        };
        assert_eq!(key(&fwd.rows[0]), key(&rev.rows[1]));
        assert_eq!(key(&fwd.rows[1]), key(&rev.rows[0]));
    }

    #[test]
    fn row_prediction_matching() {
        let mut row = SweepRow {
            n: 3,
            alpha: 1.0,
            p: 2.0,
            interval_lo: 4.0 / 3.0,
            interval_hi: 4.0,
            in_range: true,
            status: Some(SolveStatus::Converged),
            error: None,
            energy: Some(5.0),
            residual_rel: Some(1e-9),
            pohozaev_rel: Some(1e-5),
            iterations: Some(10),
            wall_time_s: 0.1,
            warnings: String::new(),
        };
        assert!(row.matches_prediction());
        row.status = Some(SolveStatus::DegenerateSpreading);
        assert!(!row.matches_prediction());
        row.in_range = false;
        assert!(row.matches_prediction());
        row.status = Some(SolveStatus::MaxIters);
        assert!(!row.matches_prediction());
        row.status = None;
        row.error = Some("boom".into());
        assert!(!row.matches_prediction());
        assert!(row.status_label().starts_with("error:"));
    }
}
