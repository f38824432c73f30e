//! Machine-readable outputs: JSON run summaries, CSV dilation profiles, and
//! CSV / JSON-lines sweep tables.
//!
//! CSV files carry a header row and 17-significant-digit reals, so every
//! stored value reloads to the exact f64 that produced it. JSON-lines files
//! hold one object per record with keys matching the record field names; the
//! +inf interval sentinel of two-dimensional sweeps becomes `null` (JSON has
//! no infinity).

use crate::model::{HypothesisReport, PathProfile, ProblemSpec};
use crate::solver::{CertificateReport, Solution};
use crate::sweep::SweepResult;
use serde_json::{json, Value};

/// Full-precision decimal form of an f64 (17 significant digits).
pub fn real(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

fn finite_or_null(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

/// JSON summary of one ground-state run. `wall_time_s` is the only field
/// expected to differ between reruns of an identical seeded configuration.
pub fn solution_summary(
    spec: &ProblemSpec,
    sol: &Solution,
    certificate: Option<&CertificateReport>,
    wall_time_s: f64,
) -> Value {
    let terms: Vec<Value> = spec
        .nonlinearity()
        .terms()
        .iter()
        .map(|t| json!({"coeff": t.coeff, "exponent": t.exponent}))
        .collect();
    let grid = sol.field.grid();
    json!({
        "n": spec.dim(),
        "alpha": spec.alpha(),
        "terms": terms,
        "m": grid.points_per_axis(),
        "l": grid.box_length(),
        "status": sol.status,
        "energy": sol.energy,
        "residual_rel": sol.residual_rel,
        "pohozaev_rel": sol.pohozaev_rel,
        "nehari_rel": sol.nehari_rel,
        "multiplier": sol.multiplier,
        "iterations": sol.iterations,
        "certificate": certificate.map(|c| json!({
            "pass": c.pass,
            "checks": c.checks,
        })),
        "diagnostics": {
            "boundary_peak_ratio": sol.diagnostics.boundary_peak_ratio,
            "second_moment": sol.diagnostics.second_moment,
            "hypothesis_pass": sol.diagnostics.hypothesis_pass,
            "restarts": sol.diagnostics.restarts,
            "witness": sol.diagnostics.witness,
        },
        "wall_time_s": wall_time_s,
    })
}

/// Hypothesis report as printable text plus the existence interval.
pub fn hypothesis_text(spec: &ProblemSpec, report: &HypothesisReport) -> String {
    let hi = if report.interval_hi.is_finite() {
        format!("{}", report.interval_hi)
    } else {
        "inf".into()
    };
    let mut out = String::new();
    out.push_str(&format!(
        "problem: N = {}, alpha = {}, terms = {:?}\n",
        spec.dim(),
        spec.alpha(),
        spec.nonlinearity()
            .terms()
            .iter()
            .map(|t| (t.coeff, t.exponent))
            .collect::<Vec<_>>()
    ));
    out.push_str(&format!("nontrivial (F nonvanishing): {}\n", report.nontrivial));
    out.push_str(&format!("growth bound on F':          {}\n", report.growth));
    out.push_str(&format!("subcritical limits of F:     {}\n", report.subcritical));
    out.push_str(&format!("admissible exponent range:   ({}, {hi})\n", report.interval_lo));
    out.push_str(&format!("verdict: {}\n", if report.pass { "pass" } else { "fail" }));
    out
}

/// Dilation profile as CSV with columns `t,energy`.
pub fn path_csv(profile: &PathProfile) -> String {
    let mut out = String::from("t,energy\n");
    for (t, e) in profile.t_values.iter().zip(&profile.energies) {
        out.push_str(&real(*t));
        out.push(',');
        out.push_str(&real(*e));
        out.push('\n');
    }
    out
}

const SWEEP_COLUMNS: &str =
    "n,alpha,p,interval_lo,interval_hi,in_range,status,energy,residual_rel,pohozaev_rel,iterations,wall_time_s,warnings";

/// Sweep table as CSV in the canonical column order.
pub fn sweep_csv(result: &SweepResult) -> String {
    let mut out = String::from(SWEEP_COLUMNS);
    out.push('\n');
    for row in &result.rows {
        let opt = |v: Option<f64>| v.map(real).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            row.n,
            real(row.alpha),
            real(row.p),
            real(row.interval_lo),
            real(row.interval_hi),
            row.in_range,
            row.status_label(),
            opt(row.energy),
            opt(row.residual_rel),
            opt(row.pohozaev_rel),
            row.iterations.map(|i| i.to_string()).unwrap_or_default(),
            real(row.wall_time_s),
            row.warnings,
        ));
    }
    out
}

/// Sweep table as JSON-lines, one object per row.
pub fn sweep_jsonl(result: &SweepResult) -> String {
    let mut out = String::new();
    for row in &result.rows {
        let obj = json!({
            "n": row.n,
            "alpha": row.alpha,
            "p": row.p,
            "interval_lo": row.interval_lo,
            "interval_hi": finite_or_null(row.interval_hi),
            "in_range": row.in_range,
            "status": row.status_label(),
            "energy": row.energy,
            "residual_rel": row.residual_rel,
            "pohozaev_rel": row.pohozaev_rel,
            "iterations": row.iterations,
            "wall_time_s": row.wall_time_s,
            "warnings": row.warnings,
        });
        out.push_str(&obj.to_string());
        out.push('\n');
    }
    out
}
