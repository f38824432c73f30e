//! Command-line driver: ground-state solves, dilation-path tables,
//! existence-dichotomy sweeps, and hypothesis checks, all configured through
//! a plain-text key=value file.
//!
//! Exit codes: 0 success; 2 configuration, input, or I/O errors; 3 degenerate
//! or otherwise unconverged solve (or failed hypotheses for `check`);
//! 4 certificate failure of a converged solve; 5 dichotomy mismatch in a
//! sweep.

use choquard::config::RunConfig;
use choquard::error::Error;
use choquard::fieldfile;
use choquard::model::{dilation_profile, hypothesis_check, path_n2};
use choquard::report;
use choquard::solver::{certify, log_spaced, minimize_ground_state, CertifyOptions, SolveStatus};
use choquard::sweep::run_sweep;
use clap::{Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

const EXIT_OK: u8 = 0;
const EXIT_CONFIG: u8 = 2;
const EXIT_DEGENERATE: u8 = 3;
const EXIT_CERTIFICATE: u8 = 4;
const EXIT_DICHOTOMY: u8 = 5;

#[derive(Parser)]
#[command(
    name = "choquard",
    about = "Ground states of the nonlinear Choquard equation -Δu + u = (I_α∗F(u))F'(u)",
    version
)]
struct Cli {
    /// Plain-text key=value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (overrides `out_dir` from the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Seed override for the solver's randomized restarts.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute and certify a ground state; write the field and a JSON summary.
    Solve,
    /// Tabulate the dilation-path energies of a stored solution as CSV.
    Path {
        /// Field file produced by `solve`.
        field: PathBuf,
    },
    /// Run a (N, alpha, p) study and write CSV / JSON-lines tables.
    Sweep,
    /// Evaluate the analytic hypotheses and print the existence interval.
    Check,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
    };
    ExitCode::from(code)
}

fn run(cli: Cli) -> Result<u8, Error> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.set("out_dir", out.display().to_string());
    }
    if let Some(seed) = cli.seed {
        cfg.set("seed", seed.to_string());
    }

    match cli.command {
        Command::Solve => cmd_solve(&cfg),
        Command::Path { field } => cmd_path(&cfg, &field),
        Command::Sweep => cmd_sweep(&cfg),
        Command::Check => cmd_check(&cfg),
    }
}

fn ensure_out_dir(cfg: &RunConfig) -> Result<PathBuf, Error> {
    let dir = PathBuf::from(cfg.out_dir());
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn cmd_solve(cfg: &RunConfig) -> Result<u8, Error> {
    let spec = cfg.problem()?;
    let grid = cfg.grid()?;
    let solver_cfg = cfg.solver()?;
    let out_dir = ensure_out_dir(cfg)?;

    let start = Instant::now();
    let sol = minimize_ground_state(&spec, grid, &solver_cfg)?;
    let certificate = if sol.status == SolveStatus::Converged {
        Some(certify(&sol, &spec, &CertifyOptions::default())?)
    } else {
        None
    };
    let wall = start.elapsed().as_secs_f64();

    fieldfile::write_field(&out_dir.join("solution.field"), &sol.field, &spec)?;
    let summary = report::solution_summary(&spec, &sol, certificate.as_ref(), wall);
    std::fs::write(
        out_dir.join("summary.json"),
        serde_json::to_string_pretty(&summary).expect("serializable summary") + "\n",
    )?;

    println!(
        "status = {}  energy = {:.12e}  residual_rel = {:.3e}  iterations = {}",
        sol.status, sol.energy, sol.residual_rel, sol.iterations
    );
    if let Some(witness) = &sol.diagnostics.witness {
        println!("witness: {witness}");
    }
    match (&sol.status, &certificate) {
        (SolveStatus::Converged, Some(cert)) if cert.pass => {
            println!("certificate: pass");
            Ok(EXIT_OK)
        }
        (SolveStatus::Converged, Some(cert)) => {
            let violation = cert.first_violation().expect("failed certificate");
            println!("certificate: FAIL ({}: {})", violation.name, violation.detail);
            Ok(EXIT_CERTIFICATE)
        }
        _ => Ok(EXIT_DEGENERATE),
    }
}

fn cmd_path(cfg: &RunConfig, field_path: &Path) -> Result<u8, Error> {
    let (field, spec) = fieldfile::read_field(field_path)?;
    let (t_min, t_max, t_points) = cfg.path_grid()?;
    let t_values = log_spaced(t_min, t_max, t_points);
    let profile = match cfg.splice_point()? {
        Some(t0) if spec.dim() == 2 => path_n2(&field, &spec, t0, &t_values)?,
        _ => dilation_profile(&field, &spec, &t_values)?,
    };
    let out_dir = ensure_out_dir(cfg)?;
    std::fs::write(out_dir.join("path.csv"), report::path_csv(&profile))?;
    let peak = profile.max_index();
    println!(
        "wrote {} rows; maximum {:.12e} at t = {:.6}{}",
        profile.t_values.len(),
        profile.energies[peak],
        profile.t_values[peak],
        if profile.solution_triple {
            ""
        } else {
            " (coefficients do not satisfy the solution constraint)"
        }
    );
    Ok(EXIT_OK)
}

fn cmd_sweep(cfg: &RunConfig) -> Result<u8, Error> {
    let points = cfg.sweep_points()?;
    let grids = cfg.sweep_grids()?;
    let solver_cfg = cfg.solver()?;
    let out_dir = ensure_out_dir(cfg)?;

    let result = run_sweep(&points, &grids, &solver_cfg)?;
    std::fs::write(out_dir.join("sweep.csv"), report::sweep_csv(&result))?;
    std::fs::write(out_dir.join("sweep.jsonl"), report::sweep_jsonl(&result))?;

    let (matched, scored) = result.dichotomy_counts();
    for row in &result.rows {
        println!(
            "N={} alpha={} p={}: {} {}",
            row.n,
            row.alpha,
            row.p,
            row.status_label(),
            if row.warnings.is_empty() {
                String::new()
            } else {
                format!("[{}]", row.warnings)
            }
        );
    }
    println!("dichotomy score: {matched}/{scored}");
    if result.all_match() {
        Ok(EXIT_OK)
    } else {
        Ok(EXIT_DICHOTOMY)
    }
}

fn cmd_check(cfg: &RunConfig) -> Result<u8, Error> {
    let spec = cfg.problem()?;
    let report_data = hypothesis_check(&spec);
    print!("{}", report::hypothesis_text(&spec, &report_data));
    if report_data.pass {
        Ok(EXIT_OK)
    } else {
        Ok(EXIT_DEGENERATE)
    }
}
