//! Plain-text key=value run configuration.
//!
//! One `key = value` pair per line, `#` starts a comment, keys are validated
//! against a fixed schema and unknown or duplicate keys are hard errors,
//! preventing silent typos. Problem and grid keys feed [`ProblemSpec`] and
//! [`GridSpec`] validation before any computation runs.

use crate::error::{Error, Result};
use crate::grid::{make_grid, GridSpec};
use crate::model::{Nonlinearity, ProblemSpec};
use crate::solver::SolverConfig;
use crate::sweep::SweepPoint;
use std::collections::BTreeMap;
use std::path::Path;

/// All recognized keys.
const SCHEMA: &[&str] = &[
    // problem
    "n",
    "alpha",
    "p",
    "terms",
    // grid
    "m",
    "l",
    // solver
    "tol_residual",
    "max_iters",
    "armijo_c",
    "armijo_shrink",
    "recenter_every",
    "init_amplitude",
    "init_width",
    "seed",
    // output
    "out_dir",
    // dilation path
    "t_min",
    "t_max",
    "t_points",
    "t0",
    // sweep
    "sweep_points",
    "sweep_m_n2",
    "sweep_l_n2",
    "sweep_m_n3",
    "sweep_l_n3",
];

/// Parsed and schema-checked configuration; typed accessors validate values
/// on demand.
#[derive(Clone, Debug, Default)]
pub struct RunConfig {
    entries: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(i) => &raw[..i],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`, got `{raw}`", lineno + 1))
            })?;
            let key = key.trim().to_ascii_lowercase();
            let value = value.trim().to_string();
            if !SCHEMA.contains(&key.as_str()) {
                return Err(Error::Config(format!("line {}: unknown key `{key}`", lineno + 1)));
            }
            if entries.insert(key.clone(), value).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key `{key}`", lineno + 1)));
            }
        }
        Ok(RunConfig { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        RunConfig::parse(&text)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    /// Override or insert a value (used by command-line flags).
    pub fn set(&mut self, key: &str, value: String) {
        self.entries.insert(key.to_string(), value);
    }

    fn required(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| Error::Config(format!("missing required key `{key}`")))
    }

    fn parse_value<T: std::str::FromStr>(&self, key: &str, value: &str) -> Result<T> {
        value
            .parse()
            .map_err(|_| Error::Config(format!("key `{key}`: cannot parse `{value}`")))
    }

    fn required_num<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        self.parse_value(key, self.required(key)?)
    }

    fn optional_num<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.get(key) {
            Some(v) => Ok(Some(self.parse_value(key, v)?)),
            None => Ok(None),
        }
    }

    /// The equation parameters. Either `p = <exponent>` or
    /// `terms = c1:p1, c2:p2, ...` must be present (not both).
    pub fn problem(&self) -> Result<ProblemSpec> {
        let dim: usize = self.required_num("n")?;
        let alpha: f64 = self.required_num("alpha")?;
        let nonlinearity = match (self.get("p"), self.get("terms")) {
            (Some(_), Some(_)) => {
                return Err(Error::Config("give either `p` or `terms`, not both".into()))
            }
            (Some(p), None) => Nonlinearity::power(self.parse_value("p", p)?)?,
            (None, Some(terms)) => Nonlinearity::new(parse_terms(terms)?)?,
            (None, None) => return Err(Error::Config("missing nonlinearity: set `p` or `terms`".into())),
        };
        ProblemSpec::new(dim, alpha, nonlinearity)
    }

    pub fn grid(&self) -> Result<GridSpec> {
        let dim: usize = self.required_num("n")?;
        let m: usize = self.required_num("m")?;
        let l: f64 = self.required_num("l")?;
        make_grid(dim, m, l)
    }

    /// Solver settings with defaults for everything not present.
    pub fn solver(&self) -> Result<SolverConfig> {
        let mut cfg = SolverConfig::default();
        if let Some(v) = self.optional_num("max_iters")? {
            cfg.max_iters = v;
        }
        if let Some(v) = self.optional_num("tol_residual")? {
            cfg.tol_residual = v;
        }
        if let Some(v) = self.optional_num("armijo_c")? {
            cfg.armijo_c = v;
        }
        if let Some(v) = self.optional_num("armijo_shrink")? {
            cfg.armijo_shrink = v;
        }
        if let Some(v) = self.optional_num("recenter_every")? {
            cfg.recenter_every = v;
        }
        if let Some(v) = self.optional_num("init_amplitude")? {
            cfg.init_amplitude = v;
        }
        if let Some(v) = self.optional_num("init_width")? {
            cfg.init_width = v;
        }
        if let Some(v) = self.optional_num("seed")? {
            cfg.seed = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn out_dir(&self) -> &str {
        self.get("out_dir").unwrap_or("out")
    }

    /// Log-spaced dilation grid bounds (defaults 0.25, 4.0, 97).
    pub fn path_grid(&self) -> Result<(f64, f64, usize)> {
        let t_min: f64 = self.optional_num("t_min")?.unwrap_or(0.25);
        let t_max: f64 = self.optional_num("t_max")?.unwrap_or(4.0);
        let t_points: usize = self.optional_num("t_points")?.unwrap_or(97);
        if !(t_min > 0.0 && t_max > t_min) {
            return Err(Error::Config(format!(
                "dilation grid needs 0 < t_min < t_max, got [{t_min}, {t_max}]"
            )));
        }
        if t_points < 2 {
            return Err(Error::Config("t_points must be at least 2".into()));
        }
        Ok((t_min, t_max, t_points))
    }

    /// Optional N=2 splice point.
    pub fn splice_point(&self) -> Result<Option<f64>> {
        self.optional_num("t0")
    }

    /// Sweep study points: `sweep_points = N:alpha:p; N:alpha:p; ...`.
    pub fn sweep_points(&self) -> Result<Vec<SweepPoint>> {
        let raw = self.required("sweep_points")?;
        let mut points = Vec::new();
        for piece in raw.split(';') {
            let piece = piece.trim();
            if piece.is_empty() {
                continue;
            }
            let parts: Vec<&str> = piece.split(':').map(str::trim).collect();
            if parts.len() != 3 {
                return Err(Error::Config(format!(
                    "sweep point `{piece}` must have the form N:alpha:p"
                )));
            }
            points.push(SweepPoint {
                dim: self.parse_value("sweep_points", parts[0])?,
                alpha: self.parse_value("sweep_points", parts[1])?,
                p: self.parse_value("sweep_points", parts[2])?,
            });
        }
        if points.is_empty() {
            return Err(Error::Config("sweep_points is empty".into()));
        }
        Ok(points)
    }

    /// Per-dimension sweep grids, with defaults resolving the narrow
    /// near-critical states (h = 0.25 for N=3).
    pub fn sweep_grids(&self) -> Result<crate::sweep::SweepGrids> {
        let m2: usize = self.optional_num("sweep_m_n2")?.unwrap_or(64);
        let l2: f64 = self.optional_num("sweep_l_n2")?.unwrap_or(20.0);
        let m3: usize = self.optional_num("sweep_m_n3")?.unwrap_or(64);
        let l3: f64 = self.optional_num("sweep_l_n3")?.unwrap_or(16.0);
        Ok(crate::sweep::SweepGrids {
            n2: make_grid(2, m2, l2)?,
            n3: make_grid(3, m3, l3)?,
        })
    }
}

/// `c1:p1, c2:p2, ...`
fn parse_terms(raw: &str) -> Result<Vec<(f64, f64)>> {
    let mut terms = Vec::new();
    for piece in raw.split(',') {
        let piece = piece.trim();
        if piece.is_empty() {
            continue;
        }
        let (c, p) = piece
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("term `{piece}` must have the form c:p")))?;
        let c: f64 = c
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("term coefficient `{c}` is not a number")))?;
        let p: f64 = p
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("term exponent `{p}` is not a number")))?;
        terms.push((c, p));
    }
    if terms.is_empty() {
        return Err(Error::Config("terms list is empty".into()));
    }
    Ok(terms)
}
