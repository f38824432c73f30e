//! The variational structure of the equation
//!
//! ```text
//! -Delta u + u = (I_alpha * F(u)) F'(u)   in R^N,
//! ```
//!
//! for power-sum nonlinearities F(s) = sum_i c_i |s|^{p_i} / p_i: the energy
//! functional, its Euler-Lagrange residual, the Pohozaev and Nehari
//! identities, the scaled functional and closed-form dilation-path energies,
//! and the analytic hypothesis predicates delimiting the existence range.
//!
//! Solutions are critical points of
//!
//! ```text
//! I(u) = 1/2 int (|grad u|^2 + u^2) - 1/2 int (I_alpha * F(u)) F(u),
//! ```
//!
//! whose Frechet derivative reproduces the equation; the nonlocal term uses
//! F(u) on both sides, the convention under which I'(u) = 0 is equivalent to
//! the equation and the Pohozaev identity takes its standard form.

use crate::error::{Error, Result};
use crate::grid::h1_seminorms;
use crate::grid::{helmholtz_apply, l2_inner, l2_norm_sq, Field, Seminorms};
use crate::riesz::cached_kernel;
use serde::Serialize;

/// Relative Pohozaev tolerance below which a coefficient triple is treated
/// as coming from a solution when building dilation profiles.
pub const SOLUTION_TRIPLE_TOL: f64 = 1e-4;

/// One power term c |s|^p / p of the nonlinearity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PowerTerm {
    pub coeff: f64,
    pub exponent: f64,
}

/// Power-sum nonlinearity F(s) = sum_i c_i |s|^{p_i} / p_i with
/// F'(s) = sum_i c_i |s|^{p_i - 2} s. All coefficients positive, all
/// exponents > 1, so F is C^1 with F(0) = F'(0) = 0, F even and F' odd.
#[derive(Clone, Debug, PartialEq)]
pub struct Nonlinearity {
    terms: Vec<PowerTerm>,
}

impl Nonlinearity {
    pub fn new(terms: Vec<(f64, f64)>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::param("terms", "nonlinearity needs at least one term"));
        }
        for &(c, p) in &terms {
            if !c.is_finite() || c <= 0.0 {
                return Err(Error::param("terms", format!("coefficient must be positive, got {c}")));
            }
            if !p.is_finite() || p <= 1.0 {
                return Err(Error::param("terms", format!("exponent must exceed 1, got {p}")));
            }
        }
        Ok(Nonlinearity {
            terms: terms
                .into_iter()
                .map(|(coeff, exponent)| PowerTerm { coeff, exponent })
                .collect(),
        })
    }

    /// Homogeneous F(s) = |s|^p / p.
    pub fn power(p: f64) -> Result<Self> {
        Nonlinearity::new(vec![(1.0, p)])
    }

    pub fn terms(&self) -> &[PowerTerm] {
        &self.terms
    }

    /// The exponent when the nonlinearity is a single power term.
    pub fn single_exponent(&self) -> Option<f64> {
        match self.terms.as_slice() {
            [t] => Some(t.exponent),
            _ => None,
        }
    }

    /// (F(s), F'(s)).
    #[inline]
    pub fn eval(&self, s: f64) -> (f64, f64) {
        if s == 0.0 {
            return (0.0, 0.0);
        }
        let a = s.abs();
        let sign = if s > 0.0 { 1.0 } else { -1.0 };
        let mut f = 0.0;
        let mut fp = 0.0;
        for t in &self.terms {
            let pow = a.powf(t.exponent - 1.0);
            f += t.coeff * pow * a / t.exponent;
            fp += t.coeff * pow * sign;
        }
        (f, fp)
    }

    #[inline]
    pub fn f(&self, s: f64) -> f64 {
        self.eval(s).0
    }

    #[inline]
    pub fn f_prime(&self, s: f64) -> f64 {
        self.eval(s).1
    }

    /// Samplewise F(u).
    pub fn f_field(&self, u: &Field) -> Field {
        u.map(|s| self.f(s))
    }

    /// Samplewise F'(u).
    pub fn f_prime_field(&self, u: &Field) -> Field {
        u.map(|s| self.f_prime(s))
    }
}

/// Equation parameters: dimension, Riesz order, nonlinearity.
#[derive(Clone, Debug)]
pub struct ProblemSpec {
    dim: usize,
    alpha: f64,
    nonlinearity: Nonlinearity,
}

impl ProblemSpec {
    pub fn new(dim: usize, alpha: f64, nonlinearity: Nonlinearity) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::param("N", format!("dimension must be 2 or 3, got {dim}")));
        }
        if !alpha.is_finite() || alpha <= 0.0 || alpha >= dim as f64 {
            return Err(Error::param(
                "alpha",
                format!("Riesz order must lie in (0, {dim}), got {alpha}"),
            ));
        }
        Ok(ProblemSpec {
            dim,
            alpha,
            nonlinearity,
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    #[inline]
    pub fn nonlinearity(&self) -> &Nonlinearity {
        &self.nonlinearity
    }
}

/// Nonlocal interaction D(u) = <I_alpha * F(u), F(u)>, nonnegative and zero
/// only for u = 0.
pub fn nonlocal_term(u: &Field, spec: &ProblemSpec) -> Result<f64> {
    let kernel = cached_kernel(*u.grid(), spec.alpha())?;
    let fu = spec.nonlinearity().f_field(u);
    let conv = kernel.convolve(&fu)?;
    l2_inner(&conv, &fu)
}

/// Energy I(u) = 1/2 (grad_sq + mass_sq) - 1/2 D(u).
pub fn energy(u: &Field, spec: &ProblemSpec) -> Result<f64> {
    let s = h1_seminorms(u);
    Ok(0.5 * s.h1_sq() - 0.5 * nonlocal_term(u, spec)?)
}

/// Euler-Lagrange residual r(u) = (-Delta + 1) u - (I_alpha * F(u)) F'(u),
/// the L^2 gradient of the energy; vanishes exactly at discrete solutions.
pub fn el_residual(u: &Field, spec: &ProblemSpec) -> Result<Field> {
    let kernel = cached_kernel(*u.grid(), spec.alpha())?;
    let nl = spec.nonlinearity();
    let fu = nl.f_field(u);
    let conv = kernel.convolve(&fu)?;
    let linear = helmholtz_apply(u);
    let values: Vec<f64> = linear
        .values()
        .iter()
        .zip(conv.values())
        .zip(u.values())
        .map(|((&lin, &cv), &s)| lin - cv * nl.f_prime(s))
        .collect();
    Ok(Field::from_parts(*u.grid(), values))
}

/// Nehari functional N(u) = grad_sq + mass_sq - <I_alpha * F(u), F'(u) u>,
/// obtained by testing the equation against u; vanishes on solutions.
pub fn nehari(u: &Field, spec: &ProblemSpec) -> Result<f64> {
    let kernel = cached_kernel(*u.grid(), spec.alpha())?;
    let nl = spec.nonlinearity();
    let fu = nl.f_field(u);
    let conv = kernel.convolve(&fu)?;
    let fpu_u = u.map(|s| nl.f_prime(s) * s);
    let s = h1_seminorms(u);
    Ok(s.h1_sq() - l2_inner(&conv, &fpu_u)?)
}

/// Pohozaev functional
/// P(u) = (N-2)/2 grad_sq + N/2 mass_sq - (N+alpha)/2 D(u);
/// vanishes on solutions of the continuum equation.
pub fn pohozaev(u: &Field, spec: &ProblemSpec) -> Result<f64> {
    let s = h1_seminorms(u);
    let d = nonlocal_term(u, spec)?;
    Ok(pohozaev_from_coefficients(
        s.grad_sq,
        s.mass_sq,
        d,
        spec.dim(),
        spec.alpha(),
    ))
}

#[inline]
fn pohozaev_from_coefficients(a: f64, b: f64, c: f64, dim: usize, alpha: f64) -> f64 {
    let n = dim as f64;
    0.5 * (n - 2.0) * a + 0.5 * n * b - 0.5 * (n + alpha) * c
}

/// Scaled functional of the min-max construction,
/// I~(sigma, v) = e^{(N-2) sigma}/2 A + e^{N sigma}/2 B - e^{(N+alpha) sigma}/2 C,
/// the energy of v(e^{-sigma} x) in closed form (no resampling).
pub fn scaled_energy(sigma: f64, v: &Field, spec: &ProblemSpec) -> Result<f64> {
    let s = h1_seminorms(v);
    let c = nonlocal_term(v, spec)?;
    Ok(dilation_energy(
        sigma.exp(),
        s.grad_sq,
        s.mass_sq,
        c,
        spec.dim(),
        spec.alpha(),
    ))
}

/// Closed-form energy of the dilation v(x/t):
/// t^{N-2}/2 A + t^N/2 B - t^{N+alpha}/2 C.
#[inline]
pub fn dilation_energy(t: f64, a: f64, b: f64, c: f64, dim: usize, alpha: f64) -> f64 {
    let n = dim as f64;
    0.5 * t.powf(n - 2.0) * a + 0.5 * t.powf(n) * b - 0.5 * t.powf(n + alpha) * c
}

/// The three dilation coefficients of a field:
/// A = grad_sq, B = mass_sq, C = D(v).
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DilationCoefficients {
    pub grad_sq: f64,
    pub mass_sq: f64,
    pub nonlocal: f64,
}

impl DilationCoefficients {
    pub fn of(v: &Field, spec: &ProblemSpec) -> Result<Self> {
        let s = h1_seminorms(v);
        Ok(DilationCoefficients {
            grad_sq: s.grad_sq,
            mass_sq: s.mass_sq,
            nonlocal: nonlocal_term(v, spec)?,
        })
    }

    /// Pohozaev value of the coefficient triple.
    pub fn pohozaev(&self, dim: usize, alpha: f64) -> f64 {
        pohozaev_from_coefficients(self.grad_sq, self.mass_sq, self.nonlocal, dim, alpha)
    }

    /// Whether the triple satisfies the Pohozaev constraint
    /// (N+alpha) C = (N-2) A + N B within `SOLUTION_TRIPLE_TOL` relative.
    pub fn is_solution_triple(&self, dim: usize, alpha: f64) -> bool {
        let scale = self.grad_sq + self.mass_sq;
        scale > 0.0 && self.pohozaev(dim, alpha).abs() <= SOLUTION_TRIPLE_TOL * scale
    }
}

/// Sampled dilation-path energies with their defining coefficients.
#[derive(Clone, Debug)]
pub struct PathProfile {
    pub t_values: Vec<f64>,
    pub energies: Vec<f64>,
    pub coefficients: DilationCoefficients,
    /// Splice point of the two-branch N=2 path, when applicable.
    pub t0: Option<f64>,
    /// True when the coefficients satisfy the Pohozaev constraint, so the
    /// profile's interior maximum is pinned at t = 1. Profiles of
    /// non-solution fields are still returned, flagged false.
    pub solution_triple: bool,
}

impl PathProfile {
    /// Index of the largest sampled energy (first of ties).
    pub fn max_index(&self) -> usize {
        self.energies
            .iter()
            .enumerate()
            .max_by(|(_, x), (_, y)| x.partial_cmp(y).expect("finite energies"))
            .map(|(i, _)| i)
            .expect("nonempty profile")
    }

    /// Profile from explicit coefficients on a positive t-grid.
    pub fn from_coefficients(
        coefficients: DilationCoefficients,
        dim: usize,
        alpha: f64,
        t_values: &[f64],
    ) -> Result<Self> {
        if t_values.is_empty() {
            return Err(Error::param("t_values", "need at least one dilation parameter"));
        }
        if t_values.iter().any(|&t| !t.is_finite() || t <= 0.0) {
            return Err(Error::param("t_values", "dilation parameters must be positive"));
        }
        let energies = t_values
            .iter()
            .map(|&t| {
                dilation_energy(
                    t,
                    coefficients.grad_sq,
                    coefficients.mass_sq,
                    coefficients.nonlocal,
                    dim,
                    alpha,
                )
            })
            .collect();
        Ok(PathProfile {
            t_values: t_values.to_vec(),
            energies,
            solution_triple: coefficients.is_solution_triple(dim, alpha),
            coefficients,
            t0: None,
        })
    }
}

/// Energies along the dilation path v(x/t), computed in closed form from the
/// coefficient triple of v; never by resampling, so there is no interpolation
/// or aliasing error.
pub fn dilation_profile(v: &Field, spec: &ProblemSpec, t_values: &[f64]) -> Result<PathProfile> {
    if v.is_zero() {
        return Err(Error::DegenerateField("dilation path of the zero field".into()));
    }
    let coefficients = DilationCoefficients::of(v, spec)?;
    PathProfile::from_coefficients(coefficients, spec.dim(), spec.alpha(), t_values)
}

/// Two-branch path for N = 2, where the plain dilation is not continuous at
/// t = 0: for t > t0 the dilation closed form; for t <= t0 the amplitude
/// segment gamma(t) = (t/t0) v(x/t0), whose energy for a single power term p
/// is (t/t0)^2 (A + t0^2 B)/2 - (t/t0)^{2p} t0^{2+alpha} C / 2. The two
/// branches agree at t0. Values t = 0 are admitted on the amplitude branch.
pub fn path_n2(v: &Field, spec: &ProblemSpec, t0: f64, t_values: &[f64]) -> Result<PathProfile> {
    if spec.dim() != 2 {
        return Err(Error::param("N", "the spliced path is defined for N = 2"));
    }
    let p = spec
        .nonlinearity()
        .single_exponent()
        .ok_or(Error::MultiTermNonlinearity)?;
    if !(t0 > 0.0 && t0 < 1.0) {
        return Err(Error::param("t0", format!("splice point must lie in (0, 1), got {t0}")));
    }
    if v.is_zero() {
        return Err(Error::DegenerateField("spliced path of the zero field".into()));
    }
    if t_values.is_empty() {
        return Err(Error::param("t_values", "need at least one dilation parameter"));
    }
    if t_values.iter().any(|&t| !t.is_finite() || t < 0.0) {
        return Err(Error::param("t_values", "dilation parameters must be nonnegative"));
    }
    let coefficients = DilationCoefficients::of(v, spec)?;
    let (a, b, c) = (
        coefficients.grad_sq,
        coefficients.mass_sq,
        coefficients.nonlocal,
    );
    let alpha = spec.alpha();
    let energies = t_values
        .iter()
        .map(|&t| {
            if t > t0 {
                dilation_energy(t, a, b, c, 2, alpha)
            } else {
                // Amplitude scaling of w = v(x/t0): in N = 2 the dilation
                // leaves the gradient term invariant, scales the mass by
                // t0^2 and the nonlocal term by t0^{2+alpha}; the amplitude
                // factor s = t/t0 then scales them by s^2 and s^{2p}.
                let s = t / t0;
                0.5 * s * s * (a + t0 * t0 * b)
                    - 0.5 * s.powf(2.0 * p) * t0.powf(2.0 + alpha) * c
            }
        })
        .collect();
    Ok(PathProfile {
        t_values: t_values.to_vec(),
        energies,
        solution_triple: coefficients.is_solution_triple(2, alpha),
        coefficients,
        t0: Some(t0),
    })
}

/// Location and value of the maximum of the closed-form dilation energy over
/// t > 0, by golden-section search on log t after a bracketing scan.
pub fn profile_peak(coefficients: &DilationCoefficients, dim: usize, alpha: f64) -> (f64, f64) {
    let (a, b, c) = (
        coefficients.grad_sq,
        coefficients.mass_sq,
        coefficients.nonlocal,
    );
    let g = |log_t: f64| dilation_energy(log_t.exp(), a, b, c, dim, alpha);
    let (mut lo, mut hi) = (-30.0f64, 30.0f64);
    let coarse = 600;
    let mut best = lo;
    let mut best_val = f64::NEG_INFINITY;
    for i in 0..=coarse {
        let x = lo + (hi - lo) * i as f64 / coarse as f64;
        let v = g(x);
        if v > best_val {
            best_val = v;
            best = x;
        }
    }
    let step = (hi - lo) / coarse as f64;
    lo = best - step;
    hi = best + step;
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = g(x1);
    let mut f2 = g(x2);
    for _ in 0..200 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = g(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = g(x1);
        }
        if (hi - lo).abs() < 1e-14 {
            break;
        }
    }
    let log_t = 0.5 * (lo + hi);
    (log_t.exp(), g(log_t))
}

/// Outcome of the analytic hypothesis checks for a power-sum nonlinearity.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct HypothesisReport {
    /// F does not vanish identically (automatic for positive coefficients).
    pub nontrivial: bool,
    /// Growth bound on F': power bounds for N = 3, the exponential-class
    /// bound for N = 2 (any power term beyond the lower threshold).
    pub growth: bool,
    /// Subcritical limits of F at 0 and infinity.
    pub subcritical: bool,
    /// Open interval of admissible exponents; the upper endpoint is +inf
    /// when N = 2.
    pub interval_lo: f64,
    pub interval_hi: f64,
    pub pass: bool,
}

/// Decide the hypotheses for the power-sum family. For N = 3 the growth and
/// subcriticality conditions hold jointly iff every exponent lies in the open
/// interval (1 + alpha/N, (N+alpha)/(N-2)); for N = 2 iff every exponent
/// exceeds 1 + alpha/2 (power growth trivially satisfies the exponential
/// bound).
pub fn hypothesis_check(spec: &ProblemSpec) -> HypothesisReport {
    let n = spec.dim() as f64;
    let alpha = spec.alpha();
    let terms = spec.nonlinearity().terms();
    let (interval_lo, interval_hi) = if spec.dim() == 2 {
        (1.0 + alpha / 2.0, f64::INFINITY)
    } else {
        (1.0 + alpha / n, (n + alpha) / (n - 2.0))
    };
    let growth = terms
        .iter()
        .all(|t| t.exponent >= interval_lo && t.exponent <= interval_hi);
    let subcritical = terms
        .iter()
        .all(|t| t.exponent > interval_lo && t.exponent < interval_hi);
    HypothesisReport {
        nontrivial: true,
        growth,
        subcritical,
        interval_lo,
        interval_hi,
        pass: growth && subcritical,
    }
}

/// Coefficients and value of the linear combination of the Nehari and
/// Pohozaev identities that forces u = 0 outside the existence range:
/// combo = ((N-2)/2 - (N+alpha)/(2p)) grad_sq + (N/2 - (N+alpha)/(2p)) mass_sq.
#[derive(Clone, Copy, Debug)]
pub struct IdentityCombination {
    pub grad_coef: f64,
    pub mass_coef: f64,
    pub combo: f64,
}

pub fn identity_combination(u: &Field, spec: &ProblemSpec) -> Result<IdentityCombination> {
    let p = spec
        .nonlinearity()
        .single_exponent()
        .ok_or(Error::MultiTermNonlinearity)?;
    let n = spec.dim() as f64;
    let alpha = spec.alpha();
    let grad_coef = 0.5 * (n - 2.0) - (n + alpha) / (2.0 * p);
    let mass_coef = 0.5 * n - (n + alpha) / (2.0 * p);
    let s = h1_seminorms(u);
    Ok(IdentityCombination {
        grad_coef,
        mass_coef,
        combo: grad_coef * s.grad_sq + mass_coef * s.mass_sq,
    })
}

/// Seminorms together with the nonlocal term, for callers that need all
/// three functionals at once.
pub fn functional_parts(u: &Field, spec: &ProblemSpec) -> Result<(Seminorms, f64)> {
    let s = h1_seminorms(u);
    let d = nonlocal_term(u, spec)?;
    Ok((s, d))
}

/// Relative residual |P(u)| / (grad_sq + mass_sq).
pub fn pohozaev_rel(u: &Field, spec: &ProblemSpec) -> Result<f64> {
    let s = h1_seminorms(u);
    Ok(pohozaev(u, spec)?.abs() / s.h1_sq())
}

/// Relative residual |N(u)| / (grad_sq + mass_sq).
pub fn nehari_rel(u: &Field, spec: &ProblemSpec) -> Result<f64> {
    let s = h1_seminorms(u);
    Ok(nehari(u, spec)?.abs() / s.h1_sq())
}

/// Relative Euler-Lagrange residual ||r(u)||_2 / ||u||_{H^1}.
pub fn el_residual_rel(u: &Field, spec: &ProblemSpec) -> Result<f64> {
    let r = el_residual(u, spec)?;
    let s = h1_seminorms(u);
    Ok(l2_norm_sq(&r).sqrt() / s.h1_sq().sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(grid: crate::grid::GridSpec, seed: u64) -> Field {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let envelope = Field::gaussian(grid, 1.0, 2.0).unwrap();
        let values: Vec<f64> = envelope
            .values()
            .iter()
            .map(|&e| e * rng.random_range(-1.0..1.0))
            .collect();
        Field::new(grid, values).unwrap()
    }

    #[test]
    fn nonlinearity_rejects_bad_terms() {
        assert!(Nonlinearity::new(vec![]).is_err());
        assert!(Nonlinearity::new(vec![(0.0, 2.0)]).is_err());
        assert!(Nonlinearity::new(vec![(-1.0, 2.0)]).is_err());
        assert!(Nonlinearity::new(vec![(1.0, 1.0)]).is_err());
        assert!(Nonlinearity::new(vec![(1.0, 0.5)]).is_err());
    }

    #[test]
    fn power_evaluation_matches_hand_values() {
        let quad = Nonlinearity::power(2.0).unwrap();
        assert_eq!(quad.eval(3.0), (4.5, 3.0));
        let cubic = Nonlinearity::power(3.0).unwrap();
        let (f, fp) = cubic.eval(-2.0);
        assert!((f - 8.0 / 3.0).abs() < 1e-15);
        assert!((fp + 4.0).abs() < 1e-15);
        assert_eq!(quad.eval(0.0), (0.0, 0.0));
        assert_eq!(cubic.eval(0.0), (0.0, 0.0));
    }

    #[test]
    fn f_is_even_and_f_prime_is_odd() {
        let nl = Nonlinearity::new(vec![(1.0, 2.0), (0.5, 3.5)]).unwrap();
        for s in [0.1, 0.7, 1.0, 2.3, 17.0] {
            let (f_pos, fp_pos) = nl.eval(s);
            let (f_neg, fp_neg) = nl.eval(-s);
            assert_eq!(f_pos, f_neg);
            assert_eq!(fp_pos, -fp_neg);
            assert!(f_pos >= 0.0);
        }
    }

    #[test]
    fn problem_spec_validates_alpha() {
        let nl = Nonlinearity::power(2.0).unwrap();
        assert!(ProblemSpec::new(3, 0.0, nl.clone()).is_err());
        assert!(ProblemSpec::new(3, 3.0, nl.clone()).is_err());
        assert!(ProblemSpec::new(2, 2.0, nl.clone()).is_err());
        assert!(ProblemSpec::new(4, 1.0, nl.clone()).is_err());
        assert!(ProblemSpec::new(3, 2.0, nl).is_ok());
    }

    #[test]
    fn nonlocal_term_is_zero_only_at_zero() {
        let grid = make_grid(2, 16, 10.0).unwrap();
        let spec = ProblemSpec::new(2, 1.0, Nonlinearity::power(2.5).unwrap()).unwrap();
        assert_eq!(nonlocal_term(&Field::zeros(grid), &spec).unwrap(), 0.0);
        let u = Field::gaussian(grid, 1.0, 1.0).unwrap();
        assert!(nonlocal_term(&u, &spec).unwrap() > 0.0);
    }

    #[test]
    fn nonlocal_term_homogeneity() {
        let grid = make_grid(2, 16, 10.0).unwrap();
        let p = 2.5;
        let spec = ProblemSpec::new(2, 1.0, Nonlinearity::power(p).unwrap()).unwrap();
        let u = random_field(grid, 5);
        let base = nonlocal_term(&u, &spec).unwrap();
        for a in [0.5f64, 2.0] {
            let scaled = nonlocal_term(&u.scale(a), &spec).unwrap();
            let expect = a.powf(2.0 * p) * base;
            assert!(
                (scaled - expect).abs() <= 1e-10 * expect.abs(),
                "a={a}: {scaled} vs {expect}"
            );
        }
    }

    #[test]
    fn nonlocal_term_matches_direct_backend() {
        let grid = make_grid(3, 16, 12.0).unwrap();
        let spec = ProblemSpec::new(3, 2.0, Nonlinearity::power(2.0).unwrap()).unwrap();
        let u = Field::gaussian(grid, 1.0, 1.0).unwrap();
        let fast = nonlocal_term(&u, &spec).unwrap();
        let kernel = cached_kernel(grid, 2.0).unwrap();
        let fu = spec.nonlinearity().f_field(&u);
        let direct = l2_inner(&kernel.convolve_direct(&fu).unwrap(), &fu).unwrap();
        assert!((fast - direct).abs() <= 1e-10 * direct.abs());
    }

    #[test]
    fn energy_of_zero_and_small_amplitude_positivity() {
        let grid = make_grid(2, 16, 10.0).unwrap();
        let spec = ProblemSpec::new(2, 1.0, Nonlinearity::power(2.5).unwrap()).unwrap();
        assert_eq!(energy(&Field::zeros(grid), &spec).unwrap(), 0.0);
        let u = Field::gaussian(grid, 1.0, 1.5).unwrap();
        // The quadratic term dominates a^2 vs a^{2p} for small amplitudes.
        for a in [1e-1, 1e-2, 1e-3] {
            assert!(energy(&u.scale(a), &spec).unwrap() > 0.0);
        }
    }

    #[test]
    fn homogeneity_ladder_splits_energy() {
        let grid = make_grid(2, 16, 10.0).unwrap();
        let p = 2.5;
        let spec = ProblemSpec::new(2, 1.0, Nonlinearity::power(p).unwrap()).unwrap();
        let u = random_field(grid, 9);
        let quad = h1_seminorms(&u).h1_sq();
        let nl = nonlocal_term(&u, &spec).unwrap();
        for a in [0.5f64, 1.0, 2.0] {
            let e = energy(&u.scale(a), &spec).unwrap();
            let expect = 0.5 * a * a * quad - 0.5 * a.powf(2.0 * p) * nl;
            assert!(
                (e - expect).abs() <= 1e-10 * expect.abs().max(1.0),
                "a={a}: {e} vs {expect}"
            );
        }
    }

    #[test]
    fn el_residual_of_zero_field_vanishes() {
        let grid = make_grid(2, 16, 10.0).unwrap();
        let spec = ProblemSpec::new(2, 1.0, Nonlinearity::power(2.5).unwrap()).unwrap();
        let r = el_residual(&Field::zeros(grid), &spec).unwrap();
        assert!(r.is_zero());
    }

    #[test]
    fn el_residual_is_the_energy_gradient() {
        // <r(u), w> matches central finite differences of the energy.
        let grid = make_grid(2, 16, 10.0).unwrap();
        let spec = ProblemSpec::new(2, 1.0, Nonlinearity::power(2.5).unwrap()).unwrap();
        for seed in 0..20u64 {
            let u = random_field(grid, 100 + seed);
            let w = random_field(grid, 200 + seed);
            let analytic = l2_inner(&el_residual(&u, &spec).unwrap(), &w).unwrap();
            let eps = 1e-5;
            let e_plus = energy(&u.axpy(eps, &w).unwrap(), &spec).unwrap();
            let e_minus = energy(&u.axpy(-eps, &w).unwrap(), &spec).unwrap();
            let fd = (e_plus - e_minus) / (2.0 * eps);
            assert!(
                (analytic - fd).abs() <= 1e-6 * analytic.abs().max(1e-12),
                "seed {seed}: analytic {analytic} vs fd {fd}"
            );
        }
    }

    #[test]
    fn nehari_matches_homogeneous_shortcut() {
        // For a single power term, F'(s) s = p F(s), so N = quad - p D.
        let grid = make_grid(2, 16, 10.0).unwrap();
        let p = 2.5;
        let spec = ProblemSpec::new(2, 1.0, Nonlinearity::power(p).unwrap()).unwrap();
        let u = random_field(grid, 31);
        let n_val = nehari(&u, &spec).unwrap();
        let quad = h1_seminorms(&u).h1_sq();
        let d = nonlocal_term(&u, &spec).unwrap();
        let expect = quad - p * d;
        assert!((n_val - expect).abs() <= 1e-12 * expect.abs().max(1.0));
        assert_eq!(nehari(&Field::zeros(grid), &spec).unwrap(), 0.0);
    }

    #[test]
    fn pohozaev_drops_gradient_term_in_2d() {
        let grid = make_grid(2, 16, 10.0).unwrap();
        let alpha = 1.3;
        let spec = ProblemSpec::new(2, alpha, Nonlinearity::power(2.5).unwrap()).unwrap();
        let u = random_field(grid, 41);
        let p_val = pohozaev(&u, &spec).unwrap();
        let s = h1_seminorms(&u);
        let d = nonlocal_term(&u, &spec).unwrap();
        let expect = s.mass_sq - 0.5 * (2.0 + alpha) * d;
        assert!((p_val - expect).abs() <= 1e-12 * expect.abs().max(1.0));
        assert_eq!(pohozaev(&Field::zeros(grid), &spec).unwrap(), 0.0);
    }

    #[test]
    fn scaled_energy_at_sigma_zero_is_the_energy() {
        let grid = make_grid(2, 16, 10.0).unwrap();
        let spec = ProblemSpec::new(2, 1.0, Nonlinearity::power(2.5).unwrap()).unwrap();
        let u = random_field(grid, 51);
        let e = energy(&u, &spec).unwrap();
        let s0 = scaled_energy(0.0, &u, &spec).unwrap();
        assert!((e - s0).abs() <= 1e-12 * e.abs().max(1.0));
    }

    #[test]
    fn scaled_energy_closed_form_example() {
        // N=3, alpha=1, (A,B,C) = (1,1,1): e^s/2 + e^{3s}/2 - e^{4s}/2.
        let at = |sigma: f64| dilation_energy(sigma.exp(), 1.0, 1.0, 1.0, 3, 1.0);
        assert!((at(0.0) - 0.5).abs() < 1e-15);
        for sigma in [0.5f64, 1.0, 2.0] {
            let expect =
                0.5 * sigma.exp() + 0.5 * (3.0 * sigma).exp() - 0.5 * (4.0 * sigma).exp();
            assert!((at(sigma) - expect).abs() < 1e-12 * expect.abs());
        }
        // Dominant exponent N + alpha drives the energy to -infinity.
        assert!(at(10.0) < -1e10);
    }

    #[test]
    fn scaled_energy_equals_profile_at_exp_sigma() {
        let grid = make_grid(2, 16, 10.0).unwrap();
        let spec = ProblemSpec::new(2, 1.0, Nonlinearity::power(2.5).unwrap()).unwrap();
        let u = random_field(grid, 61);
        let sigmas = [-0.7f64, -0.1, 0.0, 0.4, 1.1];
        let t_values: Vec<f64> = sigmas.iter().map(|s| s.exp()).collect();
        let profile = dilation_profile(&u, &spec, &t_values).unwrap();
        for (i, &sigma) in sigmas.iter().enumerate() {
            let direct = scaled_energy(sigma, &u, &spec).unwrap();
            assert!(
                (profile.energies[i] - direct).abs() <= 1e-12 * direct.abs().max(1.0),
                "sigma {sigma}"
            );
        }
    }

    #[test]
    fn profile_derivative_at_one_is_pohozaev() {
        // d/dt of the closed form at t = 1 equals P(v) exactly.
        let grid = make_grid(3, 16, 10.0).unwrap();
        let spec = ProblemSpec::new(3, 1.5, Nonlinearity::power(2.0).unwrap()).unwrap();
        let u = random_field(grid, 71);
        let coeffs = DilationCoefficients::of(&u, &spec).unwrap();
        let n = 3.0;
        let alpha = 1.5;
        let derivative_at_one = 0.5 * (n - 2.0) * coeffs.grad_sq + 0.5 * n * coeffs.mass_sq
            - 0.5 * (n + alpha) * coeffs.nonlocal;
        let p_val = pohozaev(&u, &spec).unwrap();
        assert!((derivative_at_one - p_val).abs() <= 1e-12 * p_val.abs().max(1.0));
    }

    #[test]
    fn profile_of_solution_triple_peaks_at_one() {
        // With C = ((N-2)A + NB)/(N+alpha) the profile is the two-factor
        // form, each factor maximized at t = 1.
        let (dim, alpha) = (3usize, 2.0);
        let (a, b) = (0.8, 1.7);
        let n = dim as f64;
        let c = ((n - 2.0) * a + n * b) / (n + alpha);
        let coeffs = DilationCoefficients {
            grad_sq: a,
            mass_sq: b,
            nonlocal: c,
        };
        let t_values: Vec<f64> = (0..97)
            .map(|i| 0.25 * (16.0f64).powf(i as f64 / 96.0))
            .collect();
        let profile = PathProfile::from_coefficients(coeffs, dim, alpha, &t_values).unwrap();
        assert!(profile.solution_triple);
        // t = 1 is the middle sample of the symmetric log grid.
        assert_eq!(profile.max_index(), 48);
        assert!((profile.t_values[48] - 1.0).abs() < 1e-12);
        // Against the factored form: (t/2 - (N-2) t^{N+a}/(2(N+a))) A
        //                          + (t^N/2 - N t^{N+a}/(2(N+a))) B.
        for (&t, &e) in profile.t_values.iter().zip(&profile.energies) {
            let fa = 0.5 * t.powf(n - 2.0) - (n - 2.0) * t.powf(n + alpha) / (2.0 * (n + alpha));
            let fb = 0.5 * t.powf(n) - n * t.powf(n + alpha) / (2.0 * (n + alpha));
            let expect = fa * a + fb * b;
            assert!((e - expect).abs() <= 1e-12 * expect.abs().max(1.0));
            if (t - 1.0).abs() > 1e-12 {
                assert!(e < profile.energies[48]);
            }
        }
    }

    #[test]
    fn profile_flags_non_solution_triples() {
        // (A,B,C) = (0,1,1) at N=2, alpha=2: profile t^2/2 - t^4/2 has its
        // maximum at 1/sqrt(2), and the Pohozaev constraint C = B/2 fails.
        let coeffs = DilationCoefficients {
            grad_sq: 0.0,
            mass_sq: 1.0,
            nonlocal: 1.0,
        };
        let t_values: Vec<f64> = (1..=200).map(|i| i as f64 * 0.01).collect();
        let profile = PathProfile::from_coefficients(coeffs, 2, 2.0, &t_values).unwrap();
        assert!(!profile.solution_triple);
        let t_max = profile.t_values[profile.max_index()];
        assert!((t_max - 1.0 / 2.0f64.sqrt()).abs() < 0.01);
        // Peak location is sqrt(eps)-limited for value-based search; the
        // peak value itself is quadratically insensitive.
        let (t_peak, peak_val) = profile_peak(&coeffs, 2, 2.0);
        assert!((t_peak - 1.0 / 2.0f64.sqrt()).abs() < 1e-6);
        assert!((peak_val - 0.125).abs() < 1e-14);
    }

    #[test]
    fn profile_rejects_bad_inputs() {
        let grid = make_grid(2, 16, 10.0).unwrap();
        let spec = ProblemSpec::new(2, 1.0, Nonlinearity::power(2.5).unwrap()).unwrap();
        let u = Field::gaussian(grid, 1.0, 1.0).unwrap();
        assert!(dilation_profile(&Field::zeros(grid), &spec, &[1.0]).is_err());
        assert!(dilation_profile(&u, &spec, &[]).is_err());
        assert!(dilation_profile(&u, &spec, &[0.0]).is_err());
        assert!(dilation_profile(&u, &spec, &[-1.0]).is_err());
    }

    #[test]
    fn spliced_path_is_continuous_and_vanishes_at_zero() {
        let grid = make_grid(2, 16, 12.0).unwrap();
        let spec = ProblemSpec::new(2, 1.0, Nonlinearity::power(2.5).unwrap()).unwrap();
        let u = Field::gaussian(grid, 1.0, 1.5).unwrap();
        let t0 = 0.1;
        let profile = path_n2(&u, &spec, t0, &[0.0, t0]).unwrap();
        assert_eq!(profile.energies[0], 0.0);
        let below = profile.energies[1];
        let coeffs = profile.coefficients;
        let above = dilation_energy(
            t0,
            coeffs.grad_sq,
            coeffs.mass_sq,
            coeffs.nonlocal,
            2,
            spec.alpha(),
        );
        assert!(
            (below - above).abs() <= 1e-12 * above.abs().max(1.0),
            "splice mismatch: {below} vs {above}"
        );
    }

    #[test]
    fn spliced_path_validates_inputs() {
        let grid = make_grid(2, 16, 12.0).unwrap();
        let spec2 = ProblemSpec::new(2, 1.0, Nonlinearity::power(2.5).unwrap()).unwrap();
        let spec3 = ProblemSpec::new(3, 1.0, Nonlinearity::power(2.5).unwrap()).unwrap();
        let grid3 = make_grid(3, 16, 12.0).unwrap();
        let u2 = Field::gaussian(grid, 1.0, 1.5).unwrap();
        let u3 = Field::gaussian(grid3, 1.0, 1.5).unwrap();
        assert!(path_n2(&u3, &spec3, 0.1, &[1.0]).is_err()); // N != 2
        assert!(path_n2(&u2, &spec2, 0.0, &[1.0]).is_err()); // t0 out of range
        assert!(path_n2(&u2, &spec2, 1.0, &[1.0]).is_err());
        let multi = ProblemSpec::new(
            2,
            1.0,
            Nonlinearity::new(vec![(1.0, 2.0), (1.0, 3.0)]).unwrap(),
        )
        .unwrap();
        assert!(matches!(
            path_n2(&u2, &multi, 0.1, &[1.0]),
            Err(Error::MultiTermNonlinearity)
        ));
    }

    #[test]
    fn hypothesis_check_reproduces_known_ranges() {
        let pass = hypothesis_check(
            &ProblemSpec::new(3, 2.0, Nonlinearity::power(2.0).unwrap()).unwrap(),
        );
        assert!(pass.pass);
        assert!((pass.interval_lo - 5.0 / 3.0).abs() < 1e-15);
        assert!((pass.interval_hi - 5.0).abs() < 1e-15);

        let fail_hi = hypothesis_check(
            &ProblemSpec::new(3, 1.0, Nonlinearity::power(4.5).unwrap()).unwrap(),
        );
        assert!(!fail_hi.pass);
        assert!((fail_hi.interval_hi - 4.0).abs() < 1e-15);

        let fail_2d = hypothesis_check(
            &ProblemSpec::new(2, 1.0, Nonlinearity::power(1.4).unwrap()).unwrap(),
        );
        assert!(!fail_2d.pass);
        assert!((fail_2d.interval_lo - 1.5).abs() < 1e-15);
        assert!(fail_2d.interval_hi.is_infinite());

        let pass_2d = hypothesis_check(
            &ProblemSpec::new(2, 1.0, Nonlinearity::power(2.5).unwrap()).unwrap(),
        );
        assert!(pass_2d.pass);
    }

    #[test]
    fn identity_combination_limit_coefficients() {
        let grid = make_grid(3, 16, 10.0).unwrap();
        let u = Field::gaussian(grid, 1.0, 1.0).unwrap();
        // p = 1 + alpha/N makes (N+alpha)/(2p) = N/2: coefficients (-1, 0).
        let alpha = 1.5;
        let spec = ProblemSpec::new(3, alpha, Nonlinearity::power(1.0 + alpha / 3.0).unwrap())
            .unwrap();
        let ic = identity_combination(&u, &spec).unwrap();
        assert!((ic.grad_coef + 1.0).abs() < 1e-14);
        assert!(ic.mass_coef.abs() < 1e-14);
        // p = (N+alpha)/(N-2) makes (N+alpha)/(2p) = (N-2)/2: coefficients (0, 1).
        let spec_hi =
            ProblemSpec::new(3, alpha, Nonlinearity::power(3.0 + alpha).unwrap()).unwrap();
        let ic_hi = identity_combination(&u, &spec_hi).unwrap();
        assert!(ic_hi.grad_coef.abs() < 1e-14);
        assert!((ic_hi.mass_coef - 1.0).abs() < 1e-14);
    }

    #[test]
    fn identity_combination_relates_pohozaev_and_nehari() {
        // combo = P(u) - (N+alpha)/(2p) N(u) exactly, for any field.
        let grid = make_grid(2, 16, 10.0).unwrap();
        let p = 2.5;
        let alpha = 1.0;
        let spec = ProblemSpec::new(2, alpha, Nonlinearity::power(p).unwrap()).unwrap();
        let u = random_field(grid, 81);
        let ic = identity_combination(&u, &spec).unwrap();
        let expect =
            pohozaev(&u, &spec).unwrap() - (2.0 + alpha) / (2.0 * p) * nehari(&u, &spec).unwrap();
        assert!(
            (ic.combo - expect).abs() <= 1e-10 * expect.abs().max(1.0),
            "{} vs {}",
            ic.combo,
            expect
        );
    }

    #[test]
    fn identity_combination_requires_single_term() {
        let grid = make_grid(2, 16, 10.0).unwrap();
        let u = Field::gaussian(grid, 1.0, 1.0).unwrap();
        let spec = ProblemSpec::new(
            2,
            1.0,
            Nonlinearity::new(vec![(1.0, 2.0), (1.0, 3.0)]).unwrap(),
        )
        .unwrap();
        assert!(matches!(
            identity_combination(&u, &spec),
            Err(Error::MultiTermNonlinearity)
        ));
    }
}
