//! Periodic-box discretization, real-valued fields, spectral differentiation,
//! inner products and norms.
//!
//! The box is [-L/2, L/2)^N sampled with M points per axis (spacing h = L/M),
//! values stored row-major. All integrals use the rectangle rule h^N * sum,
//! which is exact for trigonometric polynomials on the periodic grid and so
//! consistent with the spectral derivatives below.

use crate::error::{Error, Result};
use crate::spectral::{fft_forward_cube, fft_inverse_cube, mode};
use rustfft::num_complex::Complex;
use std::f64::consts::PI;

pub const MIN_POINTS_PER_AXIS: usize = 8;
pub const MAX_DIRECT_POINTS_PER_AXIS: usize = 32;

/// Discretization of the box [-L/2, L/2)^N.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    dim: usize,
    points_per_axis: usize,
    box_length: f64,
}

impl GridSpec {
    pub fn new(dim: usize, points_per_axis: usize, box_length: f64) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::param("N", format!("dimension must be 2 or 3, got {dim}")));
        }
        if points_per_axis < MIN_POINTS_PER_AXIS {
            return Err(Error::param(
                "M",
                format!("need at least {MIN_POINTS_PER_AXIS} points per axis, got {points_per_axis}"),
            ));
        }
        if points_per_axis % 2 != 0 {
            return Err(Error::param(
                "M",
                format!("points per axis must be even, got {points_per_axis}"),
            ));
        }
        if !box_length.is_finite() || box_length <= 0.0 {
            return Err(Error::param("L", format!("box length must be positive, got {box_length}")));
        }
        Ok(GridSpec {
            dim,
            points_per_axis,
            box_length,
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    #[inline]
    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    /// Lattice spacing h = L/M.
    #[inline]
    pub fn spacing(&self) -> f64 {
        self.box_length / self.points_per_axis as f64
    }

    /// Total number of samples M^N.
    #[inline]
    pub fn num_points(&self) -> usize {
        self.points_per_axis.pow(self.dim as u32)
    }

    /// Quadrature weight h^N of one cell.
    #[inline]
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Coordinate of sample index j along one axis: -L/2 + j h.
    #[inline]
    pub fn axis_coord(&self, j: usize) -> f64 {
        -0.5 * self.box_length + j as f64 * self.spacing()
    }

    /// Per-axis index of the coordinate origin x = 0.
    #[inline]
    pub fn origin_axis_index(&self) -> usize {
        self.points_per_axis / 2
    }

    /// Decompose a flat row-major index into per-axis indices (unused axes 0).
    #[inline]
    pub fn multi_index(&self, flat: usize) -> [usize; 3] {
        let m = self.points_per_axis;
        match self.dim {
            2 => [flat / m, flat % m, 0],
            _ => [flat / (m * m), (flat / m) % m, flat % m],
        }
    }

    /// Flat row-major index from per-axis indices.
    #[inline]
    pub fn flat_index(&self, idx: [usize; 3]) -> usize {
        let m = self.points_per_axis;
        match self.dim {
            2 => idx[0] * m + idx[1],
            _ => (idx[0] * m + idx[1]) * m + idx[2],
        }
    }

    /// Coordinates of a flat sample index (unused axes 0).
    #[inline]
    pub fn coord(&self, flat: usize) -> [f64; 3] {
        let idx = self.multi_index(flat);
        let mut x = [0.0; 3];
        for a in 0..self.dim {
            x[a] = self.axis_coord(idx[a]);
        }
        x
    }

    /// |x|^2 of a flat sample index.
    #[inline]
    pub fn radius_sq(&self, flat: usize) -> f64 {
        let x = self.coord(flat);
        x[0] * x[0] + x[1] * x[1] + x[2] * x[2]
    }

    /// |2 pi xi|^2 for the spectral index `flat`, with xi = k/L per axis.
    #[inline]
    pub fn freq_sq(&self, flat: usize) -> f64 {
        let idx = self.multi_index(flat);
        let m = self.points_per_axis;
        let mut s = 0.0;
        for a in 0..self.dim {
            let k = mode(idx[a], m) as f64;
            let w = 2.0 * PI * k / self.box_length;
            s += w * w;
        }
        s
    }
}

/// Construct a grid, rejecting invalid parameter combinations.
pub fn make_grid(dim: usize, points_per_axis: usize, box_length: f64) -> Result<GridSpec> {
    GridSpec::new(dim, points_per_axis, box_length)
}

/// Real-valued function sampled on a grid, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: GridSpec,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.num_points() {
            return Err(Error::param(
                "values",
                format!("expected {} samples, got {}", grid.num_points(), values.len()),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("values", "field contains a non-finite sample"));
        }
        Ok(Field { grid, values })
    }

    /// Internal constructor for values produced by validated arithmetic.
    pub(crate) fn from_parts(grid: GridSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.num_points());
        Field { grid, values }
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Field {
            values: vec![0.0; grid.num_points()],
            grid,
        }
    }

    pub fn constant(grid: GridSpec, value: f64) -> Result<Self> {
        Field::new(grid, vec![value; grid.num_points()])
    }

    /// Sample a function of the coordinates.
    pub fn from_fn(grid: GridSpec, f: impl Fn([f64; 3]) -> f64) -> Result<Self> {
        let values: Vec<f64> = (0..grid.num_points()).map(|i| f(grid.coord(i))).collect();
        Field::new(grid, values)
    }

    /// Centered Gaussian a * exp(-|x|^2 / w^2).
    pub fn gaussian(grid: GridSpec, amplitude: f64, width: f64) -> Result<Self> {
        if !width.is_finite() || width <= 0.0 {
            return Err(Error::param("width", format!("must be positive, got {width}")));
        }
        let inv_w2 = 1.0 / (width * width);
        Field::from_fn(grid, |x| {
            amplitude * (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) * inv_w2).exp()
        })
    }

    #[inline]
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field::from_parts(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn scale(&self, a: f64) -> Field {
        self.map(|v| a * v)
    }

    /// self + a * other, failing on grid mismatch.
    pub fn axpy(&self, a: f64, other: &Field) -> Result<Field> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(Field::from_parts(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&u, &v)| u + a * v)
                .collect(),
        ))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, &v| acc.max(v.abs()))
    }
}

/// Rectangle-rule L^2 inner product h^N * sum(u v).
pub fn l2_inner(u: &Field, v: &Field) -> Result<f64> {
    if u.grid != v.grid {
        return Err(Error::GridMismatch);
    }
    let s: f64 = u.values.iter().zip(&v.values).map(|(&a, &b)| a * b).sum();
    Ok(u.grid.cell_volume() * s)
}

pub fn l2_norm_sq(u: &Field) -> f64 {
    l2_inner(u, u).expect("same grid")
}

/// Gradient and mass quadratic forms of a field.
#[derive(Clone, Copy, Debug)]
pub struct Seminorms {
    /// Spectral approximation of the integral of |grad u|^2.
    pub grad_sq: f64,
    /// Rectangle-rule integral of u^2.
    pub mass_sq: f64,
}

impl Seminorms {
    #[inline]
    pub fn h1_sq(&self) -> f64 {
        self.grad_sq + self.mass_sq
    }
}

/// Spectral gradient norm plus quadrature mass norm.
///
/// grad_sq = (h^N / M^N) * sum_k |2 pi xi_k|^2 |u_hat_k|^2 with the
/// unnormalized forward transform, so it converges to the integral of
/// |grad u|^2 under grid refinement.
pub fn h1_seminorms(u: &Field) -> Seminorms {
    let grid = u.grid;
    let mut data: Vec<Complex<f64>> = u.values.iter().map(|&v| Complex::new(v, 0.0)).collect();
    fft_forward_cube(grid.points_per_axis(), grid.dim(), &mut data);
    let factor = grid.cell_volume() / grid.num_points() as f64;
    let grad_sq = factor
        * data
            .iter()
            .enumerate()
            .map(|(i, c)| grid.freq_sq(i) * c.norm_sqr())
            .sum::<f64>();
    Seminorms {
        grad_sq,
        mass_sq: l2_norm_sq(u),
    }
}

/// Parseval form of the squared L^2 norm: (h^N / M^N) * sum_k |u_hat_k|^2.
pub fn spectrum_l2_sq(u: &Field) -> f64 {
    let grid = u.grid;
    let mut data: Vec<Complex<f64>> = u.values.iter().map(|&v| Complex::new(v, 0.0)).collect();
    fft_forward_cube(grid.points_per_axis(), grid.dim(), &mut data);
    grid.cell_volume() / grid.num_points() as f64 * data.iter().map(|c| c.norm_sqr()).sum::<f64>()
}

/// Apply a real Fourier multiplier sym(|2 pi xi|^2) to a field.
pub(crate) fn apply_symbol(u: &Field, sym: impl Fn(f64) -> f64) -> Field {
    let grid = u.grid;
    let mut data: Vec<Complex<f64>> = u.values.iter().map(|&v| Complex::new(v, 0.0)).collect();
    fft_forward_cube(grid.points_per_axis(), grid.dim(), &mut data);
    for (i, c) in data.iter_mut().enumerate() {
        *c *= sym(grid.freq_sq(i));
    }
    fft_inverse_cube(grid.points_per_axis(), grid.dim(), &mut data);
    Field::from_parts(grid, data.iter().map(|c| c.re).collect())
}

/// (-Laplacian + 1) u, spectral.
pub fn helmholtz_apply(u: &Field) -> Field {
    apply_symbol(u, |w| w + 1.0)
}

/// (-Laplacian + 1)^{-1} u, spectral.
pub fn helmholtz_solve(u: &Field) -> Field {
    apply_symbol(u, |w| 1.0 / (w + 1.0))
}

/// Circularly shift the field so its maximal-|value| sample sits at the
/// coordinate origin. Returns the shifted field and a flag that is true when
/// the input was identically zero (in which case the field is returned as is).
pub fn recenter(u: &Field) -> (Field, bool) {
    if u.is_zero() {
        return (u.clone(), true);
    }
    let grid = u.grid;
    let m = grid.points_per_axis();
    let peak = u
        .values
        .iter()
        .enumerate()
        .max_by(|(_, a), (_, b)| a.abs().partial_cmp(&b.abs()).expect("finite"))
        .map(|(i, _)| i)
        .expect("nonempty");
    let peak_idx = grid.multi_index(peak);
    let origin = grid.origin_axis_index();
    // new[j] = old[j + shift] places old[peak] at the origin index.
    let mut shift = [0usize; 3];
    for a in 0..grid.dim() {
        shift[a] = (peak_idx[a] + m - origin) % m;
    }
    if shift.iter().all(|&s| s == 0) {
        return (u.clone(), false);
    }
    let mut values = vec![0.0; u.values.len()];
    for (flat, slot) in values.iter_mut().enumerate() {
        let idx = grid.multi_index(flat);
        let mut src = [0usize; 3];
        for a in 0..grid.dim() {
            src[a] = (idx[a] + shift[a]) % m;
        }
        *slot = u.values[grid.flat_index(src)];
    }
    (Field::from_parts(grid, values), false)
}

/// Project onto the even subspace of the torus parity x -> -x
/// (per-axis index j -> (M - j) mod M): u <- (u + u o sigma) / 2.
/// Even fields are fixed points, and all spectral and convolution operators
/// commute with the parity.
pub fn symmetrize(u: &Field) -> Field {
    symmetrize_by(u, |j, m| (m - j) % m)
}

/// Project onto the even subspace of the reflection about the midpoint of
/// the sample set, x -> -h - x (per-axis index j -> M - 1 - j). Unlike the
/// origin parity this reflection pairs every sample (the -L/2 face has no
/// +L/2 partner on the grid), so it is an exact symmetry of the discrete
/// problem including the free-space convolution.
pub fn symmetrize_midcell(u: &Field) -> Field {
    symmetrize_by(u, |j, m| m - 1 - j)
}

fn symmetrize_by(u: &Field, mirror_axis: impl Fn(usize, usize) -> usize) -> Field {
    let grid = u.grid;
    let m = grid.points_per_axis();
    let mut values = vec![0.0; u.values.len()];
    for (flat, slot) in values.iter_mut().enumerate() {
        let idx = grid.multi_index(flat);
        let mut mirror = [0usize; 3];
        for a in 0..grid.dim() {
            mirror[a] = mirror_axis(idx[a], m);
        }
        *slot = 0.5 * (u.values[flat] + u.values[grid.flat_index(mirror)]);
    }
    Field::from_parts(grid, values)
}

/// Mass-weighted second moment: integral of |x|^2 u^2 divided by the mass.
/// Returns 0 for the zero field.
pub fn second_moment(u: &Field) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, &v) in u.values.iter().enumerate() {
        let w = v * v;
        num += u.grid.radius_sq(i) * w;
        den += w;
    }
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Largest |u| on the -L/2 faces of the box relative to the global peak.
/// A well-contained iterate keeps this below ~1e-8.
pub fn boundary_peak_ratio(u: &Field) -> f64 {
    let peak = u.max_abs();
    if peak == 0.0 {
        return 0.0;
    }
    let mut worst = 0.0f64;
    for (i, &v) in u.values.iter().enumerate() {
        let idx = u.grid.multi_index(i);
        if (0..u.grid.dim()).any(|a| idx[a] == 0) {
            worst = worst.max(v.abs());
        }
    }
    worst / peak
}
