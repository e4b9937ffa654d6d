//! Disk domain, cell-centered polar grid and the field containers that live on it.
//!
//! Values are stored row-major in (angle, radius): entry `(i, j)` sits at
//! `i * n_r + j`, with `theta_i = 2 pi i / n_theta` and `r_j = (j + 1/2) dr`.
//! There is no node at the pole or on the wall.

mod friction;
mod mollifier;

pub use friction::{FrictionProfile, FrictionSpec};
pub use mollifier::{boundary_cutoff, cutoff_value, mollify, Mollifier};

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct PolarGrid {
    radius: f64,
    n_theta: usize,
    n_r: usize,
    dr: f64,
    dtheta: f64,
    thetas: Vec<f64>,
    radii: Vec<f64>,
    /// `r_j dr dtheta`, identical for every angle.
    ring_weights: Vec<f64>,
}

impl PartialEq for PolarGrid {
    fn eq(&self, other: &Self) -> bool {
        self.radius == other.radius && self.n_theta == other.n_theta && self.n_r == other.n_r
    }
}

/// Grid parameters as they appear in configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default = "default_radius")]
    pub radius: f64,
    pub n_theta: usize,
    pub n_r: usize,
}

fn default_radius() -> f64 {
    1.0
}

impl GridSpec {
    pub fn new(radius: f64, n_theta: usize, n_r: usize) -> Self {
        Self { radius, n_theta, n_r }
    }

    pub fn build(&self) -> Result<Arc<PolarGrid>> {
        build_grid(self.radius, self.n_theta, self.n_r)
    }
}

/// Builds the cell-centered polar grid of a disk of the given radius.
pub fn build_grid(radius: f64, n_theta: usize, n_r: usize) -> Result<Arc<PolarGrid>> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::InvalidGrid(format!("radius must be positive, got {radius}")));
    }
    if n_theta < 8 || !n_theta.is_multiple_of(2) {
        return Err(Error::InvalidGrid(format!(
            "n_theta must be even and >= 8, got {n_theta}"
        )));
    }
    if n_r < 4 {
        return Err(Error::InvalidGrid(format!("n_r must be >= 4, got {n_r}")));
    }
    let dr = radius / n_r as f64;
    let dtheta = 2.0 * PI / n_theta as f64;
    let thetas = (0..n_theta).map(|i| dtheta * i as f64).collect();
    let radii: Vec<f64> = (0..n_r).map(|j| (j as f64 + 0.5) * dr).collect();
    let ring_weights = radii.iter().map(|r| r * dr * dtheta).collect();
    Ok(Arc::new(PolarGrid {
        radius,
        n_theta,
        n_r,
        dr,
        dtheta,
        thetas,
        radii,
        ring_weights,
    }))
}

impl PolarGrid {
    pub fn radius(&self) -> f64 {
        self.radius
    }
    pub fn n_theta(&self) -> usize {
        self.n_theta
    }
    pub fn n_r(&self) -> usize {
        self.n_r
    }
    pub fn len(&self) -> usize {
        self.n_theta * self.n_r
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
    pub fn dr(&self) -> f64 {
        self.dr
    }
    pub fn dtheta(&self) -> f64 {
        self.dtheta
    }
    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }
    pub fn radii(&self) -> &[f64] {
        &self.radii
    }
    /// Radius of the face between cells `k - 1` and `k` (`k = 0` is the pole, `k = n_r` the wall).
    pub fn face(&self, k: usize) -> f64 {
        k as f64 * self.dr
    }
    pub fn spec(&self) -> GridSpec {
        GridSpec::new(self.radius, self.n_theta, self.n_r)
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.n_r + j
    }

    /// Angle index of the point diametrically opposite node `i`.
    #[inline]
    pub fn opposite(&self, i: usize) -> usize {
        (i + self.n_theta / 2) % self.n_theta
    }

    /// Quadrature weight of cell `(i, j)`; independent of `i`.
    #[inline]
    pub fn weight(&self, j: usize) -> f64 {
        self.ring_weights[j]
    }

    pub fn quad_weights(&self) -> Vec<f64> {
        let mut w = Vec::with_capacity(self.len());
        for _ in 0..self.n_theta {
            w.extend_from_slice(&self.ring_weights);
        }
        w
    }

    pub fn area(&self) -> f64 {
        PI * self.radius * self.radius
    }

    /// Grid quadrature of `f(r, theta)` over the disk.
    pub fn integrate<F: Fn(f64, f64) -> f64>(&self, f: F) -> f64 {
        let mut acc = 0.0;
        for &t in &self.thetas {
            for (j, &r) in self.radii.iter().enumerate() {
                acc += f(r, t) * self.ring_weights[j];
            }
        }
        acc
    }

    pub fn curvature(&self) -> f64 {
        curvature(self)
    }
}

/// A point in polar coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarPoint {
    pub r: f64,
    pub theta: f64,
}

impl PolarPoint {
    pub fn new(r: f64, theta: f64) -> Self {
        Self { r, theta }
    }
    pub fn from_cartesian(x: f64, y: f64) -> Self {
        Self { r: x.hypot(y), theta: y.atan2(x) }
    }
    pub fn to_cartesian(self) -> (f64, f64) {
        (self.r * self.theta.cos(), self.r * self.theta.sin())
    }
}

pub fn distance_to_boundary(grid: &PolarGrid, point: PolarPoint) -> Result<f64> {
    if point.r > grid.radius || point.r < 0.0 {
        return Err(Error::OutsideDomain { r: point.r, radius: grid.radius });
    }
    Ok(grid.radius - point.r)
}

/// Angle of the nearest wall point; on the disk the projection is radial.
pub fn boundary_projection(grid: &PolarGrid, point: PolarPoint) -> Result<f64> {
    if point.r <= 0.0 {
        return Err(Error::AtOrigin);
    }
    if point.r > grid.radius {
        return Err(Error::OutsideDomain { r: point.r, radius: grid.radius });
    }
    Ok(point.theta)
}

pub fn curvature(grid: &PolarGrid) -> f64 {
    1.0 / grid.radius
}

fn check_finite(values: &[f64], what: &str) -> Result<()> {
    if let Some(k) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("{what} has a non-finite entry at {k}")));
    }
    Ok(())
}

/// A real scalar sampled at the cell centers (vorticity, streamfunction, cutoffs, ...).
#[derive(Debug, Clone)]
pub struct ScalarField {
    grid: Arc<PolarGrid>,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: &Arc<PolarGrid>) -> Self {
        Self { grid: grid.clone(), values: vec![0.0; grid.len()] }
    }

    pub fn constant(grid: &Arc<PolarGrid>, c: f64) -> Self {
        Self { grid: grid.clone(), values: vec![c; grid.len()] }
    }

    pub fn from_values(grid: &Arc<PolarGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        check_finite(&values, "scalar field")?;
        Ok(Self { grid: grid.clone(), values })
    }

    /// Samples `f(r, theta)` at every cell center.
    pub fn from_fn<F: Fn(f64, f64) -> f64>(grid: &Arc<PolarGrid>, f: F) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for &t in grid.thetas() {
            for &r in grid.radii() {
                values.push(f(r, t));
            }
        }
        Self { grid: grid.clone(), values }
    }

    /// Samples `f(x, y)` at every cell center.
    pub fn from_cartesian_fn<F: Fn(f64, f64) -> f64>(grid: &Arc<PolarGrid>, f: F) -> Self {
        Self::from_fn(grid, |r, t| f(r * t.cos(), r * t.sin()))
    }

    pub(crate) fn from_raw(grid: &Arc<PolarGrid>, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid: grid.clone(), values }
    }

    pub fn grid(&self) -> &Arc<PolarGrid> {
        &self.grid
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    pub fn same_grid(&self, other: &ScalarField) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Self {
        Self { grid: self.grid.clone(), values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn abs(&self) -> Self {
        self.map(f64::abs)
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    /// `a * self + b * other`.
    pub fn axpby(&self, a: f64, other: &ScalarField, b: f64) -> Result<Self> {
        if !self.same_grid(other) {
            return Err(Error::GridMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Ok(Self { grid: self.grid.clone(), values })
    }

    /// Grid quadrature of the field.
    pub fn integral(&self) -> f64 {
        let n_r = self.grid.n_r;
        self.values
            .chunks_exact(n_r)
            .map(|ring| ring.iter().zip(&self.grid.ring_weights).map(|(v, w)| v * w).sum::<f64>())
            .sum()
    }

    /// Angular average of every ring.
    pub fn ring_means(&self) -> Vec<f64> {
        let n_r = self.grid.n_r;
        let mut m = vec![0.0; n_r];
        for ring in self.values.chunks_exact(n_r) {
            for (acc, v) in m.iter_mut().zip(ring) {
                *acc += v;
            }
        }
        let inv = 1.0 / self.grid.n_theta as f64;
        m.iter_mut().for_each(|v| *v *= inv);
        m
    }

    /// Quadratic extrapolation of the three outermost cells to the wall.
    pub fn wall_values(&self) -> BoundaryTrace {
        let g = &self.grid;
        let n = g.n_r;
        let values = (0..g.n_theta)
            .map(|i| {
                WALL_EXTRAPOLATION[0] * self.at(i, n - 1)
                    + WALL_EXTRAPOLATION[1] * self.at(i, n - 2)
                    + WALL_EXTRAPOLATION[2] * self.at(i, n - 3)
            })
            .collect();
        BoundaryTrace::from_raw(g, values)
    }
}

/// Lagrange weights evaluating the quadratic through the cells at distances
/// `dr/2`, `3dr/2`, `5dr/2` from the wall, on the wall itself.
pub const WALL_EXTRAPOLATION: [f64; 3] = [15.0 / 8.0, -5.0 / 4.0, 3.0 / 8.0];

#[derive(Serialize)]
struct FieldRepr<'a> {
    radius: f64,
    n_theta: usize,
    n_r: usize,
    values: &'a [f64],
}

impl Serialize for ScalarField {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        FieldRepr {
            radius: self.grid.radius,
            n_theta: self.grid.n_theta,
            n_r: self.grid.n_r,
            values: &self.values,
        }
        .serialize(s)
    }
}

/// A function of the wall angle, sampled at the grid angles.
#[derive(Debug, Clone)]
pub struct BoundaryTrace {
    grid: Arc<PolarGrid>,
    values: Vec<f64>,
}

impl BoundaryTrace {
    pub fn zeros(grid: &Arc<PolarGrid>) -> Self {
        Self { grid: grid.clone(), values: vec![0.0; grid.n_theta] }
    }

    pub fn constant(grid: &Arc<PolarGrid>, c: f64) -> Self {
        Self { grid: grid.clone(), values: vec![c; grid.n_theta] }
    }

    pub fn from_values(grid: &Arc<PolarGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_theta {
            return Err(Error::InvalidInput(format!(
                "expected {} boundary values, got {}",
                grid.n_theta,
                values.len()
            )));
        }
        check_finite(&values, "boundary trace")?;
        Ok(Self { grid: grid.clone(), values })
    }

    pub fn from_fn<F: Fn(f64) -> f64>(grid: &Arc<PolarGrid>, f: F) -> Self {
        Self { grid: grid.clone(), values: grid.thetas().iter().map(|&t| f(t)).collect() }
    }

    pub(crate) fn from_raw(grid: &Arc<PolarGrid>, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.n_theta);
        Self { grid: grid.clone(), values }
    }

    pub fn grid(&self) -> &Arc<PolarGrid> {
        &self.grid
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Periodic indexing.
    pub fn at(&self, i: isize) -> f64 {
        let n = self.values.len() as isize;
        self.values[i.rem_euclid(n) as usize]
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// `sup |self - other|`.
    pub fn sup_distance(&self, other: &BoundaryTrace) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Trapezoid rule for the periodic line integral over the wall.
    pub fn line_integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.radius * self.grid.dtheta
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Self {
        Self { grid: self.grid.clone(), values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_with<F: Fn(f64, f64) -> f64>(&self, other: &BoundaryTrace, f: F) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        }
    }
}

impl Serialize for BoundaryTrace {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.values.serialize(s)
    }
}

/// Velocity in polar components at the cell centers.
#[derive(Debug, Clone)]
pub struct VelocityField {
    grid: Arc<PolarGrid>,
    pub u_r: Vec<f64>,
    pub u_theta: Vec<f64>,
    /// `r u_r` on the radial faces, layout `[i * (n_r + 1) + k]`, when the
    /// field comes from a streamfunction.
    radial_flux: Option<Vec<f64>>,
}

impl VelocityField {
    pub fn new(grid: &Arc<PolarGrid>, u_r: Vec<f64>, u_theta: Vec<f64>) -> Result<Self> {
        if u_r.len() != grid.len() || u_theta.len() != grid.len() {
            return Err(Error::InvalidInput("velocity component length mismatch".into()));
        }
        check_finite(&u_r, "u_r")?;
        check_finite(&u_theta, "u_theta")?;
        Ok(Self { grid: grid.clone(), u_r, u_theta, radial_flux: None })
    }

    pub fn zeros(grid: &Arc<PolarGrid>) -> Self {
        Self {
            grid: grid.clone(),
            u_r: vec![0.0; grid.len()],
            u_theta: vec![0.0; grid.len()],
            radial_flux: None,
        }
    }

    pub(crate) fn with_radial_flux(mut self, flux: Vec<f64>) -> Self {
        debug_assert_eq!(flux.len(), self.grid.n_theta * (self.grid.n_r + 1));
        self.radial_flux = Some(flux);
        self
    }

    /// `r u_r` on the radial faces (`[i * (n_r + 1) + k]`), available for
    /// velocities derived from a streamfunction.
    pub fn radial_flux(&self) -> Option<&[f64]> {
        self.radial_flux.as_deref()
    }

    /// Samples a Cartesian vector field `f(x, y) -> (u_x, u_y)`.
    pub fn from_cartesian_fn<F: Fn(f64, f64) -> (f64, f64)>(grid: &Arc<PolarGrid>, f: F) -> Self {
        let mut u_r = Vec::with_capacity(grid.len());
        let mut u_theta = Vec::with_capacity(grid.len());
        for &t in grid.thetas() {
            let (c, s) = (t.cos(), t.sin());
            for &r in grid.radii() {
                let (ux, uy) = f(r * c, r * s);
                u_r.push(c * ux + s * uy);
                u_theta.push(-s * ux + c * uy);
            }
        }
        Self { grid: grid.clone(), u_r, u_theta, radial_flux: None }
    }

    pub fn grid(&self) -> &Arc<PolarGrid> {
        &self.grid
    }

    /// Cartesian components `(u_x, u_y)`.
    pub fn cartesian(&self) -> (Vec<f64>, Vec<f64>) {
        let g = &self.grid;
        let mut ux = vec![0.0; g.len()];
        let mut uy = vec![0.0; g.len()];
        for (i, &t) in g.thetas().iter().enumerate() {
            let (c, s) = (t.cos(), t.sin());
            for j in 0..g.n_r {
                let k = g.idx(i, j);
                ux[k] = c * self.u_r[k] - s * self.u_theta[k];
                uy[k] = s * self.u_r[k] + c * self.u_theta[k];
            }
        }
        (ux, uy)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            u_r: self.u_r.iter().map(|v| c * v).collect(),
            u_theta: self.u_theta.iter().map(|v| c * v).collect(),
            radial_flux: self.radial_flux.as_ref().map(|f| f.iter().map(|v| c * v).collect()),
        }
    }

    /// Radial velocity extrapolated to the wall (tangency residual).
    pub fn wall_normal(&self) -> BoundaryTrace {
        let ur = ScalarField::from_raw(&self.grid, self.u_r.clone());
        ur.wall_values()
    }

    pub fn max_speed(&self) -> f64 {
        self.u_r
            .iter()
            .zip(&self.u_theta)
            .fold(0.0_f64, |m, (a, b)| m.max(a.hypot(*b)))
    }
}
