//! Compatible approximation of rough vorticity.
//!
//! Given `omega` and an index `n`, the lift
//! `beta = zeta_n (eta_n * omega) + (1 - zeta_n) e^{-n d} G(theta)` keeps the
//! mollified field in the interior and replaces it near the wall by a thin
//! exponential layer carrying the boundary function `G`. `G` is fixed by
//! requiring that the wall value of `beta` equal the Navier vorticity
//! `(2 kappa - alpha) u . tau` of its own velocity.

use std::sync::Arc;

use serde::Serialize;

use crate::elliptic::{slip_velocity, PoissonWorkspace};
use crate::error::{Error, Result};
use crate::geometry::{
    boundary_cutoff, mollify, BoundaryTrace, FrictionProfile, PolarGrid, ScalarField, WALL_EXTRAPOLATION,
};

/// Outcome of [`project_compatible`].
#[derive(Debug, Clone, Serialize)]
pub struct ProjectionReport {
    pub n: usize,
    pub omega_n: ScalarField,
    #[serde(rename = "G_n")]
    pub g_n: BoundaryTrace,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    pub compat_residual: f64,
}

/// The lift with the `G`-independent parts precomputed.
#[derive(Debug, Clone)]
pub struct Lift {
    n: usize,
    /// `zeta_n (eta_n * omega)`
    interior: ScalarField,
    /// `(1 - zeta_n) e^{-n d}`
    layer: ScalarField,
}

impl Lift {
    pub fn new(omega: &ScalarField, n: usize) -> Result<Self> {
        let grid = omega.grid();
        let zeta = boundary_cutoff(grid, n)?;
        let smooth = mollify(omega, n)?;
        let interior = ScalarField::from_raw(
            grid,
            zeta.values().iter().zip(smooth.values()).map(|(z, s)| z * s).collect(),
        );
        Ok(Self { n, interior, layer: layer_profile(grid, &zeta, n) })
    }

    /// Lift of the zero field; enough for the linear part of the map.
    fn homogeneous(grid: &Arc<PolarGrid>, n: usize) -> Result<Self> {
        let zeta = boundary_cutoff(grid, n)?;
        Ok(Self { n, interior: ScalarField::zeros(grid), layer: layer_profile(grid, &zeta, n) })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn apply(&self, g: &BoundaryTrace) -> Result<ScalarField> {
        let grid = self.interior.grid();
        if g.values().len() != grid.n_theta() {
            return Err(Error::GridMismatch);
        }
        let n_r = grid.n_r();
        let mut values = self.interior.values().to_vec();
        for (i, gi) in g.values().iter().enumerate() {
            for j in 0..n_r {
                let k = grid.idx(i, j);
                values[k] += self.layer.values()[k] * gi;
            }
        }
        Ok(ScalarField::from_raw(grid, values))
    }

    /// Extrapolated wall value of the layer profile.
    fn layer_wall_weight(&self) -> f64 {
        wall_extrapolate(&self.layer, 0)
    }
}

fn layer_profile(grid: &Arc<PolarGrid>, zeta: &ScalarField, n: usize) -> ScalarField {
    let radius = grid.radius();
    let values = zeta
        .values()
        .iter()
        .enumerate()
        .map(|(k, z)| {
            let r = grid.radii()[k % grid.n_r()];
            (1.0 - z) * (-(n as f64) * (radius - r)).exp()
        })
        .collect();
    ScalarField::from_raw(grid, values)
}

fn wall_extrapolate(field: &ScalarField, i: usize) -> f64 {
    let n = field.grid().n_r();
    WALL_EXTRAPOLATION
        .iter()
        .enumerate()
        .map(|(k, c)| c * field.at(i, n - 1 - k))
        .sum()
}

/// `beta = zeta_n (eta_n * omega) + (1 - zeta_n) e^{-n d} G`.
pub fn lift(omega: &ScalarField, n: usize, g: &BoundaryTrace) -> Result<ScalarField> {
    Lift::new(omega, n)?.apply(g)
}

/// `Psi(G) = (2 kappa - alpha) u . tau` where `u` is the velocity of the lift.
pub fn psi_map(
    omega: &ScalarField,
    n: usize,
    g: &BoundaryTrace,
    friction: &FrictionProfile,
    kappa: f64,
) -> Result<BoundaryTrace> {
    let ws = PoissonWorkspace::new(omega.grid())?;
    let lift = Lift::new(omega, n)?;
    psi_with(&ws, &lift, g, &friction.wall_factor(kappa))
}

fn psi_with(ws: &PoissonWorkspace, lift: &Lift, g: &BoundaryTrace, factor: &BoundaryTrace) -> Result<BoundaryTrace> {
    let beta = lift.apply(g)?;
    let slip = slip_velocity(&ws.solve_poisson(&beta)?);
    Ok(slip.zip_with(factor, |s, f| f * s))
}

/// `sup_theta |omega(R) - (2 kappa - alpha) u . tau|` with `omega(R)` extrapolated
/// from the three outermost cells and `u` the Biot-Savart velocity of `omega`.
pub fn compatibility_residual(omega: &ScalarField, friction: &FrictionProfile, kappa: f64) -> Result<f64> {
    let ws = PoissonWorkspace::new(omega.grid())?;
    residual_with(&ws, omega, &friction.wall_factor(kappa))
}

fn residual_with(ws: &PoissonWorkspace, omega: &ScalarField, factor: &BoundaryTrace) -> Result<f64> {
    if factor.values().len() != omega.grid().n_theta() {
        return Err(Error::GridMismatch);
    }
    let slip = slip_velocity(&ws.solve_poisson(omega)?);
    let required = slip.zip_with(factor, |s, f| f * s);
    Ok(omega.wall_values().sup_distance(&required))
}

/// Fixed-point construction of compatible data.
///
/// The iteration is `G <- (Psi(G) - E[zeta (eta * omega)]) / E[(1 - zeta) e^{-nd}]`,
/// `E` being the wall extrapolation used by [`compatibility_residual`]. At a
/// fixed point the extrapolated wall value of the lift equals `Psi(G)`, so the
/// discrete residual is controlled by `tol` rather than by how well three
/// cells resolve the exponential layer.
pub fn project_compatible(
    omega: &ScalarField,
    n: usize,
    tol: f64,
    max_iter: usize,
    friction: &FrictionProfile,
    kappa: f64,
) -> Result<ProjectionReport> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput("tol must be positive".into()));
    }
    let grid = omega.grid();
    let ws = PoissonWorkspace::new(grid)?;
    let lift = Lift::new(omega, n)?;
    let factor = friction.wall_factor(kappa);
    let c_n = lift.layer_wall_weight();
    let base: Vec<f64> = (0..grid.n_theta()).map(|i| wall_extrapolate(&lift.interior, i)).collect();

    let mut g = BoundaryTrace::zeros(grid);
    let mut history: Vec<f64> = Vec::new();
    let mut rising = 0;
    for it in 1..=max_iter.max(1) {
        let psi = psi_with(&ws, &lift, &g, &factor)?;
        let next = BoundaryTrace::from_raw(
            grid,
            psi.values().iter().zip(&base).map(|(p, b)| (p - b) / c_n).collect(),
        );
        let change = next.sup_distance(&g);
        if !change.is_finite() {
            return Err(Error::NonContraction { n, iterations: it, residual_history: history });
        }
        if history.last().is_some_and(|&prev| change > prev) {
            rising += 1;
        } else {
            rising = 0;
        }
        history.push(change);
        g = next;
        if change < tol {
            let omega_n = lift.apply(&g)?;
            let compat_residual = residual_with(&ws, &omega_n, &factor)?;
            return Ok(ProjectionReport {
                n,
                omega_n,
                g_n: g,
                iterations: it,
                residual_history: history,
                compat_residual,
            });
        }
        if rising >= 3 {
            return Err(Error::NonContraction { n, iterations: it, residual_history: history });
        }
    }
    Err(Error::MaxIterations { iterations: max_iter, last_change: history.last().copied().unwrap_or(f64::NAN) })
}

/// Sup-norm operator norm of the linear part `G -> (Psi(G) - Psi(0)) / c_n`,
/// estimated by power iteration. It does not depend on `omega`.
pub fn contraction_factor(grid: &Arc<PolarGrid>, n: usize, friction: &FrictionProfile, kappa: f64) -> Result<f64> {
    let ws = PoissonWorkspace::new(grid)?;
    let lift = Lift::homogeneous(grid, n)?;
    let factor = friction.wall_factor(kappa);
    let c_n = lift.layer_wall_weight();
    let mut g = BoundaryTrace::from_fn(grid, |t| 1.0 + 0.5 * t.cos() + 0.25 * (3.0 * t).sin());
    let norm = g.sup_norm();
    g = g.map(|v| v / norm);
    let mut estimate = 0.0;
    for _ in 0..60 {
        let image = psi_with(&ws, &lift, &g, &factor)?.map(|v| v / c_n);
        let size = image.sup_norm();
        if size == 0.0 {
            return Ok(0.0);
        }
        let done = (size - estimate).abs() <= 1e-9 * size;
        estimate = size;
        g = image.map(|v| v / size);
        if done {
            break;
        }
    }
    Ok(estimate)
}

/// Smallest candidate `n` (resolvable on the grid) with contraction factor
/// below `threshold`; also returns every factor that was measured.
pub fn select_n(
    grid: &Arc<PolarGrid>,
    candidates: &[usize],
    threshold: f64,
    friction: &FrictionProfile,
    kappa: f64,
) -> Result<(usize, Vec<(usize, f64)>)> {
    let mut sorted = candidates.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let mut measured = Vec::new();
    for n in sorted {
        let f = match contraction_factor(grid, n, friction, kappa) {
            Ok(f) => f,
            Err(Error::Resolution(_)) | Err(Error::InvalidInput(_)) => continue,
            Err(e) => return Err(e),
        };
        measured.push((n, f));
        if f < threshold {
            return Ok((n, measured));
        }
    }
    Err(Error::Resolution(format!("no candidate n reaches contraction factor < {threshold}: {measured:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_grid, cutoff_value};

    fn grid() -> Arc<PolarGrid> {
        build_grid(1.0, 64, 64).unwrap()
    }

    #[test]
    fn lift_without_g_is_cut_mollified_field() {
        let g = grid();
        let om = ScalarField::from_cartesian_fn(&g, |x, y| 1.0 + x * y);
        let beta = lift(&om, 4, &BoundaryTrace::zeros(&g)).unwrap();
        let smooth = mollify(&om, 4).unwrap();
        for (k, b) in beta.values().iter().enumerate() {
            let r = g.radii()[k % g.n_r()];
            assert_eq!(*b, cutoff_value(4, 1.0 - r) * smooth.values()[k]);
        }
    }

    #[test]
    fn lift_layer_profile() {
        let g = grid();
        let beta = lift(&ScalarField::zeros(&g), 4, &BoundaryTrace::constant(&g, 1.0)).unwrap();
        for (j, &r) in g.radii().iter().enumerate() {
            let d = 1.0 - r;
            if d >= 0.25 {
                assert_eq!(beta.at(0, j), 0.0);
            } else if d <= 0.2 {
                assert!((beta.at(0, j) - (-4.0 * d).exp()).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn psi_map_is_affine() {
        let g = grid();
        let fr = FrictionProfile::constant(&g, 0.5).unwrap();
        let om = ScalarField::from_cartesian_fn(&g, |x, _| (3.0 * x).sin());
        let g1 = BoundaryTrace::from_fn(&g, |t| t.cos());
        let g2 = BoundaryTrace::from_fn(&g, |t| 0.3 + (2.0 * t).sin());
        let zero = BoundaryTrace::zeros(&g);
        let diff = g1.zip_with(&g2, |a, b| a - b);
        let a = psi_map(&om, 4, &g1, &fr, 1.0).unwrap();
        let b = psi_map(&om, 4, &g2, &fr, 1.0).unwrap();
        let lin = psi_map(&ScalarField::zeros(&g), 4, &diff, &fr, 1.0).unwrap();
        let z = psi_map(&ScalarField::zeros(&g), 4, &zero, &fr, 1.0).unwrap();
        assert_eq!(z.sup_norm(), 0.0);
        let d = a.zip_with(&b, |x, y| x - y);
        assert!(d.sup_distance(&lin) < 1e-12);
    }

    #[test]
    fn compatibility_residual_examples() {
        let g = grid();
        let two = ScalarField::constant(&g, 2.0);
        let noslip = FrictionProfile::constant(&g, 0.0).unwrap();
        assert!(compatibility_residual(&two, &noslip, 1.0).unwrap() < 1e-10);
        let free = FrictionProfile::free_boundary(&g);
        assert!((compatibility_residual(&two, &free, 1.0).unwrap() - 2.0).abs() < 1e-10);
        assert_eq!(compatibility_residual(&ScalarField::zeros(&g), &free, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn zero_projects_to_zero_in_one_iteration() {
        let g = grid();
        let fr = FrictionProfile::constant(&g, 1.0).unwrap();
        let rep = project_compatible(&ScalarField::zeros(&g), 4, 1e-10, 100, &fr, 1.0).unwrap();
        assert_eq!(rep.iterations, 1);
        assert_eq!(rep.g_n.sup_norm(), 0.0);
        assert_eq!(rep.omega_n.max_abs(), 0.0);
    }

    #[test]
    fn projection_reaches_fixed_point() {
        let g = build_grid(1.0, 96, 96).unwrap();
        let spec = crate::geometry::FrictionSpec { constant: 1.0, cos: vec![1.0], sin: vec![] };
        let fr = FrictionProfile::new(&g, &spec).unwrap();
        let om = ScalarField::from_cartesian_fn(&g, |x, y| (-8.0 * ((x - 0.2).powi(2) + y * y)).exp());
        let rep = project_compatible(&om, 6, 1e-10, 100, &fr, 1.0).unwrap();
        assert!(rep.compat_residual < 1e-9, "{}", rep.compat_residual);
        let psi = psi_map(&om, 6, &rep.g_n, &fr, 1.0).unwrap();
        let lift = Lift::new(&om, 6).unwrap();
        let c = lift.layer_wall_weight();
        for i in 0..g.n_theta() {
            let fixed = (psi.values()[i] - wall_extrapolate(&lift.interior, i)) / c;
            assert!((fixed - rep.g_n.values()[i]).abs() < 1e-9);
        }
        for w in rep.residual_history.windows(2).skip(1) {
            assert!(w[1] < w[0]);
        }
    }

    #[test]
    fn contraction_factor_decreases_with_n() {
        let g = build_grid(1.0, 64, 160).unwrap();
        let fr = FrictionProfile::constant(&g, 0.0).unwrap();
        let f4 = contraction_factor(&g, 4, &fr, 1.0).unwrap();
        let f8 = contraction_factor(&g, 8, &fr, 1.0).unwrap();
        assert!(f8 < f4, "{f4} {f8}");
        let free = FrictionProfile::free_boundary(&g);
        assert_eq!(contraction_factor(&g, 4, &free, 1.0).unwrap(), 0.0);
        let (n, _) = select_n(&g, &[2, 4, 8], 0.5, &fr, 1.0).unwrap();
        assert!(n <= 8);
    }
}
