//! Measured quantities: norms, energy, circulation, the wall identity, the
//! boundary bound `Lambda`, the `L^p` budget, the comparison check and weak-form
//! residuals.

mod weak;

use serde::{Deserialize, Serialize};

pub use weak::{weak_form, weak_residual, TestField, MIN_WEAK_SNAPSHOTS};

use crate::elliptic::{slip_velocity, PoissonWorkspace};
use crate::error::{Error, Result};
use crate::fourier::AngularFft;
use crate::geometry::{BoundaryTrace, FrictionProfile, PolarGrid, ScalarField, VelocityField, WALL_EXTRAPOLATION};
use crate::solver::Trajectory;

/// `sum |omega|^p w`.
pub fn lp_pow(field: &ScalarField, p: f64) -> f64 {
    let g = field.grid();
    let n_r = g.n_r();
    field
        .values()
        .chunks_exact(n_r)
        .map(|ring| ring.iter().enumerate().map(|(j, v)| v.abs().powf(p) * g.weight(j)).sum::<f64>())
        .sum()
}

/// `(sum |omega|^p w)^(1/p)` with the grid quadrature weights.
pub fn lp_norm(field: &ScalarField, p: f64) -> f64 {
    debug_assert!(p >= 1.0);
    lp_pow(field, p).powf(1.0 / p)
}

/// `||u||_2`.
pub fn energy(u: &VelocityField) -> f64 {
    let g = u.grid();
    let n_r = g.n_r();
    let mut acc = 0.0;
    for (k, (a, b)) in u.u_r.iter().zip(&u.u_theta).enumerate() {
        acc += (a * a + b * b) * g.weight(k % n_r);
    }
    acc.sqrt()
}

/// Circulation by either route: `int omega dx` for a field, `oint u . tau dl`
/// for a slip trace.
pub trait Circulation {
    fn circulation(&self) -> f64;
}

impl Circulation for ScalarField {
    fn circulation(&self) -> f64 {
        self.integral()
    }
}

impl Circulation for BoundaryTrace {
    fn circulation(&self) -> f64 {
        self.line_integral()
    }
}

pub fn circulation<C: Circulation + ?Sized>(c: &C) -> f64 {
    c.circulation()
}

/// `(p - 2) / (2p - 2)`, the interpolation exponent of the `L^inf` velocity bound.
pub fn theta_exponent(p: f64) -> f64 {
    (p - 2.0) / (2.0 * p - 2.0)
}

#[inline]
fn signed_pow(x: f64, p: f64) -> f64 {
    x.abs().powf(p - 2.0) * x
}

/// `-nu p (p-1) int |omega|^{p-2} |grad omega|^2`. Radial differences sit on the
/// cell faces, with the wall face reached through the ghost `2 omega_b - omega_{n-1}`;
/// the angular derivative is spectral.
pub fn dissipation_rate(omega: &ScalarField, wall: &BoundaryTrace, p: f64, nu: f64) -> f64 {
    if nu == 0.0 {
        return 0.0;
    }
    let g = omega.grid();
    let (n_theta, n_r) = (g.n_theta(), g.n_r());
    let (h, dth) = (g.dr(), g.dtheta());
    let fft = AngularFft::new(n_theta);
    let d_theta = fft.d_theta(g, omega.values());
    let mut radial = 0.0;
    let mut angular = 0.0;
    for i in 0..n_theta {
        for k in 1..n_r {
            let (a, b) = (omega.at(i, k - 1), omega.at(i, k));
            radial += g.face(k) * dth * (signed_pow(b, p) - signed_pow(a, p)) * (b - a) / h;
        }
        let (a, b) = (omega.at(i, n_r - 1), wall.values()[i]);
        radial += g.radius() * dth * (signed_pow(b, p) - signed_pow(a, p)) * (b - a) / (0.5 * h);
        for (j, &r) in g.radii().iter().enumerate() {
            let k = g.idx(i, j);
            let w = omega.values()[k];
            angular += w.abs().powf(p - 2.0) * (d_theta[k] / r).powi(2) * g.weight(j);
        }
    }
    -nu * p * (radial + (p - 1.0) * angular)
}

/// `nu p oint |omega|^{p-2} omega d_n omega` with the same wall stencil as the diffusion step.
pub fn boundary_flux_rate(omega: &ScalarField, wall: &BoundaryTrace, p: f64, nu: f64) -> f64 {
    if nu == 0.0 {
        return 0.0;
    }
    let g = omega.grid();
    let n_r = g.n_r();
    let arc = g.radius() * g.dtheta();
    let sum: f64 = wall
        .values()
        .iter()
        .enumerate()
        .map(|(i, &b)| signed_pow(b, p) * (b - omega.at(i, n_r - 1)) / (0.5 * g.dr()) * arc)
        .sum();
    nu * p * sum
}

/// Second-order one-sided `d/dr` at the wall from the three outermost cells.
fn wall_derivative(values: &[f64], g: &PolarGrid, i: usize) -> f64 {
    let n = g.n_r();
    let at = |j: usize| values[g.idx(i, j)];
    (2.0 * at(n - 1) - 3.0 * at(n - 2) + at(n - 3)) / g.dr()
}

fn wall_value(values: &[f64], g: &PolarGrid, i: usize) -> f64 {
    let n = g.n_r();
    (0..3).map(|k| WALL_EXTRAPOLATION[k] * values[g.idx(i, n - 1 - k)]).sum()
}

/// Curl of `u` at the cell centers: `(1/r) d_r (r u_theta) - (1/r) d_theta u_r`,
/// centered in `r` (one-sided at the wall, through the opposite cell at the pole).
pub fn discrete_vorticity(u: &VelocityField) -> ScalarField {
    let g = u.grid();
    let (n_theta, n_r) = (g.n_theta(), g.n_r());
    let h = g.dr();
    let fft = AngularFft::new(n_theta);
    let d_ur = fft.d_theta(g, &u.u_r);
    let mut values = vec![0.0; g.len()];
    let ru = |i: usize, j: usize| g.radii()[j] * u.u_theta[g.idx(i, j)];
    for i in 0..n_theta {
        for (j, &r) in g.radii().iter().enumerate() {
            let d = if j == 0 {
                // the cell across the pole supplies the value at r = -dr/2
                (ru(i, 1) - ru(g.opposite(i), 0)) / (2.0 * h)
            } else if j + 1 == n_r {
                (3.0 * ru(i, j) - 4.0 * ru(i, j - 1) + ru(i, j - 2)) / (2.0 * h)
            } else {
                (ru(i, j + 1) - ru(i, j - 1)) / (2.0 * h)
            };
            let k = g.idx(i, j);
            values[k] = (d - d_ur[k]) / r;
        }
    }
    ScalarField::from_raw(g, values)
}

/// Terms of the wall identity `(Dv)_S n . tau - omega / 2 + kappa v . tau = 0`.
#[derive(Debug, Clone)]
pub struct NavierIdentity {
    pub strain: BoundaryTrace,
    pub vorticity: BoundaryTrace,
    pub slip: BoundaryTrace,
    pub residual: BoundaryTrace,
}

/// Evaluates the wall identity for a tangent field. The strain comes from
/// one-sided radial differences and spectral angular derivatives of the
/// Cartesian components at the wall; the vorticity is the discrete curl
/// extrapolated to the wall.
pub fn navier_identity(v: &VelocityField) -> NavierIdentity {
    let g = v.grid();
    let n_theta = g.n_theta();
    let radius = g.radius();
    let kappa = 1.0 / radius;
    let (vx, vy) = v.cartesian();
    let fft = AngularFft::new(n_theta);
    let wall_x: Vec<f64> = (0..n_theta).map(|i| wall_value(&vx, g, i)).collect();
    let wall_y: Vec<f64> = (0..n_theta).map(|i| wall_value(&vy, g, i)).collect();
    let dt_x = fft.d_theta_trace(&wall_x);
    let dt_y = fft.d_theta_trace(&wall_y);
    let omega = discrete_vorticity(v).wall_values();

    let mut strain = vec![0.0; n_theta];
    let mut slip = vec![0.0; n_theta];
    for (i, &t) in g.thetas().iter().enumerate() {
        let (c, s) = (t.cos(), t.sin());
        let (dn_x, dn_y) = (wall_derivative(&vx, g, i), wall_derivative(&vy, g, i));
        let (dtau_x, dtau_y) = (dt_x[i] / radius, dt_y[i] / radius);
        // n = (c, s), tau = (-s, c)
        let dn_tau = -s * dn_x + c * dn_y;
        let dtau_n = c * dtau_x + s * dtau_y;
        strain[i] = 0.5 * (dn_tau + dtau_n);
        slip[i] = -s * wall_x[i] + c * wall_y[i];
    }
    let strain = BoundaryTrace::from_raw(g, strain);
    let slip = BoundaryTrace::from_raw(g, slip);
    let residual = BoundaryTrace::from_raw(
        g,
        (0..n_theta)
            .map(|i| strain.values()[i] - 0.5 * omega.values()[i] + kappa * slip.values()[i])
            .collect(),
    );
    NavierIdentity { strain, vorticity: omega, slip, residual }
}

/// Pointwise residual of the wall identity; see [`navier_identity`].
pub fn navier_identity_residual(v: &VelocityField) -> BoundaryTrace {
    navier_identity(v).residual
}

/// `max |(1/r) d_r (r u_r) + (1/r) d_theta u_theta|`. Uses the face fluxes of
/// streamfunction velocities when present, face averages otherwise, with the
/// extrapolated wall value of `u_r` on the outer face.
pub fn divergence_residual(u: &VelocityField) -> f64 {
    let g = u.grid();
    let (n_theta, n_r) = (g.n_theta(), g.n_r());
    let h = g.dr();
    let fft = AngularFft::new(n_theta);
    let d_ut = fft.d_theta(g, &u.u_theta);
    let wall = u.wall_normal();
    let mut worst = 0.0_f64;
    for i in 0..n_theta {
        let face = |k: usize| -> f64 {
            if let Some(f) = u.radial_flux() {
                return f[i * (n_r + 1) + k];
            }
            if k == 0 {
                0.0
            } else if k == n_r {
                g.radius() * wall.values()[i]
            } else {
                g.face(k) * 0.5 * (u.u_r[g.idx(i, k - 1)] + u.u_r[g.idx(i, k)])
            }
        };
        for (j, &r) in g.radii().iter().enumerate() {
            let div = (face(j + 1) - face(j)) / (r * h) + d_ut[g.idx(i, j)] / r;
            worst = worst.max(div.abs());
        }
    }
    worst
}

/// `Lambda = max over snapshots and angles of |(2 kappa - alpha) u . tau|`.
pub fn lambda_bound(traj: &Trajectory, friction: &FrictionProfile, kappa: f64) -> Result<f64> {
    let ws = PoissonWorkspace::new(traj.grid())?;
    let factor = friction.wall_factor(kappa);
    let mut lambda = 0.0_f64;
    for s in &traj.snapshots {
        let slip = slip_velocity(&ws.solve_poisson(&s.omega)?);
        for (a, b) in slip.values().iter().zip(factor.values()) {
            lambda = lambda.max((a * b).abs());
        }
    }
    Ok(lambda)
}

/// One row of the `L^p` budget `d/dt int |omega|^p = dissipation + boundary_flux`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetRow {
    pub t: f64,
    pub lp_pow: f64,
    pub d_dt_lp_pow: f64,
    pub dissipation: f64,
    pub boundary_flux: f64,
    pub closure_error: f64,
}

/// Budget rows at the step midpoints: the derivative is the difference quotient
/// over the step, the rates are averaged over its two ends.
pub fn vorticity_budget(traj: &Trajectory) -> Result<Vec<BudgetRow>> {
    let steps = &traj.steps;
    if steps.len() < 2 {
        return Err(Error::InvalidInput("the budget needs the diagnostics of every step".into()));
    }
    Ok(steps
        .windows(2)
        .filter(|w| w[1].t > w[0].t)
        .map(|w| {
            let (a, b) = (&w[0], &w[1]);
            let dt = b.t - a.t;
            let d_dt = (b.lp_pow - a.lp_pow) / dt;
            let diss = 0.5 * (a.dissipation + b.dissipation);
            let flux = 0.5 * (a.boundary_flux + b.boundary_flux);
            BudgetRow {
                t: 0.5 * (a.t + b.t),
                lp_pow: 0.5 * (a.lp_pow + b.lp_pow),
                d_dt_lp_pow: d_dt,
                dissipation: diss,
                boundary_flux: flux,
                closure_error: d_dt - diss - flux,
            }
        })
        .collect())
}

/// Time integrals of the budget terms' magnitudes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BudgetTotals {
    pub closure: f64,
    pub dissipation: f64,
    pub boundary_flux: f64,
}

pub fn budget_totals(traj: &Trajectory) -> Result<BudgetTotals> {
    let rows = vorticity_budget(traj)?;
    let mut totals = BudgetTotals { closure: 0.0, dissipation: 0.0, boundary_flux: 0.0 };
    let dts = traj.steps.windows(2).map(|w| w[1].t - w[0].t).filter(|dt| *dt > 0.0);
    for (row, dt) in rows.iter().zip(dts) {
        totals.closure += row.closure_error.abs() * dt;
        totals.dissipation += row.dissipation.abs() * dt;
        totals.boundary_flux += row.boundary_flux.abs() * dt;
    }
    Ok(totals)
}

fn check_shared_times(a: &Trajectory, b: &Trajectory) -> Result<()> {
    if a.snapshots.len() != b.snapshots.len() {
        return Err(Error::SnapshotMismatch(format!(
            "{} vs {} snapshots",
            a.snapshots.len(),
            b.snapshots.len()
        )));
    }
    let scale = a.config.t_final.max(b.config.t_final);
    for (x, y) in a.snapshots.iter().zip(&b.snapshots) {
        if (x.t - y.t).abs() > 1e-12 * scale {
            return Err(Error::SnapshotMismatch(format!("times {} and {} differ", x.t, y.t)));
        }
        if !x.omega.same_grid(&y.omega) {
            return Err(Error::GridMismatch);
        }
    }
    Ok(())
}

/// `max (|omega| - omega_tilde)` over the shared snapshots and cells.
pub fn comparison_check(run: &Trajectory, comparison: &Trajectory) -> Result<f64> {
    check_shared_times(run, comparison)?;
    let mut worst = f64::NEG_INFINITY;
    for (a, b) in run.snapshots.iter().zip(&comparison.snapshots) {
        for (w, c) in a.omega.values().iter().zip(b.omega.values()) {
            worst = worst.max(w.abs() - c);
        }
    }
    Ok(worst)
}

/// `||u_a - u_b||_2` at every snapshot of two runs sharing grid and output times.
pub fn velocity_distance(a: &Trajectory, b: &Trajectory) -> Result<Vec<f64>> {
    check_shared_times(a, b)?;
    let ws = PoissonWorkspace::new(a.grid())?;
    a.snapshots
        .iter()
        .zip(&b.snapshots)
        .map(|(x, y)| {
            let diff = x.omega.axpby(1.0, &y.omega, -1.0)?;
            Ok(energy(&ws.biot_savart(&diff)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_grid;
    use std::f64::consts::PI;

    #[test]
    fn lp_norm_examples() {
        let g = build_grid(1.0, 32, 32).unwrap();
        let two = ScalarField::constant(&g, 2.0);
        assert!((lp_norm(&two, 4.0) - (16.0 * PI).powf(0.25)).abs() < 1e-12);
        assert!((lp_norm(&two, 4.0) - 2.6627).abs() < 1e-4);
        assert_eq!(lp_norm(&ScalarField::zeros(&g), 4.0), 0.0);
    }

    #[test]
    fn energy_of_rigid_rotation() {
        let g = build_grid(1.0, 32, 256).unwrap();
        let u = VelocityField::from_cartesian_fn(&g, |x, y| (-y, x));
        // midpoint rule on r^3: error dr^2 / 8 relative
        assert!((energy(&u) - (PI / 2.0).sqrt()).abs() < 1e-5);
        assert!((energy(&u.scaled(3.0)) - 3.0 * energy(&u)).abs() < 1e-14);
        assert_eq!(energy(&VelocityField::zeros(&g)), 0.0);
    }

    #[test]
    fn circulation_routes_agree() {
        let g = build_grid(1.0, 64, 64).unwrap();
        let ws = PoissonWorkspace::new(&g).unwrap();
        let two = ScalarField::constant(&g, 2.0);
        assert!((circulation(&two) - 2.0 * PI).abs() < 1e-12);
        let om = ScalarField::from_cartesian_fn(&g, |x, y| (-5.0 * ((x - 0.2).powi(2) + y * y)).exp() + x);
        let slip = slip_velocity(&ws.solve_poisson(&om).unwrap());
        assert!((circulation(&om) - circulation(&slip)).abs() < 1e-8);
    }

    #[test]
    fn theta_exponent_values() {
        assert!((theta_exponent(4.0) - 1.0 / 3.0).abs() < 1e-15);
        assert!((theta_exponent(6.0) - 0.4).abs() < 1e-15);
        assert!(theta_exponent(2.0 + 1e-12) < 1e-11);
    }

    #[test]
    fn rigid_rotation_satisfies_wall_identity() {
        let g = build_grid(1.0, 32, 32).unwrap();
        let u = VelocityField::from_cartesian_fn(&g, |x, y| (-y, x));
        let id = navier_identity(&u);
        assert!(id.residual.sup_norm() < 1e-10);
        assert!(id.strain.sup_norm() < 1e-10);
        assert!(id.vorticity.values().iter().all(|w| (w - 2.0).abs() < 1e-10));
        assert_eq!(navier_identity_residual(&VelocityField::zeros(&g)).sup_norm(), 0.0);
    }

    #[test]
    fn quartic_stream_wall_strain() {
        // psi = (1 - r^2)^2: u_theta = -4r(1 - r^2), strain 4 and vorticity 8 at the wall
        let g = build_grid(1.0, 32, 128).unwrap();
        let u = VelocityField::from_cartesian_fn(&g, |x, y| {
            let q = 1.0 - x * x - y * y;
            (4.0 * q * y, -4.0 * q * x)
        });
        let id = navier_identity(&u);
        for i in 0..g.n_theta() {
            assert!((id.strain.values()[i] - 4.0).abs() < 5e-3);
            assert!((id.vorticity.values()[i] - 8.0).abs() < 5e-3);
        }
    }

    #[test]
    fn divergence_examples() {
        let g = build_grid(1.0, 32, 32).unwrap();
        let ws = PoissonWorkspace::new(&g).unwrap();
        let om = ScalarField::from_cartesian_fn(&g, |x, y| (x - 0.3 * y).sin() + 1.0);
        let u = ws.biot_savart(&om).unwrap();
        assert!(divergence_residual(&u) < 1e-10);
        assert_eq!(divergence_residual(&VelocityField::zeros(&g)), 0.0);
        let radial = VelocityField::from_cartesian_fn(&g, |x, y| (x, y));
        assert!((divergence_residual(&radial) - 2.0).abs() < 1e-10);
    }

    #[test]
    fn dissipation_is_nonpositive() {
        let g = build_grid(1.0, 32, 32).unwrap();
        let om = ScalarField::from_cartesian_fn(&g, |x, y| (3.0 * x).cos() * y - 0.2);
        let wall = BoundaryTrace::from_fn(&g, |t| t.sin());
        assert!(dissipation_rate(&om, &wall, 4.0, 0.1) <= 0.0);
        assert_eq!(dissipation_rate(&om, &wall, 4.0, 0.0), 0.0);
        let zero_wall = BoundaryTrace::zeros(&g);
        assert_eq!(boundary_flux_rate(&om, &zero_wall, 4.0, 0.1), 0.0);
    }
}
