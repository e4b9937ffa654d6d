use std::f64::consts::PI;

use crate::elliptic::{slip_velocity, PoissonWorkspace};
use crate::error::{Error, Result};
use crate::fourier::AngularFft;
use crate::geometry::{FrictionProfile, PolarGrid, VelocityField};
use crate::solver::Trajectory;

/// Fewest snapshots accepted for the time quadrature.
pub const MIN_WEAK_SNAPSHOTS: usize = 5;

/// `phi = grad_perp Phi` with `Phi = (R^2 - r^2)^2 sum_m c_m Re(z^m)`, `m = 0, 1, 2`.
/// Divergence free and vanishing on the wall.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestField {
    pub coefficients: [f64; 3],
}

impl TestField {
    pub fn mode(m: usize) -> Self {
        assert!(m <= 2, "test modes are 0, 1, 2");
        let mut coefficients = [0.0; 3];
        coefficients[m] = 1.0;
        Self { coefficients }
    }

    /// `a self + b other`
    pub fn combine(&self, a: f64, other: &TestField, b: f64) -> Self {
        let mut coefficients = [0.0; 3];
        for (k, c) in coefficients.iter_mut().enumerate() {
            *c = a * self.coefficients[k] + b * other.coefficients[k];
        }
        Self { coefficients }
    }

    /// `phi` and `grad phi` (`[i][j] = d_j phi_i`) at `(x, y)`.
    pub fn eval(&self, radius: f64, x: f64, y: f64) -> ([f64; 2], [[f64; 2]; 2]) {
        let [c0, c1, c2] = self.coefficients;
        // P = c0 + c1 x + c2 (x^2 - y^2)
        let p = c0 + c1 * x + c2 * (x * x - y * y);
        let (px, py) = (c1 + 2.0 * c2 * x, -2.0 * c2 * y);
        let (pxx, pyy, pxy) = (2.0 * c2, -2.0 * c2, 0.0);
        let q = radius * radius - x * x - y * y;
        let (qx, qy) = (-2.0 * x, -2.0 * y);
        let (qxx, qyy) = (-2.0, -2.0);

        let fx = 2.0 * q * qx * p + q * q * px;
        let fy = 2.0 * q * qy * p + q * q * py;
        let fxx = 2.0 * qx * qx * p + 2.0 * q * qxx * p + 4.0 * q * qx * px + q * q * pxx;
        let fyy = 2.0 * qy * qy * p + 2.0 * q * qyy * p + 4.0 * q * qy * py + q * q * pyy;
        let fxy = 2.0 * qx * qy * p + 2.0 * q * qx * py + 2.0 * q * qy * px + q * q * pxy;
        ([-fy, fx], [[-fxy, -fyy], [fxx, fxy]])
    }
}

/// `chi(t) = cos^2(pi t / 2T)` and its derivative.
fn chi(t: f64, t_final: f64) -> (f64, f64) {
    let a = PI * t / (2.0 * t_final);
    (a.cos().powi(2), -(PI / (2.0 * t_final)) * (2.0 * a).sin())
}

/// Cartesian velocity gradient `[i][j] = d_j u_i` at every cell.
fn velocity_gradient(u: &VelocityField, fft: &AngularFft) -> Vec<[[f64; 2]; 2]> {
    let g: &PolarGrid = u.grid();
    let n_r = g.n_r();
    let h = g.dr();
    let (ux, uy) = u.cartesian();
    let mut grad = vec![[[0.0; 2]; 2]; g.len()];
    for (c, comp) in [&ux, &uy].into_iter().enumerate() {
        let d_theta = fft.d_theta(g, comp);
        let at = |i: usize, j: usize| comp[g.idx(i, j)];
        for (i, &t) in g.thetas().iter().enumerate() {
            let (cs, sn) = (t.cos(), t.sin());
            for (j, &r) in g.radii().iter().enumerate() {
                let d_r = if j == 0 {
                    (at(i, 1) - at(g.opposite(i), 0)) / (2.0 * h)
                } else if j + 1 == n_r {
                    (3.0 * at(i, j) - 4.0 * at(i, j - 1) + at(i, j - 2)) / (2.0 * h)
                } else {
                    (at(i, j + 1) - at(i, j - 1)) / (2.0 * h)
                };
                let k = g.idx(i, j);
                let d_t = d_theta[k] / r;
                grad[k][c] = [cs * d_r - sn * d_t, sn * d_r + cs * d_t];
            }
        }
    }
    grad
}

/// Signed weak form of the momentum equation against `chi(t) phi`:
///
/// `int_0^T int [u . phi_t + u_i u_j d_j phi_i] + int u_0 . phi(0)
///  - 2 nu int_0^T int (D phi)_S : (D u)_S - nu int_0^T oint alpha (phi . tau)(u . tau)`,
///
/// with trapezoid quadrature over the snapshots. Exactly linear in the test field.
pub fn weak_form(traj: &Trajectory, nu: f64, field: &TestField) -> Result<f64> {
    if traj.snapshots.len() < MIN_WEAK_SNAPSHOTS {
        return Err(Error::InvalidInput(format!(
            "weak residual needs at least {MIN_WEAK_SNAPSHOTS} snapshots, got {}",
            traj.snapshots.len()
        )));
    }
    let g = traj.grid().clone();
    let radius = g.radius();
    let ws = PoissonWorkspace::new(&g)?;
    let fft = AngularFft::new(g.n_theta());
    let friction = FrictionProfile::new(&g, &traj.config.alpha)?;
    let t_final = traj.last().t;

    let mut phi = Vec::with_capacity(g.len());
    for &t in g.thetas() {
        for &r in g.radii() {
            phi.push(field.eval(radius, r * t.cos(), r * t.sin()));
        }
    }
    let wall_phi_tau: Vec<f64> = g
        .thetas()
        .iter()
        .map(|&t| {
            let (v, _) = field.eval(radius, radius * t.cos(), radius * t.sin());
            -t.sin() * v[0] + t.cos() * v[1]
        })
        .collect();

    let n_r = g.n_r();
    let mut integrand = Vec::with_capacity(traj.snapshots.len());
    let mut initial = 0.0;
    for (k, snap) in traj.snapshots.iter().enumerate() {
        let psi = ws.solve_poisson(&snap.omega)?;
        let u = ws.velocity(&psi)?;
        let (ux, uy) = u.cartesian();
        let (c, dc) = chi(snap.t, t_final);
        let du = if nu != 0.0 { velocity_gradient(&u, &fft) } else { Vec::new() };
        let mut transient = 0.0;
        let mut convective = 0.0;
        let mut viscous = 0.0;
        for idx in 0..g.len() {
            let w = g.weight(idx % n_r);
            let (v, dv) = &phi[idx];
            let uu = [ux[idx], uy[idx]];
            let dot = uu[0] * v[0] + uu[1] * v[1];
            transient += dot * w;
            let mut conv = 0.0;
            for a in 0..2 {
                for b in 0..2 {
                    conv += uu[a] * uu[b] * dv[a][b];
                }
            }
            convective += conv * w;
            if nu != 0.0 {
                let gu = &du[idx];
                let s_phi = [dv[0][0], dv[1][1], 0.5 * (dv[0][1] + dv[1][0])];
                let s_u = [gu[0][0], gu[1][1], 0.5 * (gu[0][1] + gu[1][0])];
                viscous += (s_phi[0] * s_u[0] + s_phi[1] * s_u[1] + 2.0 * s_phi[2] * s_u[2]) * w;
            }
        }
        if k == 0 {
            initial = transient;
        }
        let friction_term = if nu != 0.0 {
            let slip = slip_velocity(&psi);
            let arc = radius * g.dtheta();
            (0..g.n_theta())
                .map(|i| friction.alpha().values()[i] * wall_phi_tau[i] * slip.values()[i] * arc)
                .sum::<f64>()
        } else {
            0.0
        };
        integrand.push((snap.t, dc * transient + c * convective - 2.0 * nu * c * viscous - nu * c * friction_term));
    }
    let time_integral: f64 = integrand.windows(2).map(|w| 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0)).sum();
    Ok(time_integral + initial)
}

/// `|weak_form|`.
pub fn weak_residual(traj: &Trajectory, nu: f64, field: &TestField) -> Result<f64> {
    Ok(weak_form(traj, nu, field)?.abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn test_field_is_divergence_free_and_tangent() {
        for m in 0..3 {
            let f = TestField::mode(m);
            for &(x, y) in &[(0.1, 0.2), (-0.5, 0.3), (0.7, -0.6)] {
                let (_, d) = f.eval(1.0, x, y);
                assert!((d[0][0] + d[1][1]).abs() < 1e-13);
            }
            for k in 0..8 {
                let t = k as f64 * 0.8;
                let (v, _) = f.eval(1.0, t.cos(), t.sin());
                assert!(v[0].abs() < 1e-14 && v[1].abs() < 1e-14);
            }
        }
    }

    #[test]
    fn test_field_gradient_matches_differences() {
        let f = TestField { coefficients: [0.3, -1.0, 0.7] };
        let (x, y, e) = (0.31, -0.22, 1e-6);
        let (_, d) = f.eval(1.0, x, y);
        let (px, _) = f.eval(1.0, x + e, y);
        let (mx, _) = f.eval(1.0, x - e, y);
        let (py, _) = f.eval(1.0, x, y + e);
        let (my, _) = f.eval(1.0, x, y - e);
        for i in 0..2 {
            assert!((d[i][0] - (px[i] - mx[i]) / (2.0 * e)).abs() < 1e-7);
            assert!((d[i][1] - (py[i] - my[i]) / (2.0 * e)).abs() < 1e-7);
        }
    }

    #[test]
    fn chi_vanishes_at_final_time() {
        let (c, _) = chi(2.0, 2.0);
        assert!(c.abs() < 1e-15);
        let (c0, d0) = chi(0.0, 2.0);
        assert_eq!((c0, d0), (1.0, 0.0));
    }
}
