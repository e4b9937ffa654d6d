//! Streamfunction solve, velocity recovery and the Biot-Savart law on the disk.
//!
//! Conventions: `Delta psi = omega`, `psi = 0` on the wall and
//! `u = grad_perp psi = (-d_y psi, d_x psi)`. In polar components this is
//! `u_r = -(1/r) d_theta psi`, `u_theta = d_r psi`, so positive vorticity
//! rotates counterclockwise and the slip velocity `u . tau` equals `d_r psi` at `r = R`.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fourier::AngularFft;
use crate::geometry::{BoundaryTrace, FrictionProfile, PolarGrid, ScalarField, VelocityField};
use crate::tridiag::Tridiagonal;

/// Finite-volume coefficients of `(1/r) d_r (r d_r .)` at cell `j`:
/// `lower[j]` couples to `j - 1`, `upper[j]` to `j + 1`. The pole face has zero area.
pub(crate) fn radial_coefficients(grid: &PolarGrid) -> (Vec<f64>, Vec<f64>) {
    let h2 = grid.dr() * grid.dr();
    let n = grid.n_r();
    let mut lower = vec![0.0; n];
    let mut upper = vec![0.0; n];
    for (j, &r) in grid.radii().iter().enumerate() {
        lower[j] = grid.face(j) / (r * h2);
        upper[j] = grid.face(j + 1) / (r * h2);
    }
    (lower, upper)
}

/// Per-mode factorizations of the radial Laplacian with `psi(R) = 0`.
#[derive(Debug, Clone)]
pub struct PoissonWorkspace {
    grid: Arc<PolarGrid>,
    fft: AngularFft,
    /// Indexed by `|m|`, `0..=n_theta/2`.
    modes: Vec<Tridiagonal>,
}

impl PoissonWorkspace {
    pub fn new(grid: &Arc<PolarGrid>) -> Result<Self> {
        let n = grid.n_r();
        let (lower, upper) = radial_coefficients(grid);
        let modes = (0..=grid.n_theta() / 2)
            .map(|m| {
                let m2 = (m * m) as f64;
                let mut lo = lower.clone();
                let mut up = upper.clone();
                let mut diag: Vec<f64> = grid
                    .radii()
                    .iter()
                    .enumerate()
                    .map(|(j, r)| -(lower[j] + upper[j]) - m2 / (r * r))
                    .collect();
                // ghost psi_n = psi_{n-2}/3 - 2 psi_{n-1}: quadratic through psi(R) = 0
                lo[n - 1] += up[n - 1] / 3.0;
                diag[n - 1] -= 2.0 * up[n - 1];
                up[n - 1] = 0.0;
                Tridiagonal::factor(&lo, &diag, &up)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { grid: grid.clone(), fft: AngularFft::new(grid.n_theta()), modes })
    }

    pub fn grid(&self) -> &Arc<PolarGrid> {
        &self.grid
    }

    pub fn fft(&self) -> &AngularFft {
        &self.fft
    }

    pub fn mode_count(&self) -> usize {
        self.modes.len()
    }

    fn check(&self, f: &ScalarField) -> Result<()> {
        if **f.grid() != *self.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    /// Solves `Delta psi = omega` with `psi = 0` on the wall.
    pub fn solve_poisson(&self, omega: &ScalarField) -> Result<ScalarField> {
        self.check(omega)?;
        let g = &self.grid;
        let n_r = g.n_r();
        let mut spec = self.fft.forward_rings(g, omega.values());
        for k in 0..g.n_theta() {
            let m = self.fft.wavenumber(k).unsigned_abs() as usize;
            self.modes[m].solve_in_place(&mut spec[k * n_r..(k + 1) * n_r]);
        }
        Ok(ScalarField::from_raw(g, self.fft.inverse_rings(g, &spec)))
    }

    /// `u = grad_perp psi` at the cell centers.
    pub fn velocity(&self, psi: &ScalarField) -> Result<VelocityField> {
        self.check(psi)?;
        let g = &self.grid;
        let n_r = g.n_r();
        let h = g.dr();
        let dpsi = self.fft.d_theta(g, psi.values());
        let faces = face_values(psi);
        let flux: Vec<f64> = self.fft.d_theta_columns(&faces, n_r + 1).iter().map(|d| -d).collect();
        let mut u_r = vec![0.0; g.len()];
        let mut u_theta = vec![0.0; g.len()];
        for i in 0..g.n_theta() {
            for (j, &r) in g.radii().iter().enumerate() {
                let k = g.idx(i, j);
                u_r[k] = -dpsi[k] / r;
                u_theta[k] = (faces[i * (n_r + 1) + j + 1] - faces[i * (n_r + 1) + j]) / h;
            }
        }
        Ok(VelocityField::new(g, u_r, u_theta)?.with_radial_flux(flux))
    }

    /// `K[omega]`: streamfunction solve followed by [`velocity`](Self::velocity).
    pub fn biot_savart(&self, omega: &ScalarField) -> Result<VelocityField> {
        let psi = self.solve_poisson(omega)?;
        self.velocity(&psi)
    }
}

/// Streamfunction ghost values: pole neighbours come from the diametrically
/// opposite cell, the wall ghost from the quadratic through `psi(R) = 0`.
#[inline]
pub(crate) fn psi_radial(psi: &ScalarField, i: usize, j: isize) -> f64 {
    let g = psi.grid();
    let n = g.n_r() as isize;
    if j < 0 {
        psi.at(g.opposite(i), (-j - 1) as usize)
    } else if j >= n {
        debug_assert_eq!(j, n);
        psi.at(i, g.n_r() - 2) / 3.0 - 2.0 * psi.at(i, g.n_r() - 1)
    } else {
        psi.at(i, j as usize)
    }
}

/// Streamfunction on the radial faces, layout `[i * (n_r + 1) + k]` with
/// face `k` at radius `k dr`. Interior faces use four-point interpolation,
/// the wall face is exactly zero and the pole value is the angular mean
/// extrapolated evenly in `r`.
pub(crate) fn face_values(psi: &ScalarField) -> Vec<f64> {
    let g = psi.grid();
    let (n_theta, n_r) = (g.n_theta(), g.n_r());
    let means = psi.ring_means();
    let pole = (9.0 * means[0] - means[1]) / 8.0;
    let mut faces = vec![0.0; n_theta * (n_r + 1)];
    for i in 0..n_theta {
        let row = &mut faces[i * (n_r + 1)..(i + 1) * (n_r + 1)];
        row[0] = pole;
        for (k, f) in row.iter_mut().enumerate().take(n_r).skip(1) {
            let k = k as isize;
            *f = (-psi_radial(psi, i, k - 2) + 9.0 * psi_radial(psi, i, k - 1) + 9.0 * psi_radial(psi, i, k)
                - psi_radial(psi, i, k + 1))
                / 16.0;
        }
        row[n_r] = 0.0;
    }
    faces
}

/// `u . tau = d_r psi (R)` from the quadratic through `psi(R) = 0` and the two outermost cells.
pub fn slip_velocity(psi: &ScalarField) -> BoundaryTrace {
    let g = psi.grid();
    let n = g.n_r();
    let h = g.dr();
    let values = (0..g.n_theta())
        .map(|i| (psi.at(i, n - 2) / 3.0 - 3.0 * psi.at(i, n - 1)) / h)
        .collect();
    BoundaryTrace::from_raw(g, values)
}

/// Wall vorticity required by the Navier condition: `(2 kappa - alpha) u . tau`.
pub fn navier_boundary_vorticity(
    slip: &BoundaryTrace,
    friction: &FrictionProfile,
    kappa: f64,
) -> Result<BoundaryTrace> {
    if slip.values().len() != friction.alpha().values().len() {
        return Err(Error::GridMismatch);
    }
    Ok(slip.zip_with(friction.alpha(), |s, a| (2.0 * kappa - a) * s))
}

/// Dirichlet Green's function of the disk of radius `radius` (method of images).
pub fn green_function(radius: f64, x: [f64; 2], y: [f64; 2]) -> f64 {
    let ny = y[0].hypot(y[1]);
    let dx = (x[0] - y[0]).hypot(x[1] - y[1]);
    if ny == 0.0 {
        let nx = x[0].hypot(x[1]);
        return (nx / radius).ln() / (2.0 * PI);
    }
    let s = radius * radius / (ny * ny);
    let image = (x[0] - s * y[0]).hypot(x[1] - s * y[1]);
    (dx.ln() - (ny * image / radius).ln()) / (2.0 * PI)
}

/// `grad_perp_x G(x, y)`.
fn green_velocity_kernel(radius: f64, x: [f64; 2], y: [f64; 2]) -> [f64; 2] {
    let (dx, dy) = (x[0] - y[0], x[1] - y[1]);
    let d2 = dx * dx + dy * dy;
    let ny2 = y[0] * y[0] + y[1] * y[1];
    let s = radius * radius / ny2;
    let (ix, iy) = (x[0] - s * y[0], x[1] - s * y[1]);
    let i2 = ix * ix + iy * iy;
    let gx = (dx / d2 - ix / i2) / (2.0 * PI);
    let gy = (dy / d2 - iy / i2) / (2.0 * PI);
    [-gy, gx]
}

/// Velocity at `probes` (Cartesian) by direct quadrature of the Green's kernel.
///
/// Cells far from a probe use the midpoint rule. Cells within four radial
/// spacings are split into 16 x 16 sub-sectors, cells within `0.15 R` into
/// 4 x 4, with the vorticity reconstructed linearly inside each split cell.
/// The interpolated vorticity at the probe is subtracted first and its exact
/// rigid-rotation velocity added back, which removes the `1/rho` singularity.
/// O(cells x probes), meant for cross-checking only.
/// Bilinear interpolation in `(r, theta)`, constant in `r` inside the first ring.
fn bilinear(omega: &ScalarField, x: [f64; 2]) -> f64 {
    let g = omega.grid();
    let (r, t) = (x[0].hypot(x[1]), x[1].atan2(x[0]).rem_euclid(2.0 * PI));
    let s_r = ((r / g.dr() - 0.5).max(0.0)).min((g.n_r() - 1) as f64);
    let j = (s_r.floor() as usize).min(g.n_r() - 2);
    let a = s_r - j as f64;
    let s_t = t / g.dtheta();
    let i = (s_t.floor() as usize) % g.n_theta();
    let b = s_t - s_t.floor();
    let i1 = (i + 1) % g.n_theta();
    let ring = |j: usize| (1.0 - b) * omega.at(i, j) + b * omega.at(i1, j);
    (1.0 - a) * ring(j) + a * ring(j + 1)
}

pub fn green_direct(omega: &ScalarField, probes: &[[f64; 2]]) -> Result<Vec<[f64; 2]>> {
    const SUB_NEAR: usize = 16;
    const SUB_MID: usize = 4;
    const MID_ZONE: f64 = 0.15;
    let g = omega.grid();
    let radius = g.radius();
    let (h, dth) = (g.dr(), g.dtheta());
    let centers: Vec<[f64; 2]> = g
        .thetas()
        .iter()
        .flat_map(|&t| g.radii().iter().map(move |&r| [r * t.cos(), r * t.sin()]))
        .collect();

    probes
        .iter()
        .map(|&x| {
            if x[0].hypot(x[1]) >= radius {
                return Err(Error::OutsideDomain { r: x[0].hypot(x[1]), radius });
            }
            // constant vorticity c induces (c / 2) x_perp exactly; the remainder is bounded at the probe
            let w_x = bilinear(omega, x);
            let mut u = [-0.5 * w_x * x[1], 0.5 * w_x * x[0]];
            for i in 0..g.n_theta() {
                for j in 0..g.n_r() {
                    let k = g.idx(i, j);
                    let y = centers[k];
                    let dist = (x[0] - y[0]).hypot(x[1] - y[1]);
                    if dist < 0.5 * h * (1.0 - 1e-9) {
                        return Err(Error::InvalidInput(format!(
                            "probe ({:.4}, {:.4}) is within half a cell of a source node",
                            x[0], x[1]
                        )));
                    }
                    let w = omega.values()[k] - w_x;
                    let sub = if dist <= 4.0 * h {
                        SUB_NEAR
                    } else if dist <= MID_ZONE * radius {
                        SUB_MID
                    } else {
                        1
                    };
                    if sub == 1 {
                        let kv = green_velocity_kernel(radius, x, y);
                        let wt = w * g.weight(j);
                        u[0] += kv[0] * wt;
                        u[1] += kv[1] * wt;
                        continue;
                    }
                    // linear reconstruction from centred differences
                    let (jm, jp) = (j.saturating_sub(1), (j + 1).min(g.n_r() - 1));
                    let d_r = (omega.at(i, jp) - omega.at(i, jm)) / (g.radii()[jp] - g.radii()[jm]);
                    let (im, ip) = ((i + g.n_theta() - 1) % g.n_theta(), (i + 1) % g.n_theta());
                    let d_t = (omega.at(ip, j) - omega.at(im, j)) / (2.0 * dth);
                    let r_lo = g.face(j);
                    let t_lo = g.thetas()[i] - 0.5 * dth;
                    let (sh, st) = (h / sub as f64, dth / sub as f64);
                    for a in 0..sub {
                        let rho = r_lo + (a as f64 + 0.5) * sh;
                        for b in 0..sub {
                            let phi = t_lo + (b as f64 + 0.5) * st;
                            let val = w + d_r * (rho - g.radii()[j]) + d_t * (phi - g.thetas()[i]);
                            let wt = val * rho * sh * st;
                            let kv = green_velocity_kernel(radius, x, [rho * phi.cos(), rho * phi.sin()]);
                            u[0] += kv[0] * wt;
                            u[1] += kv[1] * wt;
                        }
                    }
                }
            }
            Ok(u)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_grid;

    fn ws(n_theta: usize, n_r: usize, radius: f64) -> PoissonWorkspace {
        PoissonWorkspace::new(&build_grid(radius, n_theta, n_r).unwrap()).unwrap()
    }

    #[test]
    fn solid_rotation_potential_is_exact() {
        let w = ws(16, 32, 1.0);
        let psi = w.solve_poisson(&ScalarField::constant(w.grid(), 2.0)).unwrap();
        for (j, &r) in w.grid().radii().iter().enumerate() {
            assert!((psi.at(5, j) - (r * r - 1.0) / 2.0).abs() < 1e-12);
        }
        let slip = slip_velocity(&psi);
        assert!(slip.values().iter().all(|s| (s - 1.0).abs() < 1e-11));
    }

    #[test]
    fn zero_vorticity_gives_zero() {
        let w = ws(16, 8, 1.0);
        let psi = w.solve_poisson(&ScalarField::zeros(w.grid())).unwrap();
        assert!(psi.values().iter().all(|&v| v == 0.0));
        let u = w.velocity(&psi).unwrap();
        assert_eq!(u.max_speed(), 0.0);
        assert!(slip_velocity(&psi).sup_norm() == 0.0);
    }

    #[test]
    fn solid_rotation_velocity_sign() {
        let w = ws(16, 16, 1.0);
        let u = w.biot_savart(&ScalarField::constant(w.grid(), 2.0)).unwrap();
        let (ux, uy) = u.cartesian();
        for (i, &t) in w.grid().thetas().iter().enumerate() {
            for (j, &r) in w.grid().radii().iter().enumerate() {
                let k = w.grid().idx(i, j);
                assert!((u.u_theta[k] - r).abs() < 1e-12);
                assert!(u.u_r[k].abs() < 1e-12);
                assert!((ux[k] + r * t.sin()).abs() < 1e-12);
                assert!((uy[k] - r * t.cos()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn uniform_vorticity_slip_any_radius() {
        for &radius in &[0.5, 1.0, 2.0] {
            let w = ws(16, 24, radius);
            let psi = w.solve_poisson(&ScalarField::constant(w.grid(), 3.0)).unwrap();
            let slip = slip_velocity(&psi);
            for s in slip.values() {
                assert!((s - 3.0 * radius / 2.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn grid_mismatch_is_reported() {
        let w = ws(16, 8, 1.0);
        let other = build_grid(1.0, 16, 16).unwrap();
        assert!(matches!(w.solve_poisson(&ScalarField::zeros(&other)), Err(Error::GridMismatch)));
    }

    #[test]
    fn navier_wall_vorticity_examples() {
        let g = build_grid(1.0, 16, 8).unwrap();
        let slip = BoundaryTrace::constant(&g, 1.0);
        let a0 = FrictionProfile::constant(&g, 0.0).unwrap();
        let wb = navier_boundary_vorticity(&slip, &a0, 1.0).unwrap();
        assert!(wb.values().iter().all(|&v| v == 2.0));

        let free = FrictionProfile::free_boundary(&g);
        let s = BoundaryTrace::from_fn(&g, |t| 3.0 * t.sin() + 0.2);
        assert_eq!(navier_boundary_vorticity(&s, &free, 1.0).unwrap().sup_norm(), 0.0);

        let spec = crate::geometry::FrictionSpec { constant: 1.0, cos: vec![1.0], sin: vec![] };
        let var = FrictionProfile::new(&g, &spec).unwrap();
        let wb = navier_boundary_vorticity(&slip, &var, 1.0).unwrap();
        for (v, t) in wb.values().iter().zip(g.thetas()) {
            assert!((v - (1.0 - t.cos())).abs() < 1e-14);
        }
    }

    #[test]
    fn green_function_values() {
        let v = green_function(1.0, [0.5, 0.0], [0.0, 0.0]);
        assert!((v - (0.5f64).ln() / (2.0 * PI)).abs() < 1e-15);
        assert!((v + 0.11032).abs() < 1e-5);
        // the image formula approaches the same limit as y -> 0
        let near = green_function(1.0, [0.5, 0.0], [1e-9, 0.0]);
        assert!((near - v).abs() < 1e-8);
    }

    #[test]
    fn green_function_vanishes_on_wall() {
        let y = [0.3, -0.2];
        for k in 0..8 {
            let t = k as f64 * 0.7;
            assert!(green_function(1.0, [t.cos(), t.sin()], y).abs() < 1e-14);
        }
    }

    #[test]
    fn green_direct_rejects_probe_on_node() {
        let g = build_grid(1.0, 16, 8).unwrap();
        let om = ScalarField::constant(&g, 1.0);
        let r0 = g.radii()[3];
        assert!(green_direct(&om, &[[r0, 0.0]]).is_err());
        assert!(green_direct(&om, &[[1.5, 0.0]]).is_err());
    }
}
