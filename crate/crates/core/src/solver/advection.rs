use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fourier::AngularFft;
use crate::geometry::{ScalarField, VelocityField};

/// `-div(u omega)`, equal to `-u . grad omega` for divergence-free `u`.
///
/// Radial fluxes live on the cell faces with `omega` averaged across the face;
/// the face flux is zero at the pole and at the wall. The angular flux
/// `u_theta omega` is differentiated spectrally and the result is truncated to
/// the modes with `3|m| <= n_theta`.
pub fn advective_tendency(omega: &ScalarField, u: &VelocityField) -> Result<ScalarField> {
    if **omega.grid() != **u.grid() {
        return Err(Error::GridMismatch);
    }
    let fft = AngularFft::new(omega.grid().n_theta());
    Ok(tendency_with(&fft, omega, u))
}

pub(crate) fn tendency_with(fft: &AngularFft, omega: &ScalarField, u: &VelocityField) -> ScalarField {
    let g = omega.grid();
    let (n_theta, n_r) = (g.n_theta(), g.n_r());
    let h = g.dr();
    let w = omega.values();

    let averaged;
    let flux = match u.radial_flux() {
        Some(f) => f,
        None => {
            averaged = averaged_flux(u);
            &averaged[..]
        }
    };

    let mut radial = vec![0.0; g.len()];
    let mut angular = vec![0.0; g.len()];
    for i in 0..n_theta {
        let row = &flux[i * (n_r + 1)..(i + 1) * (n_r + 1)];
        let mut below = 0.0;
        for (j, &r) in g.radii().iter().enumerate() {
            let k = i * n_r + j;
            let above = if j + 1 < n_r { row[j + 1] * 0.5 * (w[k] + w[k + 1]) } else { 0.0 };
            radial[k] = -(above - below) / (r * h);
            below = above;
            angular[k] = u.u_theta[k] * w[k];
        }
    }

    let mut spec = fft.forward_columns(&radial, n_r);
    let ang = fft.forward_columns(&angular, n_r);
    let zero = Complex64::new(0.0, 0.0);
    for k in 0..n_theta {
        let rows = k * n_r..(k + 1) * n_r;
        if !fft.keeps(k) {
            spec[rows].iter_mut().for_each(|s| *s = zero);
            continue;
        }
        let d = fft.derivative_factor(k);
        for ((s, a), r) in spec[rows.clone()].iter_mut().zip(&ang[rows]).zip(g.radii()) {
            *s -= d * *a / *r;
        }
    }
    ScalarField::from_raw(g, fft.inverse_columns(&spec, n_r))
}

/// `r u_r` on interior faces from the average of the adjacent cells.
fn averaged_flux(u: &VelocityField) -> Vec<f64> {
    let g = u.grid();
    let n_r = g.n_r();
    let mut flux = vec![0.0; g.n_theta() * (n_r + 1)];
    for i in 0..g.n_theta() {
        for k in 1..n_r {
            let (a, b) = (u.u_r[g.idx(i, k - 1)], u.u_r[g.idx(i, k)]);
            flux[i * (n_r + 1) + k] = g.face(k) * 0.5 * (a + b);
        }
    }
    flux
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::PoissonWorkspace;
    use crate::geometry::build_grid;

    #[test]
    fn radial_vorticity_is_steady() {
        let g = build_grid(1.0, 32, 32).unwrap();
        let ws = PoissonWorkspace::new(&g).unwrap();
        let om = ScalarField::from_fn(&g, |r, _| (3.0 * r).cos() + r * r);
        let u = ws.biot_savart(&om).unwrap();
        let t = advective_tendency(&om, &u).unwrap();
        assert!(t.max_abs() < 1e-12, "{}", t.max_abs());
    }

    #[test]
    fn constant_vorticity_in_any_flow_is_steady() {
        let g = build_grid(1.0, 32, 32).unwrap();
        let ws = PoissonWorkspace::new(&g).unwrap();
        let src = ScalarField::from_cartesian_fn(&g, |x, y| (-10.0 * ((x - 0.3).powi(2) + y * y)).exp() + x * y);
        let u = ws.biot_savart(&src).unwrap();
        let t = advective_tendency(&ScalarField::constant(&g, 1.7), &u).unwrap();
        assert!(t.max_abs() < 1e-10, "{}", t.max_abs());
    }

    #[test]
    fn total_vorticity_is_conserved() {
        let g = build_grid(1.0, 32, 24).unwrap();
        let ws = PoissonWorkspace::new(&g).unwrap();
        let om = ScalarField::from_cartesian_fn(&g, |x, y| (-6.0 * ((x - 0.3).powi(2) + (y + 0.1).powi(2))).exp());
        let u = ws.biot_savart(&om).unwrap();
        let t = advective_tendency(&om, &u).unwrap();
        assert!(t.integral().abs() < 1e-13);
    }

    #[test]
    fn manufactured_second_order_in_r() {
        // psi = (1 - r^2)^2 x / 4, omega = sin(2x) + y^2; compare with exact u . grad omega.
        // The first and last rings carry O(h) truncation on O(h) area, so measure in L1.
        let err = |n_r: usize| {
            let g = build_grid(1.0, 64, n_r).unwrap();
            let u = VelocityField::from_cartesian_fn(&g, |x, y| {
                let q = 1.0 - x * x - y * y;
                let psi_x = 0.25 * (q * q - 4.0 * q * x * x);
                let psi_y = -q * x * y;
                (-psi_y, psi_x)
            });
            let om = ScalarField::from_cartesian_fn(&g, |x, y| (2.0 * x).sin() + y * y);
            let exact = ScalarField::from_cartesian_fn(&g, |x, y| {
                let q = 1.0 - x * x - y * y;
                let (ux, uy) = (q * x * y, 0.25 * (q * q - 4.0 * q * x * x));
                -(ux * 2.0 * (2.0 * x).cos() + uy * 2.0 * y)
            });
            let t = advective_tendency(&om, &u).unwrap();
            let d = t.axpby(1.0, &exact, -1.0).unwrap();
            d.abs().integral()
        };
        let (e1, e2) = (err(32), err(64));
        assert!((e1 / e2).log2() >= 1.8, "{e1} {e2}");
    }
}
