use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use crate::elliptic::radial_coefficients;
use crate::error::Result;
use crate::fourier::AngularFft;
use crate::geometry::{BoundaryTrace, PolarGrid, ScalarField};
use crate::tridiag::Tridiagonal;

/// Crank-Nicolson for `omega_t = nu Delta omega + f` with Dirichlet wall data
/// imposed through the ghost value `2 omega_b - omega_{n-1}`.
#[derive(Debug, Clone)]
pub(crate) struct CrankNicolson {
    grid: Arc<PolarGrid>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl CrankNicolson {
    pub(crate) fn new(grid: &Arc<PolarGrid>) -> Self {
        let (lower, upper) = radial_coefficients(grid);
        Self { grid: grid.clone(), lower, upper }
    }

    fn diagonal(&self, j: usize, m2: f64) -> f64 {
        let r = self.grid.radii()[j];
        let mut d = -(self.lower[j] + self.upper[j]) - m2 / (r * r);
        if j + 1 == self.grid.n_r() {
            d -= self.upper[j];
        }
        d
    }

    /// Advances `omega` by `dt`. `forcing` is the already time-integrated
    /// explicit increment; `wall_old` / `wall_new` are the wall vorticities at
    /// the start and end of the step.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn step(
        &self,
        fft: &AngularFft,
        omega: &ScalarField,
        forcing: &[f64],
        wall_old: &BoundaryTrace,
        wall_new: &BoundaryTrace,
        nu: f64,
        dt: f64,
    ) -> Result<ScalarField> {
        let g = &self.grid;
        let (n_theta, n_r) = (g.n_theta(), g.n_r());
        let half = 0.5 * nu * dt;
        let last = n_r - 1;
        let up_wall = self.upper[last];

        let modes: Vec<Tridiagonal> = (0..=n_theta / 2)
            .into_par_iter()
            .map(|m| {
                let m2 = (m * m) as f64;
                let lo: Vec<f64> = self.lower.iter().map(|l| -half * l).collect();
                let mut up: Vec<f64> = self.upper.iter().map(|u| -half * u).collect();
                up[last] = 0.0;
                let diag: Vec<f64> = (0..n_r).map(|j| 1.0 - half * self.diagonal(j, m2)).collect();
                Tridiagonal::factor(&lo, &diag, &up)
            })
            .collect::<Result<_>>()?;

        let mut spec = fft.forward_columns(omega.values(), n_r);
        let force = fft.forward_columns(forcing, n_r);
        let b_old = fft.forward_trace(wall_old.values());
        let b_new = fft.forward_trace(wall_new.values());

        spec.par_chunks_mut(n_r).enumerate().for_each(|(k, row)| {
            let m = fft.wavenumber(k).unsigned_abs() as usize;
            let m2 = (m * m) as f64;
            let f = &force[k * n_r..(k + 1) * n_r];
            let mut rhs = vec![Complex64::new(0.0, 0.0); n_r];
            for j in 0..n_r {
                let mut lap = row[j] * self.diagonal(j, m2);
                if j > 0 {
                    lap += row[j - 1] * self.lower[j];
                }
                if j < last {
                    lap += row[j + 1] * self.upper[j];
                }
                rhs[j] = row[j] + lap * half + f[j];
            }
            rhs[last] += (b_old[k] + b_new[k]) * (2.0 * half * up_wall);
            modes[m].solve_in_place(&mut rhs);
            row.copy_from_slice(&rhs);
        });
        Ok(ScalarField::from_raw(g, fft.inverse_columns(&spec, n_r)))
    }
}
