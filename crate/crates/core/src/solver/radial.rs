//! One-dimensional reference for radially symmetric vorticity:
//! `omega_t = nu (omega_rr + omega_r / r)` with the nonlocal wall condition
//! `omega(R) = (2 kappa - alpha) (1/R) int_0^R s omega ds`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{FrictionSpec, ScalarField};
use crate::tridiag::Tridiagonal;

#[derive(Debug, Clone, PartialEq)]
pub struct RadialConfig {
    pub radius: f64,
    pub alpha: f64,
    pub nu: f64,
    pub t_final: f64,
    /// Number of radial intervals; nodes sit at `i R / intervals`.
    pub intervals: usize,
    pub steps: usize,
    /// Output times, each a multiple of `t_final / steps`.
    pub times: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RadialSolution {
    pub nodes: Vec<f64>,
    pub times: Vec<f64>,
    /// `profiles[k][i]` is the vorticity at `times[k]`, `nodes[i]`.
    pub profiles: Vec<Vec<f64>>,
    /// `2 pi int_0^R s omega ds` at every output time.
    pub circulation: Vec<f64>,
}

impl RadialSolution {
    /// Piecewise-linear value of output `k` at radius `r`.
    pub fn sample(&self, k: usize, r: f64) -> f64 {
        let h = self.nodes[1] - self.nodes[0];
        let n = self.nodes.len() - 1;
        let x = (r / h).clamp(0.0, n as f64);
        let i = (x.floor() as usize).min(n - 1);
        let s = x - i as f64;
        (1.0 - s) * self.profiles[k][i] + s * self.profiles[k][i + 1]
    }
}

/// Solves the radial problem from an analytic profile.
///
/// Crank-Nicolson in time; the first two steps are each replaced by two
/// backward Euler half steps to damp the start-up mismatch between the data
/// and the wall condition.
pub fn radial_reference_fn(profile: &dyn Fn(f64) -> f64, cfg: &RadialConfig) -> Result<RadialSolution> {
    if !(cfg.radius > 0.0) || !(cfg.t_final > 0.0) || !(cfg.nu >= 0.0) || cfg.intervals < 4 || cfg.steps == 0 {
        return Err(Error::InvalidInput(format!("invalid radial problem {cfg:?}")));
    }
    let n = cfg.intervals;
    let h = cfg.radius / n as f64;
    let nodes: Vec<f64> = (0..=n).map(|i| i as f64 * h).collect();
    let dt = cfg.t_final / cfg.steps as f64;
    let mut marks = Vec::with_capacity(cfg.times.len());
    for &t in &cfg.times {
        let k = (t / dt).round();
        if (k * dt - t).abs() > 1e-9 * cfg.t_final || k < 0.0 || k as usize > cfg.steps {
            return Err(Error::InvalidInput(format!("output time {t} is not a multiple of dt = {dt}")));
        }
        marks.push(k as usize);
    }

    let kappa = 1.0 / cfg.radius;
    let c = (2.0 * kappa - cfg.alpha) / cfg.radius;
    // trapezoid weights of int_0^R s omega ds
    let mut w: Vec<f64> = nodes.iter().map(|r| r * h).collect();
    w[n] *= 0.5;
    let w_wall = w[n];

    // L on the unknowns 0..n-1; `a_wall` couples row n-1 to omega_n
    let mut lower = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut upper = vec![0.0; n];
    diag[0] = -4.0 / (h * h);
    upper[0] = 4.0 / (h * h);
    for i in 1..n {
        let r = nodes[i];
        lower[i] = 1.0 / (h * h) - 1.0 / (2.0 * r * h);
        diag[i] = -2.0 / (h * h);
        upper[i] = 1.0 / (h * h) + 1.0 / (2.0 * r * h);
    }
    let a_wall = upper[n - 1];
    upper[n - 1] = 0.0;

    let apply = |x: &[f64], b: f64| -> Vec<f64> {
        (0..n)
            .map(|i| {
                let mut v = diag[i] * x[i];
                if i > 0 {
                    v += lower[i] * x[i - 1];
                }
                if i + 1 < n {
                    v += upper[i] * x[i + 1];
                }
                if i == n - 1 {
                    v += a_wall * b;
                }
                v
            })
            .collect()
    };

    struct Implicit {
        m: Tridiagonal,
        z: Vec<f64>,
        denom: f64,
    }
    let build = |theta_dt: f64| -> Result<Implicit> {
        let s = theta_dt * cfg.nu;
        let lo: Vec<f64> = lower.iter().map(|v| -s * v).collect();
        let up: Vec<f64> = upper.iter().map(|v| -s * v).collect();
        let di: Vec<f64> = diag.iter().map(|v| 1.0 - s * v).collect();
        let m = Tridiagonal::factor(&lo, &di, &up)?;
        let mut z = vec![0.0; n];
        z[n - 1] = s * a_wall;
        m.solve_in_place(&mut z);
        let wz: f64 = w[..n].iter().zip(&z).map(|(a, b)| a * b).sum();
        Ok(Implicit { m, z, denom: 1.0 - c * w_wall - c * wz })
    };
    let advance = |imp: &Implicit, x: &[f64], b: f64, explicit_dt: f64| -> (Vec<f64>, f64) {
        let lx = apply(x, b);
        let mut y: Vec<f64> = x.iter().zip(&lx).map(|(v, l)| v + explicit_dt * cfg.nu * l).collect();
        imp.m.solve_in_place(&mut y);
        let wy: f64 = w[..n].iter().zip(&y).map(|(a, b)| a * b).sum();
        let b_new = c * wy / imp.denom;
        let x_new = y.iter().zip(&imp.z).map(|(a, z)| a + b_new * z).collect();
        (x_new, b_new)
    };

    // a Crank-Nicolson step of dt and a backward Euler step of dt/2 share the implicit matrix
    let implicit = build(0.5 * dt)?;

    let mut x: Vec<f64> = nodes[..n].iter().map(|&r| profile(r)).collect();
    let mut b = profile(cfg.radius);
    let total = |x: &[f64], b: f64| 2.0 * PI * (w[..n].iter().zip(x).map(|(a, v)| a * v).sum::<f64>() + w_wall * b);

    let mut out = RadialSolution { nodes: nodes.clone(), times: Vec::new(), profiles: Vec::new(), circulation: Vec::new() };
    let push = |k: usize, x: &[f64], b: f64, out: &mut RadialSolution| {
        for (idx, &m) in marks.iter().enumerate() {
            if m == k {
                let mut prof = x.to_vec();
                prof.push(b);
                out.times.push(cfg.times[idx]);
                out.profiles.push(prof);
                out.circulation.push(total(x, b));
            }
        }
    };
    push(0, &x, b, &mut out);
    for k in 1..=cfg.steps {
        if k <= 2 {
            for _ in 0..2 {
                let (nx, nb) = advance(&implicit, &x, b, 0.0);
                x = nx;
                b = nb;
            }
        } else {
            let (nx, nb) = advance(&implicit, &x, b, 0.5 * dt);
            x = nx;
            b = nb;
        }
        push(k, &x, b, &mut out);
    }
    Ok(out)
}

/// [`radial_reference_fn`] for a radially symmetric field on the polar grid,
/// interpolated linearly between ring centers (constant beyond the outermost
/// and innermost rings). `alpha` must be constant.
pub fn radial_reference(omega0: &ScalarField, alpha: &FrictionSpec, cfg: &RadialConfig) -> Result<RadialSolution> {
    if !alpha.is_constant() {
        return Err(Error::InvalidInput("radial reference needs a constant friction coefficient".into()));
    }
    let g = omega0.grid();
    if (g.radius() - cfg.radius).abs() > 1e-14 * g.radius() {
        return Err(Error::GridMismatch);
    }
    let means = omega0.ring_means();
    let scale = omega0.max_abs().max(f64::MIN_POSITIVE);
    for i in 0..g.n_theta() {
        for (j, m) in means.iter().enumerate() {
            if (omega0.at(i, j) - m).abs() > 1e-12 * scale {
                return Err(Error::InvalidInput("initial vorticity is not radially symmetric".into()));
            }
        }
    }
    if cfg.intervals < 8 * g.n_r() {
        return Err(Error::Resolution(format!(
            "radial reference needs at least {} intervals, got {}",
            8 * g.n_r(),
            cfg.intervals
        )));
    }
    let radii = g.radii().to_vec();
    let profile = move |r: f64| {
        let x = r / g.dr() - 0.5;
        if x <= 0.0 {
            return means[0];
        }
        let j = x.floor() as usize;
        if j + 1 >= means.len() {
            return means[means.len() - 1];
        }
        let s = (r - radii[j]) / g.dr();
        (1.0 - s) * means[j] + s * means[j + 1]
    };
    let mut cfg = cfg.clone();
    cfg.alpha = alpha.constant;
    radial_reference_fn(&profile, &cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_grid;

    fn config(alpha: f64, nu: f64) -> RadialConfig {
        RadialConfig {
            radius: 1.0,
            alpha,
            nu,
            t_final: 1.0,
            intervals: 256,
            steps: 400,
            times: vec![0.0, 0.5, 1.0],
        }
    }

    #[test]
    fn rotation_with_zero_friction_is_steady() {
        let sol = radial_reference_fn(&|_| 2.0, &config(0.0, 0.1)).unwrap();
        for prof in &sol.profiles {
            assert!(prof.iter().all(|v| (v - 2.0).abs() < 1e-12));
        }
        assert!((sol.circulation[2] - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn inviscid_limit_is_frozen() {
        let sol = radial_reference_fn(&|r| 1.0 - r * r, &config(2.0, 0.0)).unwrap();
        assert_eq!(sol.profiles[0][..256], sol.profiles[2][..256]);
    }

    #[test]
    fn free_boundary_decay_is_monotone() {
        let mut cfg = config(2.0, 0.01);
        cfg.times = (0..=10).map(|k| k as f64 * 0.1).collect();
        let sol = radial_reference_fn(&|_| 2.0, &cfg).unwrap();
        for w in sol.circulation.windows(2) {
            assert!(w[1] < w[0]);
        }
        assert!(sol.profiles.iter().skip(1).all(|p| p[256].abs() < 1e-12));
    }

    #[test]
    fn refinement_converges() {
        let profile = |r: f64| (PI * r / 2.0).cos();
        let mut cfg = config(2.0, 0.05);
        cfg.intervals = 128;
        let coarse = radial_reference_fn(&profile, &cfg).unwrap();
        cfg.intervals = 256;
        cfg.steps = 800;
        let fine = radial_reference_fn(&profile, &cfg).unwrap();
        let d = (0..=20).map(|k| (coarse.sample(2, k as f64 / 20.0) - fine.sample(2, k as f64 / 20.0)).abs());
        assert!(d.fold(0.0, f64::max) < 1e-4);
    }

    #[test]
    fn field_wrapper_checks_input() {
        let g = build_grid(1.0, 16, 16).unwrap();
        let cfg = RadialConfig { intervals: 128, ..config(0.0, 0.1) };
        let radial = ScalarField::constant(&g, 2.0);
        assert!(radial_reference(&radial, &FrictionSpec::constant(0.0), &cfg).is_ok());
        let skew = ScalarField::from_cartesian_fn(&g, |x, _| x);
        assert!(radial_reference(&skew, &FrictionSpec::constant(0.0), &cfg).is_err());
        let var = FrictionSpec { constant: 1.0, cos: vec![0.5], sin: vec![] };
        assert!(radial_reference(&radial, &var, &cfg).is_err());
        let coarse = RadialConfig { intervals: 64, ..cfg };
        assert!(matches!(radial_reference(&radial, &FrictionSpec::constant(0.0), &coarse), Err(Error::Resolution(_))));
    }
}
