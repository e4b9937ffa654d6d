use std::f64::consts::PI;

use super::{tendency_with, Snapshot, Solver, StepRecord, Trajectory, TrajectoryKind};
use crate::diagnostics;
use crate::error::{Error, Result};
use crate::geometry::{BoundaryTrace, ScalarField, VelocityField};

fn lerp_velocity(a: &VelocityField, b: &VelocityField, s: f64) -> Result<VelocityField> {
    let mix = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| (1.0 - s) * p + s * q).collect::<Vec<_>>();
    let u = VelocityField::new(a.grid(), mix(&a.u_r, &b.u_r), mix(&a.u_theta, &b.u_theta))?;
    Ok(match (a.radial_flux(), b.radial_flux()) {
        (Some(fa), Some(fb)) => u.with_radial_flux(mix(fa, fb)),
        _ => u,
    })
}

/// Linear transport-diffusion of `|omega0|` by the frozen velocity of `frozen`
/// with the constant wall value `lambda`.
///
/// The velocity is rebuilt from every snapshot and interpolated linearly in
/// time in between; output snapshots are taken at the snapshot times of `frozen`.
pub fn comparison_solve(frozen: &Trajectory, omega0: &ScalarField, lambda: f64, nu: f64) -> Result<Trajectory> {
    if !lambda.is_finite() {
        return Err(Error::InvalidInput(format!("lambda must be finite, got {lambda}")));
    }
    if frozen.snapshots.len() < 2 || frozen.snapshots[0].t != 0.0 {
        return Err(Error::SnapshotMismatch("frozen trajectory needs snapshots at t = 0 and later".into()));
    }
    let mut cfg = frozen.config.clone();
    cfg.nu = nu;
    let solver = Solver::new(&cfg)?;
    let grid = solver.grid().clone();
    if **omega0.grid() != *grid {
        return Err(Error::GridMismatch);
    }
    let ws = solver.workspace();
    let fft = solver.fft();
    let velocities: Vec<VelocityField> =
        frozen.snapshots.iter().map(|s| ws.biot_savart(&s.omega)).collect::<Result<_>>()?;
    let wall = BoundaryTrace::constant(&grid, lambda);
    let p = cfg.p;

    let record = |step: usize, t: f64, dt: f64, omega: &ScalarField, u: &VelocityField| {
        let lp_pow = diagnostics::lp_pow(omega, p);
        StepRecord {
            step,
            t,
            dt,
            lp_pow,
            lp_norm: lp_pow.powf(1.0 / p),
            energy: diagnostics::energy(u),
            circulation: omega.integral(),
            boundary_circulation: 2.0 * PI * grid.radius() * lambda,
            max_wall_vorticity: lambda.abs(),
            dissipation: diagnostics::dissipation_rate(omega, &wall, p, nu),
            boundary_flux: diagnostics::boundary_flux_rate(omega, &wall, p, nu),
        }
    };

    let mut omega = omega0.abs();
    let mut traj = Trajectory {
        config: cfg.clone(),
        kind: TrajectoryKind::Comparison,
        snapshots: vec![Snapshot { t: 0.0, omega: omega.clone() }],
        steps: vec![record(0, 0.0, 0.0, &omega, &velocities[0])],
    };
    let mut step = 0;
    for k in 0..frozen.snapshots.len() - 1 {
        let (t0, t1) = (frozen.snapshots[k].t, frozen.snapshots[k + 1].t);
        if !(t1 > t0) {
            return Err(Error::SnapshotMismatch(format!("snapshot times not increasing at {t1}")));
        }
        let (ua, ub) = (&velocities[k], &velocities[k + 1]);
        let rate = solver.cfl_rate(ua).max(solver.cfl_rate(ub));
        let dt_cfl = if rate > 0.0 { cfg.dt_max.min(cfg.cfl / rate) } else { cfg.dt_max };
        let mut t = t0;
        while t1 - t > 1e-12 * cfg.t_final {
            let mut dt = dt_cfl;
            if t + 1.05 * dt >= t1 {
                dt = t1 - t;
            }
            let u_now = lerp_velocity(ua, ub, (t - t0) / (t1 - t0))?;
            let u_next = lerp_velocity(ua, ub, (t + dt - t0) / (t1 - t0))?;
            let a1 = tendency_with(fft, &omega, &u_now);
            omega = if nu == 0.0 {
                let pred = omega.axpby(1.0, &a1, dt)?;
                let a2 = tendency_with(fft, &pred, &u_next);
                let incr = a1.axpby(0.5 * dt, &a2, 0.5 * dt)?;
                omega.axpby(1.0, &incr, 1.0)?
            } else {
                let cn = solver.diffusion();
                let pred = cn.step(fft, &omega, a1.scaled(dt).values(), &wall, &wall, nu, dt)?;
                let a2 = tendency_with(fft, &pred, &u_next);
                let forcing = a1.axpby(0.5 * dt, &a2, 0.5 * dt)?;
                cn.step(fft, &omega, forcing.values(), &wall, &wall, nu, dt)?
            };
            step += 1;
            t = if t1 - (t + dt) <= 1e-12 * cfg.t_final { t1 } else { t + dt };
            if !omega.is_finite() {
                return Err(Error::SolverAbort {
                    t,
                    step,
                    reason: "comparison field is no longer finite".into(),
                    partial: Some(Box::new(traj)),
                });
            }
            traj.steps.push(record(step, t, dt, &omega, &u_next));
        }
        traj.snapshots.push(Snapshot { t: t1, omega: omega.clone() });
    }
    Ok(traj)
}
