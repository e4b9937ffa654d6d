//! The acceptance suite behind `slipflow verify` and the `acceptance` test target.
//! Every check builds its own data; nothing is read from disk.

use std::fmt::Write as _;
use std::time::Instant;

use serde::Serialize;

use crate::compat::{contraction_factor, project_compatible, select_n};
use crate::diagnostics::{self, TestField};
use crate::elliptic::{green_direct, PoissonWorkspace};
use crate::error::{Error, Result};
use crate::geometry::{build_grid, FrictionProfile, FrictionSpec, GridSpec, ScalarField, VelocityField};
use crate::harness::{sweep, InitialData, SweepPlan, SweepReport};
use crate::solver::{comparison_solve, radial_reference, run, RadialConfig, SolverConfig, Trajectory};

/// Result of one criterion.
#[derive(Debug, Clone, Serialize)]
pub struct Outcome {
    pub id: usize,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl Outcome {
    pub fn line(&self) -> String {
        format!(
            "[{}] {:>2} {}: {} ({:.1} s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.detail,
            self.seconds
        )
    }
}

pub const TITLES: [&str; 11] = [
    "solid rotation is steady",
    "wall identity",
    "Biot-Savart cross-check",
    "compatible projection",
    "comparison principle",
    "energy estimate",
    "uniform L^p bound",
    "L^p budget",
    "inviscid limit",
    "radial reference",
    "verify runs everything",
];

/// Grid, data and viscosities shared by the sweep-based criteria.
const SWEEP_N: usize = 128;
const SWEEP_NU: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];
const SWEEP_SNAPSHOTS: usize = 10;

fn blob_friction() -> FrictionSpec {
    FrictionSpec { constant: 1.0, cos: vec![1.0], sin: vec![] }
}

fn sweep_base(n: usize) -> SolverConfig {
    SolverConfig::new(SWEEP_NU[0], 1.0, GridSpec::new(1.0, n, n), blob_friction()).with_uniform_snapshots(SWEEP_SNAPSHOTS)
}

/// Lazily computed runs used by several criteria.
#[derive(Default)]
pub struct Context {
    sweep: Option<SweepReport>,
    euler: Vec<(usize, Trajectory)>,
}

impl Context {
    fn sweep(&mut self) -> Result<&SweepReport> {
        if self.sweep.is_none() {
            let plan = SweepPlan::new(sweep_base(SWEEP_N), SWEEP_NU.to_vec(), InitialData::gaussian_blob())?;
            let rep = sweep(&plan)?;
            if !rep.complete {
                return Err(Error::InvalidInput(format!("sweep incomplete: {:?}", rep.failures)));
            }
            self.sweep = Some(rep);
        }
        Ok(self.sweep.as_ref().expect("set above"))
    }

    fn euler(&mut self, n: usize) -> Result<&Trajectory> {
        if !self.euler.iter().any(|(m, _)| *m == n) {
            let mut cfg = sweep_base(n);
            cfg.nu = 0.0;
            let g = cfg.grid.build()?;
            let traj = run(&cfg, &InitialData::gaussian_blob().sample(&g)?)?;
            self.euler.push((n, traj));
        }
        Ok(&self.euler.iter().find(|(m, _)| *m == n).expect("inserted above").1)
    }
}

type Check = (bool, String);

/// Runs the criteria in `ids` (all when empty), calling `report` after each.
pub fn run_selected(ids: &[usize], mut report: impl FnMut(&Outcome)) -> Vec<Outcome> {
    let mut ctx = Context::default();
    let wanted = |id: usize| ids.is_empty() || ids.contains(&id);
    let mut out: Vec<Outcome> = Vec::new();
    for id in 1..=10 {
        if !wanted(id) {
            continue;
        }
        let start = Instant::now();
        let result = match id {
            1 => solid_rotation(),
            2 => wall_identity(),
            3 => biot_savart(),
            4 => projection(),
            5 => comparison(),
            6 => energy(&mut ctx),
            7 => uniform_bound(&mut ctx),
            8 => budget(&mut ctx),
            9 => inviscid_limit(&mut ctx),
            _ => radial(),
        };
        let (passed, detail) = result.unwrap_or_else(|e| (false, format!("error: {e}")));
        let o = Outcome { id, title: TITLES[id - 1], passed, detail, seconds: start.elapsed().as_secs_f64() };
        report(&o);
        out.push(o);
    }
    if wanted(11) {
        let ran: Vec<usize> = out.iter().map(|o| o.id).collect();
        let all = (1..=10).all(|id| ran.contains(&id));
        let failed: Vec<usize> = out.iter().filter(|o| !o.passed).map(|o| o.id).collect();
        let o = Outcome {
            id: 11,
            title: TITLES[10],
            passed: all && failed.is_empty(),
            detail: if !all {
                "only a subset of criteria was requested".into()
            } else if failed.is_empty() {
                "criteria 1-10 ran from built-in data and passed".into()
            } else {
                format!("failed criteria {failed:?}")
            },
            seconds: out.iter().map(|o| o.seconds).sum(),
        };
        report(&o);
        out.push(o);
    }
    out
}

pub fn run_all(report: impl FnMut(&Outcome)) -> Vec<Outcome> {
    run_selected(&[], report)
}

fn order(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

/// 1. `omega = 2`, `alpha = 0` at 64 x 64 stays put to `T = 1`.
fn solid_rotation() -> Result<Check> {
    let start = Instant::now();
    let cfg = SolverConfig::new(1e-2, 1.0, GridSpec::new(1.0, 64, 64), FrictionSpec::constant(0.0));
    let g = cfg.grid.build()?;
    let omega0 = ScalarField::constant(&g, 2.0);
    let traj = run(&cfg, &omega0)?;
    let err = diagnostics::lp_norm(&traj.last().omega.axpby(1.0, &omega0, -1.0)?, 4.0);
    let secs = start.elapsed().as_secs_f64();
    Ok((err <= 1e-6 && secs < 30.0, format!("||omega(1) - omega0||_4 = {err:.2e} (<= 1e-6), {secs:.1} s (< 30 s)")))
}

/// 2. Rigid rotation exactly, `psi = (1 - r^2)^2` at first order or better.
fn wall_identity() -> Result<Check> {
    let g = build_grid(1.0, 64, 64)?;
    let rigid = diagnostics::navier_identity_residual(&VelocityField::from_cartesian_fn(&g, |x, y| (-y, x))).sup_norm();
    let quartic = |n: usize| -> Result<f64> {
        let g = build_grid(1.0, n, n)?;
        let u = VelocityField::from_cartesian_fn(&g, |x, y| {
            let q = 1.0 - x * x - y * y;
            (4.0 * y * q, -4.0 * x * q)
        });
        Ok(diagnostics::navier_identity_residual(&u).sup_norm())
    };
    let e = [quartic(32)?, quartic(64)?, quartic(128)?];
    let (o1, o2) = (order(e[0], e[1]), order(e[1], e[2]));
    Ok((
        rigid <= 1e-10 && o1 >= 1.0 && o2 >= 1.0,
        format!("rigid {rigid:.1e} (<= 1e-10); quartic {:.2e}, {:.2e}, {:.2e}, orders {o1:.2}, {o2:.2} (>= 1)", e[0], e[1], e[2]),
    ))
}

/// Trigonometric interpolation in the angle and cubic Lagrange in the radius.
fn sample_cartesian(u: &VelocityField, x: f64, y: f64) -> [f64; 2] {
    let g = u.grid();
    let (n_t, n_r) = (g.n_theta(), g.n_r());
    let (ux, uy) = u.cartesian();
    let r = x.hypot(y);
    let theta = y.atan2(x);
    let j0 = ((r / g.dr() - 0.5).floor() as isize - 1).clamp(0, n_r as isize - 4) as usize;
    let trig = |comp: &[f64], j: usize| -> f64 {
        let mut acc = 0.0;
        for m in 0..=n_t / 2 {
            let (mut a, mut b) = (0.0, 0.0);
            for i in 0..n_t {
                let t = g.thetas()[i];
                let v = comp[g.idx(i, j)];
                a += v * (m as f64 * t).cos();
                b += v * (m as f64 * t).sin();
            }
            let w = if m == 0 || 2 * m == n_t { 1.0 } else { 2.0 };
            acc += w / n_t as f64 * (a * (m as f64 * theta).cos() + b * (m as f64 * theta).sin());
        }
        acc
    };
    let mut out = [0.0; 2];
    for (c, comp) in [&ux, &uy].into_iter().enumerate() {
        for a in 0..4 {
            let ra = g.radii()[j0 + a];
            let mut l = 1.0;
            for b in 0..4 {
                if b != a {
                    let rb = g.radii()[j0 + b];
                    l *= (r - rb) / (ra - rb);
                }
            }
            out[c] += l * trig(comp, j0 + a);
        }
    }
    out
}

/// Radii on cell faces of both grids keep every probe half a cell from the nodes.
fn probes() -> Vec<[f64; 2]> {
    let mut p = Vec::new();
    for &r in &[20.0 / 64.0, 33.0 / 64.0, 47.0 / 64.0] {
        for &t in &[0.41, 2.03, 3.52, 5.07] {
            p.push([r * f64::cos(t), r * f64::sin(t)]);
        }
    }
    p
}

/// 3. Spectral velocity against direct quadrature of the Green's function.
fn biot_savart() -> Result<Check> {
    let disagreement = |n: usize| -> Result<f64> {
        let g = build_grid(1.0, n, n)?;
        let omega = InitialData::gaussian_blob().sample(&g)?;
        let u = PoissonWorkspace::new(&g)?.biot_savart(&omega)?;
        let pts = probes();
        let direct = green_direct(&omega, &pts)?;
        let mut diff = 0.0_f64;
        let mut scale = 0.0_f64;
        for (x, d) in pts.iter().zip(&direct) {
            let s = sample_cartesian(&u, x[0], x[1]);
            diff = diff.max((s[0] - d[0]).hypot(s[1] - d[1]));
            scale = scale.max(d[0].hypot(d[1]));
        }
        Ok(diff / scale)
    };
    let (a, b) = (disagreement(64)?, disagreement(128)?);
    Ok((a <= 1e-3 && b < a, format!("relative disagreement {a:.2e} at 64 (<= 1e-3), {b:.2e} at 128 (decreasing)")))
}

/// 4. Projection of `|x - x0|^-0.4` for `n = 4, 8, 16`.
fn projection() -> Result<Check> {
    let g = build_grid(1.0, 256, 576)?;
    let friction = FrictionProfile::new(&g, &FrictionSpec::constant(1.0))?;
    let omega = InitialData::singular_patch().sample(&g)?;
    let (n0, _) = select_n(&g, &[1, 2, 4, 8, 16], 0.5, &friction, 1.0)?;
    let mut ok = n0 <= 4;
    let mut detail = format!("n0 = {n0}");
    let mut dists = Vec::new();
    let mut factors = Vec::new();
    for n in [4, 8, 16] {
        let factor = contraction_factor(&g, n, &friction, 1.0)?;
        let rep = project_compatible(&omega, n, 1e-12, 200, &friction, 1.0)?;
        let contracting = rep.residual_history.windows(2).all(|w| w[1] < w[0]);
        let dist = diagnostics::lp_norm(&rep.omega_n.axpby(1.0, &omega, -1.0)?, 4.0);
        ok &= contracting && rep.compat_residual <= 1e-8;
        let _ = write!(
            detail,
            "; n={n}: factor {factor:.3}, {} its{}, residual {:.1e}, |omega_n - omega|_4 {dist:.3}",
            rep.iterations,
            if contracting { "" } else { " (not monotone)" },
            rep.compat_residual
        );
        dists.push(dist);
        factors.push(factor);
    }
    ok &= dists.windows(2).all(|w| w[1] < w[0]) && factors.windows(2).all(|w| w[1] < w[0]);
    Ok((ok, detail))
}

/// Largest `|omega| - omega_tilde` for the singular patch at `nu = 1e-2` on an
/// `n x n` grid, started from its compatible projection with `n = 2` (the
/// coarsest index the 64 x 64 grid resolves).
fn comparison_violation(n: usize) -> Result<f64> {
    let cfg = SolverConfig::new(1e-2, 0.5, GridSpec::new(1.0, n, n), blob_friction()).with_uniform_snapshots(n / 4);
    let g = cfg.grid.build()?;
    let friction = FrictionProfile::new(&g, &cfg.alpha)?;
    let rough = InitialData::singular_patch().sample(&g)?;
    let omega0 = project_compatible(&rough, 2, 1e-12, 200, &friction, cfg.kappa())?.omega_n;
    let traj = run(&cfg, &omega0)?;
    let lambda = diagnostics::lambda_bound(&traj, &friction, cfg.kappa())?;
    let cmp = comparison_solve(&traj, &omega0, lambda, cfg.nu)?;
    diagnostics::comparison_check(&traj, &cmp)
}

/// 5. `|omega| <= omega_tilde` up to a discretization error halving under refinement.
fn comparison() -> Result<Check> {
    let cfg = SolverConfig::new(1e-2, 0.5, GridSpec::new(1.0, 64, 64), FrictionSpec::constant(0.0)).with_uniform_snapshots(8);
    let g = cfg.grid.build()?;
    let omega0 = ScalarField::constant(&g, 2.0);
    let traj = run(&cfg, &omega0)?;
    let lambda = diagnostics::lambda_bound(&traj, &FrictionProfile::new(&g, &cfg.alpha)?, cfg.kappa())?;
    let equal = comparison_solve(&traj, &omega0, lambda, cfg.nu)
        .and_then(|c| diagnostics::comparison_check(&traj, &c))?
        .abs();
    let (a, b) = (comparison_violation(64)?.max(0.0), comparison_violation(128)?.max(0.0));
    Ok((
        equal <= 1e-8 && b <= 0.5 * a + 1e-12,
        format!("violation {a:.2e} at 64, {b:.2e} at 128 (halving); equality case {equal:.1e} (<= 1e-8)"),
    ))
}

/// 6. `||u(t)||_2 <= ||u_0||_2 (1 + 1e-6)` for every viscous run; Euler drift shrinking.
fn energy(ctx: &mut Context) -> Result<Check> {
    let mut worst = f64::NEG_INFINITY;
    for rec in &ctx.sweep()?.records {
        let e0 = rec.summary.energy_initial;
        worst = worst.max(rec.series.iter().map(|s| s.energy / e0 - 1.0).fold(f64::NEG_INFINITY, f64::max));
    }
    let drift = |traj: &Trajectory| {
        let e0 = traj.steps[0].energy;
        traj.steps.iter().map(|s| (s.energy / e0 - 1.0).abs()).fold(0.0, f64::max)
    };
    let d64 = drift(ctx.euler(64)?);
    let d128 = drift(ctx.euler(SWEEP_N)?);
    Ok((
        worst <= 1e-6 && d128 < d64,
        format!("max ||u(t)|| / ||u0|| - 1 = {worst:.2e} (<= 1e-6); Euler drift {d64:.2e} at 64, {d128:.2e} at 128"),
    ))
}

/// 7. `ratio_nu` bounded across three decades of viscosity.
fn uniform_bound(ctx: &mut Context) -> Result<Check> {
    let start = Instant::now();
    let rep = ctx.sweep()?;
    let ratios: Vec<f64> = rep.bounds.iter().map(|b| b.ratio).collect();
    let max = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let growth = ratios.windows(2).map(|w| w[1] / w[0] - 1.0).fold(f64::NEG_INFINITY, f64::max);
    let runtime: f64 = rep
        .records
        .iter()
        .map(|r| (r.provenance.finished_unix_ms - r.provenance.started_unix_ms) as f64 / 1e3)
        .sum::<f64>()
        .max(start.elapsed().as_secs_f64());
    Ok((
        max / min <= 2.0 && growth <= 0.2 && runtime <= 1800.0,
        format!(
            "ratios {:?}, max/min {:.3} (<= 2), largest growth per decade {:.1}% (<= 20%), runtime {runtime:.0} s",
            ratios.iter().map(|r| format!("{r:.4}")).collect::<Vec<_>>(),
            max / min,
            100.0 * growth
        ),
    ))
}

/// 8. Budget closure on the smooth sweep run and the free boundary case.
fn budget(ctx: &mut Context) -> Result<Check> {
    let rec = ctx.sweep()?.records.iter().find(|r| r.nu() == 1e-2).ok_or_else(|| Error::InvalidInput("missing run".into()))?;
    let totals = diagnostics::budget_totals(rec.trajectory()?)?;
    let closure = totals.closure / totals.dissipation;

    let mut cfg = sweep_base(SWEEP_N);
    cfg.nu = 1e-2;
    cfg.alpha = FrictionSpec::constant(2.0);
    let g = cfg.grid.build()?;
    let traj = run(&cfg, &InitialData::gaussian_blob().sample(&g)?)?;
    let free = diagnostics::budget_totals(&traj)?;
    let flux = free.boundary_flux / free.dissipation;
    let rise: f64 = traj.steps.windows(2).map(|w| (w[1].lp_pow - w[0].lp_pow).max(0.0)).sum();
    let rise = rise / free.dissipation;
    Ok((
        closure <= 0.05 && flux <= 0.01 && rise <= 0.01,
        format!(
            "closure/dissipation {:.2}% (<= 5%); free boundary: flux/dissipation {:.2e}, L^p rise/dissipation {:.2e} (<= 1%)",
            100.0 * closure,
            flux,
            rise
        ),
    ))
}

/// 9. Cauchy distances shrinking with `nu`; Euler weak residual near the discretization floor.
fn inviscid_limit(ctx: &mut Context) -> Result<Check> {
    let rep = ctx.sweep()?;
    let cauchy = rep.cauchy.as_ref().ok_or_else(|| Error::InvalidInput("no Cauchy table".into()))?;
    let e: Vec<f64> = cauchy.rows.iter().map(|r| r.e).collect();
    let decreasing = e.windows(2).all(|w| w[1] < w[0]);
    let weak = cauchy.weak.iter().map(|w| w.residual).fold(0.0, f64::max);
    let euler = ctx.euler(SWEEP_N)?;
    let mut floor = 0.0_f64;
    for m in 0..3 {
        floor = floor.max(diagnostics::weak_residual(euler, 0.0, &TestField::mode(m))?);
    }
    Ok((
        decreasing && weak <= 3.0 * floor,
        format!(
            "e_k {:?} (strictly decreasing); weak residual {weak:.2e} vs floor {floor:.2e} (<= 3x)",
            e.iter().map(|v| format!("{v:.3e}")).collect::<Vec<_>>()
        ),
    ))
}

/// Max difference between the 2D run and the radial reference at the snapshots.
fn radial_error(n: usize) -> Result<f64> {
    let times = vec![0.25, 0.5, 0.75, 1.0];
    let mut cfg = SolverConfig::new(1e-2, 1.0, GridSpec::new(1.0, 32, n), FrictionSpec::constant(2.0));
    cfg.snapshot_times = times.clone();
    cfg.dt_max = 0.64 / n as f64;
    let g = cfg.grid.build()?;
    let omega0 = ScalarField::constant(&g, 2.0);
    let traj = run(&cfg, &omega0)?;
    let mut all_times = vec![0.0];
    all_times.extend(&times);
    let rc = RadialConfig { radius: 1.0, alpha: 2.0, nu: 1e-2, t_final: 1.0, intervals: 8 * n, steps: 16 * n, times: all_times };
    let oracle = radial_reference(&omega0, &cfg.alpha, &rc)?;
    let mut worst = 0.0_f64;
    for (k, snap) in traj.snapshots.iter().enumerate().skip(1) {
        for j in 0..n {
            let exact = oracle.profiles[k][8 * j + 4];
            for i in 0..g.n_theta() {
                worst = worst.max((snap.omega.at(i, j) - exact).abs());
            }
        }
    }
    Ok(worst)
}

/// 10. Free boundary decay of solid rotation against the radial reference.
fn radial() -> Result<Check> {
    let (a, b) = (radial_error(64)?, radial_error(128)?);
    let o = order(a, b);
    Ok((o >= 1.0, format!("max difference {a:.2e} at n_r = 64, {b:.2e} at 128, order {o:.2} (>= 1)")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolation_is_exact_for_low_modes() {
        let g = build_grid(1.0, 32, 32).unwrap();
        let u = VelocityField::from_cartesian_fn(&g, |x, y| (x * y - 0.5, y * y * y + x));
        for &(x, y) in &[(0.3, 0.2), (-0.4, 0.5), (0.1, -0.7)] {
            let s = sample_cartesian(&u, x, y);
            assert!((s[0] - (x * y - 0.5)).abs() < 1e-12);
            assert!((s[1] - (y * y * y + x)).abs() < 1e-12);
        }
    }

    #[test]
    fn probes_are_interior() {
        assert_eq!(probes().len(), 12);
        assert!(probes().iter().all(|p| p[0].hypot(p[1]) < 0.8));
    }

    #[test]
    fn titles_cover_every_criterion() {
        assert_eq!(TITLES.len(), 11);
    }
}
