//! Time integration of the vorticity equation with the Navier wall condition.
//!
//! One step: Heun for advection, Crank-Nicolson per angular mode for
//! diffusion. The wall vorticity `omega_b = (2 kappa - alpha) u . tau` is taken
//! from the start of the step on the explicit side and from the predictor on
//! the implicit side, then refreshed from the corrected field
//! `corrector_passes - 1` more times.

mod advection;
mod comparison;
mod diffusion;
mod radial;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use advection::advective_tendency;
pub use comparison::comparison_solve;
pub use radial::{radial_reference, radial_reference_fn, RadialConfig, RadialSolution};

pub(crate) use advection::tendency_with;
pub(crate) use diffusion::CrankNicolson;

use crate::diagnostics;
use crate::elliptic::{slip_velocity, PoissonWorkspace};
use crate::error::{Error, Result};
use crate::fourier::AngularFft;
use crate::geometry::{BoundaryTrace, FrictionProfile, FrictionSpec, GridSpec, PolarGrid, ScalarField, VelocityField};

fn default_p() -> f64 {
    4.0
}

fn default_cfl() -> f64 {
    0.4
}

fn default_dt_max() -> f64 {
    1e-2
}

fn default_passes() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub nu: f64,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(rename = "T")]
    pub t_final: f64,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default = "default_dt_max")]
    pub dt_max: f64,
    pub grid: GridSpec,
    #[serde(default)]
    pub alpha: FrictionSpec,
    #[serde(default = "default_passes")]
    pub corrector_passes: usize,
    /// Output times in `(0, T]`; `0` and `T` are always recorded.
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
}

impl SolverConfig {
    pub fn new(nu: f64, t_final: f64, grid: GridSpec, alpha: FrictionSpec) -> Self {
        Self {
            nu,
            p: default_p(),
            t_final,
            cfl: default_cfl(),
            dt_max: default_dt_max(),
            grid,
            alpha,
            corrector_passes: default_passes(),
            snapshot_times: Vec::new(),
        }
    }

    /// Replaces the output times by `count` equally spaced times ending at `T`.
    pub fn with_uniform_snapshots(mut self, count: usize) -> Self {
        self.snapshot_times = (1..=count).map(|k| self.t_final * k as f64 / count as f64).collect();
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.nu >= 0.0) || !self.nu.is_finite() {
            return bad(format!("nu must be finite and >= 0, got {}", self.nu));
        }
        if !(self.p > 2.0) || !self.p.is_finite() {
            return bad(format!("p must exceed 2, got {}", self.p));
        }
        if !(self.t_final > 0.0) || !self.t_final.is_finite() {
            return bad(format!("T must be positive, got {}", self.t_final));
        }
        if !(self.cfl > 0.0 && self.cfl < 1.0) {
            return bad(format!("cfl must lie in (0, 1), got {}", self.cfl));
        }
        if !(self.dt_max > 0.0) || !self.dt_max.is_finite() {
            return bad(format!("dt_max must be positive, got {}", self.dt_max));
        }
        if self.corrector_passes == 0 {
            return bad("corrector_passes must be >= 1".into());
        }
        let mut prev = 0.0;
        for &t in &self.snapshot_times {
            if !(t > prev) || t > self.t_final * (1.0 + 1e-12) {
                return bad(format!("snapshot_times must increase strictly within (0, T], got {t}"));
            }
            prev = t;
        }
        Ok(())
    }

    pub fn kappa(&self) -> f64 {
        1.0 / self.grid.radius
    }

    /// Output times including `0` and `T`.
    pub fn output_times(&self) -> Vec<f64> {
        let mut times = vec![0.0];
        for &t in &self.snapshot_times {
            if self.t_final - t > 1e-12 * self.t_final {
                times.push(t);
            }
        }
        times.push(self.t_final);
        times
    }
}

/// Vorticity at time `t` with everything derived from it.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub t: f64,
    pub step: usize,
    pub omega: ScalarField,
    pub psi: ScalarField,
    pub u: VelocityField,
    pub slip: BoundaryTrace,
    /// `(2 kappa - alpha) u . tau`
    pub wall: BoundaryTrace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryKind {
    NavierStokes,
    Euler,
    Comparison,
}

#[derive(Debug, Clone, Serialize)]
pub struct Snapshot {
    pub t: f64,
    pub omega: ScalarField,
}

/// Diagnostics of the state reached after one step (step 0 is the initial state).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub t: f64,
    pub dt: f64,
    pub lp_pow: f64,
    pub lp_norm: f64,
    pub energy: f64,
    pub circulation: f64,
    pub boundary_circulation: f64,
    pub max_wall_vorticity: f64,
    pub dissipation: f64,
    pub boundary_flux: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub config: SolverConfig,
    pub kind: TrajectoryKind,
    pub snapshots: Vec<Snapshot>,
    pub steps: Vec<StepRecord>,
}

impl Trajectory {
    pub fn grid(&self) -> &Arc<PolarGrid> {
        self.snapshots[0].omega.grid()
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }

    pub fn initial(&self) -> &ScalarField {
        &self.snapshots[0].omega
    }

    pub fn last(&self) -> &Snapshot {
        self.snapshots.last().expect("trajectory has at least one snapshot")
    }

    pub fn is_euler(&self) -> bool {
        self.kind == TrajectoryKind::Euler
    }
}

/// The integrator with all grid-dependent operators prepared.
#[derive(Debug, Clone)]
pub struct Solver {
    cfg: SolverConfig,
    grid: Arc<PolarGrid>,
    ws: PoissonWorkspace,
    friction: FrictionProfile,
    factor: BoundaryTrace,
    cn: CrankNicolson,
}

impl Solver {
    pub fn new(cfg: &SolverConfig) -> Result<Self> {
        cfg.validate()?;
        let grid = cfg.grid.build()?;
        let friction = FrictionProfile::new(&grid, &cfg.alpha)?;
        let factor = friction.wall_factor(cfg.kappa());
        Ok(Self {
            cfg: cfg.clone(),
            ws: PoissonWorkspace::new(&grid)?,
            cn: CrankNicolson::new(&grid),
            grid,
            friction,
            factor,
        })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    pub fn grid(&self) -> &Arc<PolarGrid> {
        &self.grid
    }

    pub fn friction(&self) -> &FrictionProfile {
        &self.friction
    }

    pub fn workspace(&self) -> &PoissonWorkspace {
        &self.ws
    }

    pub(crate) fn fft(&self) -> &AngularFft {
        self.ws.fft()
    }

    pub(crate) fn diffusion(&self) -> &CrankNicolson {
        &self.cn
    }

    pub fn state(&self, omega: ScalarField, t: f64, step: usize) -> Result<SolverState> {
        if **omega.grid() != *self.grid {
            return Err(Error::GridMismatch);
        }
        let psi = self.ws.solve_poisson(&omega)?;
        let u = self.ws.velocity(&psi)?;
        let slip = slip_velocity(&psi);
        let wall = slip.zip_with(&self.factor, |s, f| f * s);
        Ok(SolverState { t, step, omega, psi, u, slip, wall })
    }

    /// `max(|u_r| / dr + |u_theta| / (r dtheta))` over the cells.
    pub(crate) fn cfl_rate(&self, u: &VelocityField) -> f64 {
        let g = &self.grid;
        let (dr, dth) = (g.dr(), g.dtheta());
        let n_r = g.n_r();
        u.u_r
            .iter()
            .zip(&u.u_theta)
            .enumerate()
            .fold(0.0_f64, |m, (k, (a, b))| m.max(a.abs() / dr + b.abs() / (g.radii()[k % n_r] * dth)))
    }

    pub fn stable_dt(&self, state: &SolverState) -> f64 {
        let rate = self.cfl_rate(&state.u);
        if rate > 0.0 {
            self.cfg.dt_max.min(self.cfg.cfl / rate)
        } else {
            self.cfg.dt_max
        }
    }

    /// One step of size `dt`.
    pub fn step(&self, s: &SolverState, dt: f64) -> Result<SolverState> {
        let fft = self.fft();
        let a1 = tendency_with(fft, &s.omega, &s.u);
        let nu = self.cfg.nu;
        let omega = if nu == 0.0 {
            let pred = s.omega.axpby(1.0, &a1, dt)?;
            let u_p = self.ws.biot_savart(&pred)?;
            let a2 = tendency_with(fft, &pred, &u_p);
            let incr = a1.axpby(0.5 * dt, &a2, 0.5 * dt)?;
            s.omega.axpby(1.0, &incr, 1.0)?
        } else {
            let forcing = a1.scaled(dt);
            let pred = self.cn.step(fft, &s.omega, forcing.values(), &s.wall, &s.wall, nu, dt)?;
            let sp = self.state(pred, s.t + dt, s.step + 1)?;
            let a2 = tendency_with(fft, &sp.omega, &sp.u);
            let forcing = a1.axpby(0.5 * dt, &a2, 0.5 * dt)?;
            let mut wall = sp.wall;
            let mut omega = self.cn.step(fft, &s.omega, forcing.values(), &s.wall, &wall, nu, dt)?;
            for _ in 1..self.cfg.corrector_passes {
                let slip = slip_velocity(&self.ws.solve_poisson(&omega)?);
                wall = slip.zip_with(&self.factor, |v, f| f * v);
                omega = self.cn.step(fft, &s.omega, forcing.values(), &s.wall, &wall, nu, dt)?;
            }
            omega
        };
        self.state(omega, s.t + dt, s.step + 1)
    }

    /// One CFL-limited step, never past `T`.
    pub fn advance(&self, s: &SolverState) -> Result<SolverState> {
        let dt = self.stable_dt(s).min(self.cfg.t_final - s.t);
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::SolverAbort { t: s.t, step: s.step, reason: format!("time step {dt}"), partial: None });
        }
        self.step(s, dt)
    }

    pub(crate) fn record(&self, s: &SolverState, dt: f64) -> StepRecord {
        let p = self.cfg.p;
        let nu = self.cfg.nu;
        let lp_pow = diagnostics::lp_pow(&s.omega, p);
        StepRecord {
            step: s.step,
            t: s.t,
            dt,
            lp_pow,
            lp_norm: lp_pow.powf(1.0 / p),
            energy: diagnostics::energy(&s.u),
            circulation: s.omega.integral(),
            boundary_circulation: s.slip.line_integral(),
            max_wall_vorticity: s.wall.sup_norm(),
            dissipation: diagnostics::dissipation_rate(&s.omega, &s.wall, p, nu),
            boundary_flux: diagnostics::boundary_flux_rate(&s.omega, &s.wall, p, nu),
        }
    }

    pub fn run(&self, omega0: &ScalarField) -> Result<Trajectory> {
        if !omega0.is_finite() {
            return Err(Error::InvalidInput("initial vorticity is not finite".into()));
        }
        let kind = if self.cfg.nu == 0.0 { TrajectoryKind::Euler } else { TrajectoryKind::NavierStokes };
        let mut state = self.state(omega0.clone(), 0.0, 0)?;
        let mut traj = Trajectory {
            config: self.cfg.clone(),
            kind,
            snapshots: vec![Snapshot { t: 0.0, omega: omega0.clone() }],
            steps: vec![self.record(&state, 0.0)],
        };
        let t_final = self.cfg.t_final;
        for target in self.cfg.output_times().into_iter().skip(1) {
            while target - state.t > 1e-12 * t_final {
                let mut dt = self.stable_dt(&state);
                if !(dt > 0.0) || !dt.is_finite() {
                    return Err(abort(&state, format!("time step {dt}"), traj));
                }
                if state.t + 1.05 * dt >= target {
                    dt = target - state.t;
                }
                let next = match self.step(&state, dt) {
                    Ok(next) => next,
                    Err(e) => return Err(abort(&state, e.to_string(), traj)),
                };
                if !next.omega.is_finite() || next.omega.max_abs() > 1e200 {
                    return Err(abort(&state, "vorticity is no longer finite".into(), traj));
                }
                state = next;
                traj.steps.push(self.record(&state, dt));
            }
            state.t = target;
            if let Some(last) = traj.steps.last_mut() {
                last.t = target;
            }
            traj.snapshots.push(Snapshot { t: target, omega: state.omega.clone() });
        }
        Ok(traj)
    }
}

fn abort(state: &SolverState, reason: String, partial: Trajectory) -> Error {
    Error::SolverAbort { t: state.t, step: state.step, reason, partial: Some(Box::new(partial)) }
}

/// One CFL-limited step of the configured problem.
pub fn step(state: &SolverState, cfg: &SolverConfig) -> Result<SolverState> {
    Solver::new(cfg)?.advance(state)
}

/// Integrates from `omega0` to `T`, recording snapshots and per-step diagnostics.
pub fn run(cfg: &SolverConfig, omega0: &ScalarField) -> Result<Trajectory> {
    Solver::new(cfg)?.run(omega0)
}

/// [`run`] with the viscosity forced to zero: pure transport, no wall condition.
pub fn run_euler(cfg: &SolverConfig, omega0: &ScalarField) -> Result<Trajectory> {
    let mut cfg = cfg.clone();
    cfg.nu = 0.0;
    run(&cfg, omega0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(nu: f64, n: usize, alpha: f64, t: f64) -> SolverConfig {
        SolverConfig::new(nu, t, GridSpec::new(1.0, n, n), FrictionSpec::constant(alpha))
    }

    #[test]
    fn config_validation() {
        let mut c = cfg(0.1, 16, 0.0, 1.0);
        assert!(c.validate().is_ok());
        c.cfl = 1.2;
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let mut c = cfg(-1.0, 16, 0.0, 1.0);
        assert!(c.validate().is_err());
        c.nu = 0.1;
        c.p = 2.0;
        assert!(c.validate().is_err());
        let mut c = cfg(0.1, 16, 0.0, 1.0);
        c.snapshot_times = vec![0.5, 0.4];
        assert!(c.validate().is_err());
    }

    #[test]
    fn output_times_include_ends() {
        let c = cfg(0.1, 16, 0.0, 1.0).with_uniform_snapshots(4);
        assert_eq!(c.output_times(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn solid_rotation_is_steady() {
        let c = cfg(0.05, 32, 0.0, 0.3);
        let g = c.grid.build().unwrap();
        let om = ScalarField::constant(&g, 2.0);
        let traj = run(&c, &om).unwrap();
        let last = &traj.last().omega;
        assert!((last.axpby(1.0, &om, -1.0).unwrap().max_abs()) < 1e-10);
        assert_eq!(traj.last().t, 0.3);
        assert_eq!(traj.kind, TrajectoryKind::NavierStokes);
    }

    #[test]
    fn euler_radial_vorticity_is_steady() {
        let c = cfg(0.0, 32, 1.0, 0.2);
        let g = c.grid.build().unwrap();
        let om = ScalarField::from_fn(&g, |r, _| (-4.0 * r * r).exp());
        let traj = run_euler(&c, &om).unwrap();
        assert!(traj.is_euler());
        assert!(traj.last().omega.axpby(1.0, &om, -1.0).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn euler_conserves_total_vorticity() {
        let c = cfg(0.0, 32, 1.0, 0.2);
        let g = c.grid.build().unwrap();
        let om = ScalarField::from_cartesian_fn(&g, |x, y| (-10.0 * ((x - 0.3).powi(2) + y * y)).exp());
        let traj = run(&c, &om).unwrap();
        let (a, b) = (traj.steps[0].circulation, traj.steps.last().unwrap().circulation);
        assert!(((a - b) / a).abs() < 1e-12, "{a} {b}");
    }

    #[test]
    fn runs_are_deterministic() {
        let mut c = cfg(0.01, 32, 0.5, 0.1);
        c.alpha.cos = vec![0.5];
        let g = c.grid.build().unwrap();
        let om = ScalarField::from_cartesian_fn(&g, |x, y| (-10.0 * ((x - 0.3).powi(2) + y * y)).exp());
        let a = run(&c, &om).unwrap();
        let b = run(&c, &om).unwrap();
        assert_eq!(a.last().omega.values(), b.last().omega.values());
        assert_eq!(a.steps, b.steps);
    }

    #[test]
    fn snapshots_land_on_requested_times() {
        let c = cfg(0.01, 16, 0.0, 0.1).with_uniform_snapshots(3);
        let g = c.grid.build().unwrap();
        let traj = run(&c, &ScalarField::from_cartesian_fn(&g, |x, _| x)).unwrap();
        let times = traj.times();
        assert_eq!(times.len(), 4);
        for (t, e) in times.iter().zip(c.output_times()) {
            assert_eq!(*t, e);
        }
    }

    #[test]
    fn single_step_api() {
        let c = cfg(0.01, 16, 0.0, 1.0);
        let solver = Solver::new(&c).unwrap();
        let s0 = solver.state(ScalarField::constant(solver.grid(), 2.0), 0.0, 0).unwrap();
        let s1 = step(&s0, &c).unwrap();
        assert!(s1.t > 0.0 && s1.t <= c.dt_max);
        assert_eq!(s1.step, 1);
    }
}
