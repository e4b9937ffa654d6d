//! Single runs, viscosity sweeps, projector studies and the tables built from them.

use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ProjectStudy, RunConfig, SweepPlan};
use super::emit::Table;
use crate::compat::{contraction_factor, project_compatible, select_n, ProjectionReport};
use crate::diagnostics::{self, BudgetRow, TestField};
use crate::error::{Error, Result};
use crate::geometry::{FrictionProfile, ScalarField};
use crate::solver::{Solver, StepRecord, Trajectory, TrajectoryKind};

/// Environment variable capping the number of worker threads.
pub const THREADS_VAR: &str = "SLIPFLOW_THREADS";

/// `SLIPFLOW_THREADS` if set to a positive integer, the machine parallelism otherwise.
pub fn worker_threads() -> usize {
    std::env::var(THREADS_VAR)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|n| *n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn unix_ms() -> u128 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub version: String,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
}

/// The projection without its fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionSummary {
    pub n: usize,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    pub compat_residual: f64,
    /// `||omega_n - omega_0||_p`
    pub lp_distance: f64,
}

impl ProjectionSummary {
    fn new(report: &ProjectionReport, omega: &ScalarField, p: f64) -> Result<Self> {
        Ok(Self {
            n: report.n,
            iterations: report.iterations,
            residual_history: report.residual_history.clone(),
            compat_residual: report.compat_residual,
            lp_distance: diagnostics::lp_norm(&report.omega_n.axpby(1.0, omega, -1.0)?, p),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub kind: TrajectoryKind,
    pub euler: bool,
    pub steps: usize,
    pub t_reached: f64,
    pub lp_initial: f64,
    pub lp_final: f64,
    pub lp_max: f64,
    pub energy_initial: f64,
    pub energy_final: f64,
    pub energy_max: f64,
    pub circulation_initial: f64,
    pub circulation_final: f64,
    /// Largest wall vorticity over the snapshots.
    pub lambda: f64,
    /// `max_t ||omega(t)||_p / (||omega_0||_p + ||u_0||_2)`
    pub bound_ratio: f64,
}

impl RunSummary {
    fn new(traj: &Trajectory, friction: &FrictionProfile, kappa: f64) -> Result<Self> {
        let first = traj.steps.first().ok_or_else(|| Error::InvalidInput("empty trajectory".into()))?;
        let last = traj.steps.last().unwrap_or(first);
        let lp_max = traj.steps.iter().map(|s| s.lp_norm).fold(f64::NEG_INFINITY, f64::max);
        Ok(Self {
            kind: traj.kind,
            euler: traj.is_euler(),
            steps: last.step,
            t_reached: last.t,
            lp_initial: first.lp_norm,
            lp_final: last.lp_norm,
            lp_max,
            energy_initial: first.energy,
            energy_final: last.energy,
            energy_max: traj.steps.iter().map(|s| s.energy).fold(f64::NEG_INFINITY, f64::max),
            circulation_initial: first.circulation,
            circulation_final: last.circulation,
            lambda: diagnostics::lambda_bound(traj, friction, kappa)?,
            bound_ratio: lp_max / (first.lp_norm + first.energy),
        })
    }
}

/// Everything persisted about one run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub label: String,
    pub config: RunConfig,
    /// False when the solver aborted; the record then covers the partial trajectory.
    pub complete: bool,
    pub error: Option<String>,
    pub summary: RunSummary,
    pub projection: Option<ProjectionSummary>,
    pub series: Vec<StepRecord>,
    pub budget: Vec<BudgetRow>,
    pub provenance: Provenance,
    /// Field dumps, one per snapshot, when requested.
    pub fields: Vec<String>,
    #[serde(skip)]
    pub trajectory: Option<Trajectory>,
}

impl RunRecord {
    pub fn nu(&self) -> f64 {
        self.config.solver.nu
    }

    pub fn trajectory(&self) -> Result<&Trajectory> {
        self.trajectory
            .as_ref()
            .ok_or_else(|| Error::InvalidInput(format!("record {} carries no snapshots", self.label)))
    }
}

/// File-name friendly label of a viscosity, e.g. `nu_1e-2`.
pub fn nu_label(nu: f64) -> String {
    format!("nu_{nu:e}")
}

/// Samples (and optionally projects) the initial data, runs the solver and
/// evaluates the diagnostics. A solver abort yields a record flagged incomplete.
pub fn run_case(cfg: &RunConfig) -> Result<RunRecord> {
    cfg.validate()?;
    let started = unix_ms();
    let solver = Solver::new(&cfg.solver)?;
    let sampled = cfg.initial.sample(solver.grid())?;
    let kappa = cfg.solver.kappa();
    let (omega0, projection) = match &cfg.projection {
        Some(p) => {
            let report = project_compatible(&sampled, p.n, p.tol, p.max_iter, solver.friction(), kappa)?;
            let summary = ProjectionSummary::new(&report, &sampled, cfg.solver.p)?;
            (report.omega_n, Some(summary))
        }
        None => (sampled, None),
    };
    let (traj, error) = match solver.run(&omega0) {
        Ok(traj) => (traj, None),
        Err(Error::SolverAbort { t, step, reason, partial: Some(partial) }) => {
            (*partial, Some(format!("solver aborted at t = {t} (step {step}): {reason}")))
        }
        Err(e) => return Err(e),
    };
    let summary = RunSummary::new(&traj, solver.friction(), kappa)?;
    let budget = if traj.steps.len() >= 2 { diagnostics::vorticity_budget(&traj)? } else { Vec::new() };
    Ok(RunRecord {
        label: nu_label(cfg.solver.nu),
        config: cfg.clone(),
        complete: error.is_none(),
        error,
        summary,
        projection,
        series: traj.steps.clone(),
        budget,
        provenance: Provenance {
            version: env!("CARGO_PKG_VERSION").into(),
            started_unix_ms: started,
            finished_unix_ms: unix_ms(),
        },
        fields: Vec::new(),
        trajectory: Some(traj),
    })
}

/// `ratio_nu` of the uniform bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub nu: f64,
    pub lp_initial: f64,
    pub energy_initial: f64,
    pub lp_max: f64,
    pub ratio: f64,
}

impl Table for BoundRow {
    const HEADER: &'static [&'static str] = &["nu", "lp_initial", "energy_initial", "lp_max", "ratio"];
}

/// `e_k = max_t ||u^{nu_k} - u^{nu_{k+1}}||_2`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CauchyRow {
    pub nu_a: f64,
    pub nu_b: f64,
    pub e: f64,
}

impl Table for CauchyRow {
    const HEADER: &'static [&'static str] = &["nu_a", "nu_b", "e"];
}

/// Euler weak residual of one run against one test field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakRow {
    pub nu: f64,
    pub mode: usize,
    pub residual: f64,
}

impl Table for WeakRow {
    const HEADER: &'static [&'static str] = &["nu", "mode", "residual"];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpRow {
    pub nu: f64,
    pub lp_initial: f64,
    pub lp_final: f64,
    pub ratio: f64,
}

impl Table for LpRow {
    const HEADER: &'static [&'static str] = &["nu", "lp_initial", "lp_final", "ratio"];
}

/// One line per run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub label: String,
    pub nu: f64,
    pub complete: bool,
    pub steps: usize,
    pub lp_initial: f64,
    pub lp_final: f64,
    pub lp_max: f64,
    pub energy_initial: f64,
    pub energy_final: f64,
    pub circulation_initial: f64,
    pub circulation_final: f64,
    pub lambda: f64,
}

impl Table for SummaryRow {
    const HEADER: &'static [&'static str] = &[
        "label",
        "nu",
        "complete",
        "steps",
        "lp_initial",
        "lp_final",
        "lp_max",
        "energy_initial",
        "energy_final",
        "circulation_initial",
        "circulation_final",
        "lambda",
    ];
}

fn sorted(records: &[RunRecord]) -> Vec<&RunRecord> {
    let mut out: Vec<&RunRecord> = records.iter().collect();
    out.sort_by(|a, b| b.nu().total_cmp(&a.nu()));
    out
}

pub fn summary_table(records: &[RunRecord]) -> Vec<SummaryRow> {
    sorted(records)
        .into_iter()
        .map(|r| {
            let s = &r.summary;
            SummaryRow {
                label: r.label.clone(),
                nu: r.nu(),
                complete: r.complete,
                steps: s.steps,
                lp_initial: s.lp_initial,
                lp_final: s.lp_final,
                lp_max: s.lp_max,
                energy_initial: s.energy_initial,
                energy_final: s.energy_final,
                circulation_initial: s.circulation_initial,
                circulation_final: s.circulation_final,
                lambda: s.lambda,
            }
        })
        .collect()
}

/// `ratio_nu` per run, by decreasing viscosity.
pub fn uniform_bound_report(records: &[RunRecord]) -> Vec<BoundRow> {
    sorted(records)
        .into_iter()
        .map(|r| BoundRow {
            nu: r.nu(),
            lp_initial: r.summary.lp_initial,
            energy_initial: r.summary.energy_initial,
            lp_max: r.summary.lp_max,
            ratio: r.summary.bound_ratio,
        })
        .collect()
}

/// `||omega(T)||_p / ||omega_0||_p` per run, by decreasing viscosity.
pub fn lp_conservation_report(records: &[RunRecord]) -> Vec<LpRow> {
    sorted(records)
        .into_iter()
        .map(|r| LpRow {
            nu: r.nu(),
            lp_initial: r.summary.lp_initial,
            lp_final: r.summary.lp_final,
            ratio: r.summary.lp_final / r.summary.lp_initial,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CauchyTable {
    pub rows: Vec<CauchyRow>,
    /// Euler weak residuals of the smallest-viscosity run, viscous terms dropped.
    pub weak: Vec<WeakRow>,
}

/// Consecutive velocity distances over a sweep plus the Euler weak residuals
/// of its smallest-viscosity run.
pub fn cauchy_table(records: &[RunRecord]) -> Result<CauchyTable> {
    let runs = sorted(records);
    let mut rows = Vec::new();
    for w in runs.windows(2) {
        let d = diagnostics::velocity_distance(w[0].trajectory()?, w[1].trajectory()?)?;
        rows.push(CauchyRow { nu_a: w[0].nu(), nu_b: w[1].nu(), e: d.into_iter().fold(0.0, f64::max) });
    }
    let mut weak = Vec::new();
    if let Some(last) = runs.last() {
        let traj = last.trajectory()?;
        if traj.snapshots.len() >= diagnostics::MIN_WEAK_SNAPSHOTS {
            for mode in 0..3 {
                let residual = diagnostics::weak_residual(traj, 0.0, &TestField::mode(mode))?;
                weak.push(WeakRow { nu: last.nu(), mode, residual });
            }
        }
    }
    Ok(CauchyTable { rows, weak })
}

/// Records plus the derived tables of a sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub plan: SweepPlan,
    /// False if any run failed or aborted.
    pub complete: bool,
    pub failures: Vec<String>,
    pub records: Vec<RunRecord>,
    pub bounds: Vec<BoundRow>,
    pub lp_conservation: Vec<LpRow>,
    pub cauchy: Option<CauchyTable>,
}

/// Runs every viscosity of the plan on a pool of [`worker_threads`] threads.
pub fn sweep(plan: &SweepPlan) -> Result<SweepReport> {
    let mut plan = plan.clone();
    plan.normalize()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_threads())
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let results: Vec<Result<RunRecord>> = pool.install(|| plan.nu_list.par_iter().map(|&nu| run_case(&plan.case(nu))).collect());

    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (nu, r) in plan.nu_list.iter().zip(results) {
        match r {
            Ok(rec) => {
                if let Some(e) = &rec.error {
                    failures.push(format!("{}: {e}", rec.label));
                }
                records.push(rec);
            }
            Err(e) => failures.push(format!("{}: {e}", nu_label(*nu))),
        }
    }
    let complete = failures.is_empty();
    let cauchy = if complete { Some(cauchy_table(&records)?) } else { None };
    Ok(SweepReport {
        bounds: uniform_bound_report(&records),
        lp_conservation: lp_conservation_report(&records),
        plan,
        complete,
        failures,
        records,
        cauchy,
    })
}

/// One `n` of a projector study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectRow {
    pub n: usize,
    pub contraction_factor: f64,
    pub converged: bool,
    pub iterations: usize,
    pub compat_residual: f64,
    pub lp_distance: f64,
    pub error: String,
}

impl Table for ProjectRow {
    const HEADER: &'static [&'static str] =
        &["n", "contraction_factor", "converged", "iterations", "compat_residual", "lp_distance", "error"];
}

#[derive(Debug, Clone, Serialize)]
pub struct StudyReport {
    pub study: ProjectStudy,
    /// Smallest candidate whose contraction factor is below the threshold.
    pub n0: Option<usize>,
    pub rows: Vec<ProjectRow>,
    /// Residual histories by `n`, for the converged candidates.
    pub histories: Vec<(usize, Vec<f64>)>,
}

/// Measures the contraction factor and runs the projection for every candidate `n`.
pub fn project_study(study: &ProjectStudy) -> Result<StudyReport> {
    study.validate()?;
    let grid = study.grid.build()?;
    let friction = FrictionProfile::new(&grid, &study.alpha)?;
    let kappa = 1.0 / grid.radius();
    let omega = study.initial.sample(&grid)?;
    let n0 = select_n(&grid, &study.candidates, study.threshold, &friction, kappa).ok().map(|(n, _)| n);

    let mut candidates = study.candidates.clone();
    candidates.sort_unstable();
    candidates.dedup();
    let mut rows = Vec::new();
    let mut histories = Vec::new();
    for n in candidates {
        let factor = contraction_factor(&grid, n, &friction, kappa).unwrap_or(f64::NAN);
        let row = match project_compatible(&omega, n, study.tol, study.max_iter, &friction, kappa) {
            Ok(rep) => {
                let s = ProjectionSummary::new(&rep, &omega, study.p)?;
                histories.push((n, s.residual_history.clone()));
                ProjectRow {
                    n,
                    contraction_factor: factor,
                    converged: true,
                    iterations: s.iterations,
                    compat_residual: s.compat_residual,
                    lp_distance: s.lp_distance,
                    error: String::new(),
                }
            }
            Err(e) => ProjectRow {
                n,
                contraction_factor: factor,
                converged: false,
                iterations: 0,
                compat_residual: f64::NAN,
                lp_distance: f64::NAN,
                error: e.to_string(),
            },
        };
        rows.push(row);
    }
    Ok(StudyReport { study: study.clone(), n0, rows, histories })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{FrictionSpec, GridSpec};
    use crate::harness::InitialData;
    use crate::solver::SolverConfig;

    fn rotation(nu: f64) -> RunConfig {
        RunConfig {
            solver: SolverConfig::new(nu, 0.5, GridSpec::new(1.0, 32, 32), FrictionSpec::constant(0.0))
                .with_uniform_snapshots(5),
            initial: InitialData::solid_rotation(),
            projection: None,
            output: Default::default(),
        }
    }

    #[test]
    fn solid_rotation_record_is_steady() {
        let rec = run_case(&rotation(0.01)).unwrap();
        assert!(rec.complete && !rec.summary.euler);
        let l0 = rec.summary.lp_initial;
        assert!(rec.series.iter().all(|s| (s.lp_norm - l0).abs() < 1e-10 * l0));
        assert_eq!(rec.label, "nu_1e-2");
    }

    #[test]
    fn euler_run_is_flagged() {
        let rec = run_case(&rotation(0.0)).unwrap();
        assert!(rec.summary.euler);
        assert_eq!(rec.summary.kind, TrajectoryKind::Euler);
    }

    #[test]
    fn steady_sweep_has_equal_ratios_and_zero_distances() {
        let base = rotation(0.1).solver;
        let plan = SweepPlan::new(base, vec![1e-3, 1e-1, 1e-2], InitialData::solid_rotation()).unwrap();
        let rep = sweep(&plan).unwrap();
        assert!(rep.complete);
        let r0 = rep.bounds[0].ratio;
        assert!(rep.bounds.iter().all(|b| (b.ratio - r0).abs() < 1e-6));
        let cauchy = rep.cauchy.unwrap();
        assert_eq!(cauchy.rows.len(), 2);
        assert!(cauchy.rows.iter().all(|r| r.e < 1e-10));
        assert_eq!(cauchy.weak.len(), 3);
    }

    #[test]
    fn reports_ignore_input_order() {
        let recs: Vec<RunRecord> = [0.1, 0.01].iter().map(|&nu| run_case(&rotation(nu)).unwrap()).collect();
        let rev: Vec<RunRecord> = recs.iter().rev().cloned().collect();
        assert_eq!(uniform_bound_report(&recs), uniform_bound_report(&rev));
        assert_eq!(lp_conservation_report(&recs), lp_conservation_report(&rev));
    }

    #[test]
    fn singular_patch_projection_is_recorded() {
        let mut cfg = rotation(0.01);
        cfg.solver = SolverConfig::new(0.01, 0.05, GridSpec::new(1.0, 128, 160), FrictionSpec::constant(1.0));
        cfg.initial = InitialData::singular_patch();
        cfg.projection = Some(super::super::config::ProjectionSpec { n: 8, tol: 1e-10, max_iter: 200 });
        let rec = run_case(&cfg).unwrap();
        let p = rec.projection.unwrap();
        assert_eq!(p.n, 8);
        assert!(p.compat_residual < 1e-8);
    }

    #[test]
    fn thread_cap_is_positive() {
        assert!(worker_threads() >= 1);
    }
}
