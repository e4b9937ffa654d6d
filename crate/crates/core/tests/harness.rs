//! End-to-end checks of the sweep pipeline and its stored outputs.

use std::fs;
use std::path::Path;

use slipflow::diagnostics::{lambda_bound, velocity_distance};
use slipflow::geometry::{FrictionProfile, FrictionSpec, GridSpec};
use slipflow::harness::{
    cauchy_table, report_dir, sweep, uniform_bound_report, write_sweep, InitialData, SweepPlan,
};
use slipflow::solver::{run, SolverConfig, Snapshot, Trajectory};

fn plan() -> SweepPlan {
    let mut alpha = FrictionSpec::constant(1.0);
    alpha.cos = vec![0.5];
    let base = SolverConfig::new(1.0, 0.2, GridSpec::new(1.0, 16, 12), alpha).with_uniform_snapshots(4);
    let mut plan = SweepPlan::new(base, vec![1e-3, 1e-1, 1e-2], InitialData::gaussian_blob()).unwrap();
    plan.output.dump_fields = true;
    plan
}

fn csv_files(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".csv"))
        .collect();
    names.sort();
    names
}

#[test]
fn sweep_tables_are_byte_identical_across_runs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [a.path(), b.path()] {
        let mut rep = sweep(&plan()).unwrap();
        assert!(rep.complete);
        write_sweep(&mut rep, dir).unwrap();
    }
    let names = csv_files(a.path());
    assert_eq!(names, csv_files(b.path()));
    for want in ["summary.csv", "uniform_bound.csv", "lp_conservation.csv", "cauchy.csv", "weak_residual.csv"] {
        assert!(names.iter().any(|n| n == want), "missing {want}");
    }
    for n in &names {
        assert_eq!(fs::read(a.path().join(n)).unwrap(), fs::read(b.path().join(n)).unwrap(), "{n} differs");
    }
}

#[test]
fn report_regenerates_the_stored_tables() {
    let dir = tempfile::tempdir().unwrap();
    let mut rep = sweep(&plan()).unwrap();
    write_sweep(&mut rep, dir.path()).unwrap();
    let before: Vec<Vec<u8>> = ["uniform_bound.csv", "cauchy.csv", "lp_conservation.csv"]
        .iter()
        .map(|n| fs::read(dir.path().join(n)).unwrap())
        .collect();
    for n in ["uniform_bound.csv", "cauchy.csv", "lp_conservation.csv"] {
        fs::remove_file(dir.path().join(n)).unwrap();
    }
    assert_eq!(report_dir(dir.path()).unwrap(), 3);
    for (n, want) in ["uniform_bound.csv", "cauchy.csv", "lp_conservation.csv"].iter().zip(before) {
        assert_eq!(fs::read(dir.path().join(n)).unwrap(), want, "{n} differs after report");
    }
}

#[test]
fn reports_ignore_record_order() {
    let rep = sweep(&plan()).unwrap();
    let mut reversed = rep.records.clone();
    reversed.reverse();
    let rows = uniform_bound_report(&rep.records);
    assert_eq!(rows, uniform_bound_report(&reversed));
    assert!(rows.windows(2).all(|w| w[0].nu > w[1].nu));
    let (c1, c2) = (cauchy_table(&rep.records).unwrap(), cauchy_table(&reversed).unwrap());
    assert_eq!(c1.rows, c2.rows);
}

#[test]
fn velocity_distance_obeys_the_triangle_inequality() {
    let rep = sweep(&plan()).unwrap();
    let t: Vec<&Trajectory> = rep.records.iter().map(|r| r.trajectory().unwrap()).collect();
    let ab = velocity_distance(t[0], t[1]).unwrap();
    let bc = velocity_distance(t[1], t[2]).unwrap();
    let ac = velocity_distance(t[0], t[2]).unwrap();
    for k in 0..ab.len() {
        assert!(ac[k] <= ab[k] + bc[k] + 1e-14, "snapshot {k}: {} > {} + {}", ac[k], ab[k], bc[k]);
    }
    assert!(velocity_distance(t[0], t[0]).unwrap().iter().all(|&d| d == 0.0));
    assert_eq!(ab[0], 0.0);
}

#[test]
fn lambda_bound_is_positively_homogeneous() {
    let cfg = plan().case(1e-2).solver;
    let g = cfg.grid.build().unwrap();
    let traj = run(&cfg, &InitialData::gaussian_blob().sample(&g).unwrap()).unwrap();
    let friction = FrictionProfile::new(&g, &cfg.alpha).unwrap();
    let base = lambda_bound(&traj, &friction, cfg.kappa()).unwrap();
    assert!(base > 0.0);
    for c in [-3.0, 0.5, 2.0] {
        let mut scaled = traj.clone();
        scaled.snapshots = traj.snapshots.iter().map(|s| Snapshot { t: s.t, omega: s.omega.scaled(c) }).collect();
        let l = lambda_bound(&scaled, &friction, cfg.kappa()).unwrap();
        assert!((l - c.abs() * base).abs() <= 1e-12 * l, "c = {c}: {l} vs {}", c.abs() * base);
    }
}
