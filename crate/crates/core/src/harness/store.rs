//! Output directories: one JSON record per run, CSV tables per sweep or study.

use std::fs;
use std::path::Path;

use super::emit::{dump_field, load_field, write_csv_file, write_json};
use super::run::{
    cauchy_table, lp_conservation_report, summary_table, uniform_bound_report, RunRecord, StudyReport, SweepReport,
};
use crate::error::{Error, Result};
use crate::solver::{Snapshot, Trajectory};

const RECORD_PREFIX: &str = "record_";

/// Writes `record_<label>.json`, a per-step CSV and, if asked, one field dump per snapshot.
pub fn write_record(record: &mut RunRecord, dir: &Path, dump_fields: bool) -> Result<()> {
    fs::create_dir_all(dir)?;
    record.fields.clear();
    if dump_fields {
        if let Some(traj) = &record.trajectory {
            for (k, snap) in traj.snapshots.iter().enumerate() {
                let name = format!("{}_snap{k:03}.f64", record.label);
                dump_field(&dir.join(&name), &snap.omega, snap.t)?;
                record.fields.push(name);
            }
        }
    }
    write_series(&dir.join(format!("{}_series.csv", record.label)), record)?;
    write_json(&dir.join(format!("{RECORD_PREFIX}{}.json", record.label)), record)
}

fn write_series(path: &Path, record: &RunRecord) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path)?;
    if record.series.is_empty() {
        w.write_record([
            "step",
            "t",
            "dt",
            "lp_pow",
            "lp_norm",
            "energy",
            "circulation",
            "boundary_circulation",
            "max_wall_vorticity",
            "dissipation",
            "boundary_flux",
        ])?;
    }
    for s in &record.series {
        w.serialize(s)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes every record and the summary tables of a sweep.
pub fn write_sweep(report: &mut SweepReport, dir: &Path) -> Result<()> {
    let dump = report.plan.output.dump_fields;
    for rec in &mut report.records {
        write_record(rec, dir, dump)?;
    }
    write_tables(&report.records, dir)?;
    if let Some(c) = &report.cauchy {
        write_csv_file(&dir.join("cauchy.csv"), &c.rows)?;
        write_csv_file(&dir.join("weak_residual.csv"), &c.weak)?;
    }
    write_json(&dir.join("sweep.json"), report)
}

fn write_tables(records: &[RunRecord], dir: &Path) -> Result<()> {
    write_csv_file(&dir.join("summary.csv"), &summary_table(records))?;
    write_csv_file(&dir.join("uniform_bound.csv"), &uniform_bound_report(records))?;
    write_csv_file(&dir.join("lp_conservation.csv"), &lp_conservation_report(records))
}

pub fn write_study(report: &StudyReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_csv_file(&dir.join("projection.csv"), &report.rows)?;
    write_json(&dir.join("projection.json"), report)
}

/// Loads every `record_*.json` in `dir`, rebuilding trajectories from field dumps when present.
pub fn load_records(dir: &Path) -> Result<Vec<RunRecord>> {
    let mut names: Vec<String> = fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.starts_with(RECORD_PREFIX) && n.ends_with(".json"))
        .collect();
    names.sort();
    let mut records = Vec::with_capacity(names.len());
    for name in names {
        let mut rec: RunRecord = serde_json::from_str(&fs::read_to_string(dir.join(&name))?)?;
        if !rec.fields.is_empty() {
            let mut snapshots = Vec::with_capacity(rec.fields.len());
            for f in &rec.fields {
                let omega = load_field(&dir.join(f))?;
                let t = field_time(&dir.join(f))?;
                snapshots.push(Snapshot { t, omega });
            }
            rec.trajectory = Some(Trajectory {
                config: rec.config.solver.clone(),
                kind: rec.summary.kind,
                snapshots,
                steps: rec.series.clone(),
            });
        }
        records.push(rec);
    }
    Ok(records)
}

fn field_time(path: &Path) -> Result<f64> {
    let header: super::emit::FieldHeader = serde_json::from_str(&fs::read_to_string(path.with_extension("json"))?)?;
    Ok(header.t)
}

/// Regenerates the summary tables (and the Cauchy table when every record has
/// field dumps) from the records stored in `dir`. Returns the number of records.
pub fn report_dir(dir: &Path) -> Result<usize> {
    let records = load_records(dir)?;
    if records.is_empty() {
        return Err(Error::InvalidInput(format!("no run records in {}", dir.display())));
    }
    write_tables(&records, dir)?;
    if records.len() >= 2 && records.iter().all(|r| r.trajectory.is_some()) {
        let c = cauchy_table(&records)?;
        write_csv_file(&dir.join("cauchy.csv"), &c.rows)?;
        write_csv_file(&dir.join("weak_residual.csv"), &c.weak)?;
    }
    Ok(records.len())
}
