//! Configuration, orchestration of runs and sweeps, reports and persistence.

pub mod config;
pub mod emit;
pub mod initial;
pub mod run;
pub mod store;

pub use config::{parse_run, parse_study, parse_sweep, OutputSpec, ProjectStudy, ProjectionSpec, RunConfig, SweepPlan};
pub use initial::InitialData;
pub use run::{
    cauchy_table, lp_conservation_report, project_study, run_case, summary_table, sweep, uniform_bound_report,
    worker_threads, BoundRow, CauchyRow, CauchyTable, LpRow, ProjectRow, RunRecord, StudyReport, SweepReport, WeakRow,
};
pub use store::{load_records, report_dir, write_record, write_study, write_sweep};
