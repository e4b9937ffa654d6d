//! TOML configuration of single runs, viscosity sweeps and projector studies.
//! Unknown keys are rejected everywhere.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::initial::InitialData;
use crate::error::{Error, Result};
use crate::geometry::{FrictionSpec, GridSpec};
use crate::solver::SolverConfig;

fn default_tol() -> f64 {
    1e-10
}

fn default_max_iter() -> usize {
    200
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

/// Compatible projection applied to the initial data before a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectionSpec {
    pub n: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    /// Also write every snapshot as a raw field dump.
    #[serde(default)]
    pub dump_fields: bool,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { dir: default_dir(), dump_fields: false }
    }
}

/// One run: `[solver]`, `[initial]`, optional `[projection]` and `[output]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub solver: SolverConfig,
    pub initial: InitialData,
    #[serde(default)]
    pub projection: Option<ProjectionSpec>,
    #[serde(default)]
    pub output: OutputSpec,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.solver.validate()?;
        if let Some(p) = &self.projection {
            validate_projection(p)?;
        }
        Ok(())
    }
}

fn validate_projection(p: &ProjectionSpec) -> Result<()> {
    if p.n == 0 || !(p.tol > 0.0) || p.max_iter == 0 {
        return Err(Error::Config(format!("projection needs n >= 1, tol > 0 and max_iter >= 1, got {p:?}")));
    }
    Ok(())
}

/// A viscosity sweep. The `[solver]` table holds everything but `nu`, which
/// comes from `nu_list`; the list is sorted into decreasing order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepPlan {
    #[serde(rename = "solver")]
    pub base: SolverConfig,
    pub nu_list: Vec<f64>,
    pub initial: InitialData,
    #[serde(default)]
    pub projection: Option<ProjectionSpec>,
    #[serde(default)]
    pub output: OutputSpec,
}

impl SweepPlan {
    pub fn new(base: SolverConfig, nu_list: Vec<f64>, initial: InitialData) -> Result<Self> {
        let mut plan = Self { base, nu_list, initial, projection: None, output: OutputSpec::default() };
        plan.normalize()?;
        Ok(plan)
    }

    /// Sorts `nu_list` into decreasing order and checks the plan.
    pub fn normalize(&mut self) -> Result<()> {
        if self.nu_list.is_empty() {
            return Err(Error::Config("nu_list is empty".into()));
        }
        if let Some(bad) = self.nu_list.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
            return Err(Error::Config(format!("sweep viscosities must be positive, got {bad}")));
        }
        self.nu_list.sort_by(|a, b| b.total_cmp(a));
        if self.nu_list.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("nu_list contains duplicates".into()));
        }
        self.base.nu = self.nu_list[0];
        self.base.validate()?;
        if let Some(p) = &self.projection {
            validate_projection(p)?;
        }
        Ok(())
    }

    /// The run configuration for one viscosity.
    pub fn case(&self, nu: f64) -> RunConfig {
        let mut solver = self.base.clone();
        solver.nu = nu;
        RunConfig { solver, initial: self.initial.clone(), projection: self.projection.clone(), output: self.output.clone() }
    }
}

fn default_candidates() -> Vec<usize> {
    vec![2, 4, 8, 16]
}

fn default_threshold() -> f64 {
    0.5
}

/// A projector study over several `n` on one grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectStudy {
    pub grid: GridSpec,
    #[serde(default)]
    pub alpha: FrictionSpec,
    pub initial: InitialData,
    #[serde(default = "default_candidates")]
    pub candidates: Vec<usize>,
    /// Contraction factor below which `n` is accepted.
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default)]
    pub output: OutputSpec,
}

fn default_p() -> f64 {
    4.0
}

impl ProjectStudy {
    pub fn validate(&self) -> Result<()> {
        self.grid.build()?;
        self.alpha.validate(self.grid.n_theta)?;
        if self.candidates.is_empty() || self.candidates.contains(&0) {
            return Err(Error::Config("candidates must be a non-empty list of positive integers".into()));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::Config(format!("threshold must lie in (0, 1), got {}", self.threshold)));
        }
        if !(self.tol > 0.0) || self.max_iter == 0 || !(self.p >= 1.0) {
            return Err(Error::Config("tol, max_iter and p must be positive".into()));
        }
        Ok(())
    }
}

fn parse<T: DeserializeOwned>(text: &str) -> Result<T> {
    toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
}

pub fn parse_run(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig = parse(text)?;
    cfg.validate()?;
    Ok(cfg)
}

/// `nu` may not appear in the `[solver]` table of a sweep.
pub fn parse_sweep(text: &str) -> Result<SweepPlan> {
    let mut table: toml::Table = parse(text)?;
    match table.get_mut("solver") {
        Some(toml::Value::Table(solver)) => {
            if solver.contains_key("nu") {
                return Err(Error::Config("a sweep takes its viscosities from nu_list, not solver.nu".into()));
            }
            solver.insert("nu".into(), toml::Value::Float(1.0));
        }
        _ => return Err(Error::Config("missing [solver] table".into())),
    }
    let mut plan: SweepPlan = table.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
    plan.normalize()?;
    Ok(plan)
}

pub fn parse_study(text: &str) -> Result<ProjectStudy> {
    let cfg: ProjectStudy = parse(text)?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    const RUN: &str = r#"
[solver]
nu = 0.01
T = 0.5
grid = { n_theta = 32, n_r = 32 }

[initial]
name = "solid_rotation"
"#;

    const SWEEP: &str = r#"
nu_list = [1e-3, 1e-1, 1e-2]

[solver]
T = 1.0
grid = { n_theta = 32, n_r = 32 }
alpha = { constant = 1.0, cos = [1.0] }

[initial]
name = "gaussian_blob"
width = 0.2
"#;

    #[test]
    fn run_config_defaults() {
        let cfg = parse_run(RUN).unwrap();
        assert_eq!(cfg.solver.p, 4.0);
        assert_eq!(cfg.solver.grid.radius, 1.0);
        assert_eq!(cfg.initial, InitialData::solid_rotation());
        assert!(cfg.projection.is_none());
        assert_eq!(cfg.output, OutputSpec::default());
    }

    #[test]
    fn unknown_keys_are_errors() {
        assert!(parse_run(&format!("{RUN}\nextra = 1\n")).is_err());
        assert!(parse_run(&RUN.replace("T = 0.5", "T = 0.5\ntypo = 3")).is_err());
        assert!(parse_sweep(&SWEEP.replace("width", "sigma")).is_err());
    }

    #[test]
    fn sweep_sorts_viscosities() {
        let plan = parse_sweep(SWEEP).unwrap();
        assert_eq!(plan.nu_list, vec![1e-1, 1e-2, 1e-3]);
        assert_eq!(plan.case(1e-2).solver.nu, 1e-2);
        assert_eq!(plan.base.alpha.cos, vec![1.0]);
    }

    #[test]
    fn sweep_rejects_bad_lists() {
        assert!(parse_sweep(&SWEEP.replace("[1e-3, 1e-1, 1e-2]", "[1e-2, 1e-2]")).is_err());
        assert!(parse_sweep(&SWEEP.replace("[1e-3, 1e-1, 1e-2]", "[1e-2, 0.0]")).is_err());
        assert!(parse_sweep(&SWEEP.replace("[1e-3, 1e-1, 1e-2]", "[]")).is_err());
        assert!(parse_sweep(&SWEEP.replace("T = 1.0", "T = 1.0\nnu = 0.1")).is_err());
    }

    #[test]
    fn study_defaults() {
        let s = parse_study("grid = { n_theta = 64, n_r = 64 }\n[initial]\nname = \"singular_patch\"\n").unwrap();
        assert_eq!(s.candidates, vec![2, 4, 8, 16]);
        assert_eq!(s.alpha, FrictionSpec::default());
    }
}
