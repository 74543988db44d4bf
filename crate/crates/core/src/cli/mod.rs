//! Scenario files, run orchestration, post-hoc verification and plots.
//!
//! Scenarios and run logs are JSON; matrices are row-major with the north
//! row first. A run writes `run.json` (the log), `states.csv` (the flat state
//! table), `report.json` and `timing.json` (wall times, kept apart so the
//! other files are reproducible byte for byte).

mod plot;
mod report;
mod scenario;

pub use plot::{render_heatmap, render_trajectories};
pub use report::{verify, AgentVerdict, PatternViolation, Report, SolveSummary};
pub use scenario::{bundled_names, load_scenario, CapacitySource, Goal, Scenario, ScenarioAgent, Workspace};

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::logic::LogicError;
use crate::planner::{run, PlannerError, RunLog, RunOutput};
use crate::qts::QtsError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("scenario field `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("invalid scenario:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),
    #[error("log does not match scenario: {0}")]
    Mismatch(String),
    #[error("malformed run log: {0}")]
    BadLog(String),
    #[error("step {step} out of range (last step {last})")]
    StepOutOfRange { step: usize, last: usize },
    #[error(transparent)]
    Planner(#[from] PlannerError),
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error(transparent)]
    Qts(#[from] QtsError),
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| io_err(path, e))
}

/// Command-line overrides of scenario parameters.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOverrides {
    pub seed: Option<u64>,
    pub alpha: Option<f64>,
    pub horizon: Option<usize>,
    pub parallel: bool,
}

impl RunOverrides {
    pub fn apply(&self, sc: &mut Scenario) -> Result<(), CliError> {
        let p = &mut sc.params;
        if let Some(s) = self.seed {
            p.seed = s;
        }
        if let Some(a) = self.alpha {
            p.weights.alpha = a;
        }
        if let Some(h) = self.horizon {
            p.horizon = h;
        }
        p.parallel |= self.parallel;
        sc.validate()
    }
}

/// Runs a scenario in memory and verifies the result.
pub fn run_scenario(sc: &Scenario) -> Result<(RunOutput, Report), CliError> {
    let mut out = run(&sc.mission()?)?;
    out.log.stations = sc.stations.clone();
    let report = verify(&out.log, sc)?;
    Ok((out, report))
}

/// `run`: plans, writes the artifacts into `out_dir` and returns the report.
pub fn cmd_run(scenario: &Path, overrides: &RunOverrides, out_dir: &Path) -> Result<Report, CliError> {
    let mut sc = load_scenario(scenario)?;
    overrides.apply(&mut sc)?;
    let (out, report) = run_scenario(&sc)?;
    std::fs::create_dir_all(out_dir).map_err(|e| io_err(out_dir, e))?;
    write(&out_dir.join("run.json"), &out.log.to_json())?;
    write(&out_dir.join("states.csv"), &out.log.to_csv())?;
    write(&out_dir.join("report.json"), &report.to_json())?;
    write(&out_dir.join("scenario.json"), &sc.to_json())?;
    let timing = serde_json::to_string_pretty(&out.timings).expect("timings serialize");
    write(&out_dir.join("timing.json"), &timing)?;
    Ok(report)
}

pub fn load_log(path: &Path) -> Result<RunLog, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    RunLog::from_json(&text).map_err(|e| CliError::BadLog(e.to_string()))
}

/// `verify`: re-checks a stored log against its scenario.
pub fn cmd_verify(log: &Path, scenario: &Path) -> Result<Report, CliError> {
    verify(&load_log(log)?, &load_scenario(scenario)?)
}

/// `plot`: writes `trajectories.svg` and one `occupancy_<step>.svg` per step.
pub fn cmd_plot(log: &Path, steps: &[usize], out_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let log = load_log(log)?;
    let heatmaps = steps
        .iter()
        .map(|&s| render_heatmap(&log, s).map(|svg| (s, svg)))
        .collect::<Result<Vec<_>, _>>()?;
    std::fs::create_dir_all(out_dir).map_err(|e| io_err(out_dir, e))?;
    let mut written = vec![out_dir.join("trajectories.svg")];
    write(&written[0], &render_trajectories(&log))?;
    for (s, svg) in heatmaps {
        let p = out_dir.join(format!("occupancy_{s:03}.svg"));
        write(&p, &svg)?;
        written.push(p);
    }
    Ok(written)
}
