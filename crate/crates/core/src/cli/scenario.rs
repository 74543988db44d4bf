use std::path::Path;

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::encoder::AgentModel;
use crate::planner::{goal_center, AgentSpec, Mission, PlannerParams};
use crate::qts::{base_station_matrix, generate_patterns, CapacityMatrix, Grid, GridMatrix, PathLossParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Workspace {
    /// South-west corner.
    pub origin: [f64; 2],
    pub side: f64,
    pub depth: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CapacitySource {
    /// Row-major, north row first.
    Explicit(Vec<Vec<u32>>),
    /// Path-loss map from the scenario's stations and obstacles.
    Generate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Goal {
    /// Axis-aligned square of half-width `half` around `center`.
    Box { center: [f64; 2], half: f64 },
    /// Rows `(a, b)`; inside means `a . p + b < 0`.
    Polytope(Vec<([f64; 2], f64)>),
}

impl Goal {
    pub fn polytope(&self) -> Vec<([f64; 2], f64)> {
        match self {
            Goal::Box { center: c, half: h } => vec![
                ([1.0, 0.0], -(c[0] + h)),
                ([-1.0, 0.0], c[0] - h),
                ([0.0, 1.0], -(c[1] + h)),
                ([0.0, -1.0], c[1] - h),
            ],
            Goal::Polytope(rows) => rows.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioAgent {
    pub id: usize,
    pub x0: [f64; 4],
    pub goal: Goal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub notes: Vec<String>,
    pub workspace: Workspace,
    pub capacity: CapacitySource,
    /// Obstacle cells `[m, n]`.
    pub obstacles: Vec<(usize, usize)>,
    #[serde(default)]
    pub stations: Vec<[f64; 2]>,
    #[serde(default)]
    pub path_loss: PathLossParams,
    pub dynamics: AgentModel,
    /// Sampling period the dynamics matrices were discretized with.
    pub dt: f64,
    pub agents: Vec<ScenarioAgent>,
    pub params: PlannerParams,
}

const BUNDLED: [(&str, &str); 4] = [
    ("paper_fig5", include_str!("../../scenarios/paper_fig5.json")),
    ("paper_fig7", include_str!("../../scenarios/paper_fig7.json")),
    ("toy_2agent", include_str!("../../scenarios/toy_2agent.json")),
    ("solo", include_str!("../../scenarios/solo.json")),
];

/// Names of the scenarios compiled into the library.
pub fn bundled_names() -> Vec<&'static str> {
    BUNDLED.iter().map(|(n, _)| *n).collect()
}

impl Scenario {
    /// Parses and validates; parse errors carry the JSON path of the bad field.
    pub fn from_json(s: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(s);
        let sc: Scenario = serde_path_to_error::deserialize(de).map_err(|e| CliError::Schema {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn bundled(name: &str) -> Option<Scenario> {
        let stem = name.trim_end_matches(".json").trim_end_matches(".scn");
        BUNDLED
            .iter()
            .find(|(n, _)| *n == stem)
            .map(|(_, src)| Scenario::from_json(src).expect("bundled scenarios are valid"))
    }

    pub fn grid(&self) -> Result<Grid, CliError> {
        let w = &self.workspace;
        Grid::new(w.origin, w.side, w.depth).map_err(|e| CliError::Invalid(vec![format!("workspace: {e}")]))
    }

    pub fn capacity_matrix(&self) -> Result<CapacityMatrix, CliError> {
        let g = self.grid()?;
        match &self.capacity {
            CapacitySource::Explicit(rows) => GridMatrix::from_rows(rows.clone())
                .map_err(|e| CliError::Invalid(vec![format!("capacity.explicit: {e}")])),
            CapacitySource::Generate => Ok(base_station_matrix(
                &self.stations,
                &self.obstacles,
                &g,
                &self.path_loss,
            )),
        }
    }

    /// Checks every invariant and reports all failures at once.
    pub fn validate(&self) -> Result<(), CliError> {
        let mut errs = Vec::new();
        let grid = match self.grid() {
            Ok(g) => Some(g),
            Err(CliError::Invalid(e)) => {
                errs.extend(e);
                None
            }
            Err(e) => return Err(e),
        };
        if let Err(e) = self.dynamics.validate() {
            errs.push(format!("dynamics: {e}"));
        }
        let pp = &self.params;
        if !(self.dt > 0.0) {
            errs.push("dt: must be positive".into());
        }
        if pp.horizon < 1 {
            errs.push("params.horizon: must be at least 1".into());
        }
        if pp.sides < 3 {
            errs.push("params.sides: must be at least 3".into());
        }
        if !(0.0..=1.0).contains(&pp.weights.alpha) {
            errs.push("params.weights.alpha: must lie in [0, 1]".into());
        }
        let w = &pp.weights;
        if w.q.iter().chain(&w.r).any(|x| *x < 0.0) || w.lambda < 0.0 {
            errs.push("params.weights: q, r and lambda must be nonnegative".into());
        }
        if !(pp.d1 > 0.0 && pp.d2 > 0.0) {
            errs.push("params.d1/d2: separation distances must be positive".into());
        }
        if !(pp.neighbor_radius > 0.0) {
            errs.push("params.neighbor_radius: must be positive".into());
        }
        if pp.node_limit == 0 {
            errs.push("params.node_limit: must be positive".into());
        }
        let Some(grid) = grid else {
            return Err(CliError::Invalid(errs));
        };
        let side = grid.cells_per_side();
        for (k, &(m, n)) in self.obstacles.iter().enumerate() {
            if m >= side || n >= side {
                errs.push(format!(
                    "obstacles[{k}]: cell ({m}, {n}) outside the {side}x{side} grid"
                ));
            }
        }
        let cap = match &self.capacity {
            CapacitySource::Explicit(rows) if rows.len() != side || rows.iter().any(|r| r.len() != side) => {
                errs.push(format!(
                    "capacity.explicit: expected {side}x{side} rows for depth {}",
                    grid.depth
                ));
                None
            }
            _ => self.capacity_matrix().ok(),
        };
        if let Some(cap) = &cap {
            for (m, n) in cap.cells() {
                let zero = *cap.get(m, n) == 0;
                let listed = self.obstacles.contains(&(m, n));
                if zero && !listed {
                    errs.push(format!(
                        "capacity: cell ({m}, {n}) has capacity 0 but is not an obstacle"
                    ));
                }
                if listed && !zero {
                    errs.push(format!("obstacles: cell ({m}, {n}) has nonzero capacity"));
                }
            }
            let starts: Vec<[f64; 2]> = self.agents.iter().map(|a| [a.x0[0], a.x0[1]]).collect();
            let counts = grid.occupancy_counts(&starts);
            for (m, n) in counts.cells() {
                if *counts.get(m, n) > *cap.get(m, n) {
                    errs.push(format!(
                        "agents: {} agents start in cell ({m}, {n}) of capacity {}",
                        counts.get(m, n),
                        cap.get(m, n)
                    ));
                }
            }
        }
        let mut ids = std::collections::BTreeSet::new();
        for (k, a) in self.agents.iter().enumerate() {
            if !ids.insert(a.id) {
                errs.push(format!("agents[{k}].id: duplicate id {}", a.id));
            }
            if !grid.contains([a.x0[0], a.x0[1]]) {
                errs.push(format!("agents[{k}].x0: outside the workspace"));
            }
            match goal_center(&a.goal.polytope()) {
                None => errs.push(format!("agents[{k}].goal: empty or unbounded")),
                Some(c) if !grid.contains(c) => errs.push(format!("agents[{k}].goal: outside the workspace")),
                Some(_) => {}
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(CliError::Invalid(errs))
        }
    }

    /// Planner input for this scenario.
    pub fn mission(&self) -> Result<Mission, CliError> {
        let capacity = self.capacity_matrix()?;
        let patterns = generate_patterns(&capacity).map_err(|e| CliError::Invalid(vec![format!("capacity: {e}")]))?;
        Ok(Mission {
            grid: self.grid()?,
            capacity,
            patterns,
            model: self.dynamics.clone(),
            comm: self.path_loss,
            agents: self
                .agents
                .iter()
                .map(|a| AgentSpec {
                    id: a.id,
                    x0: a.x0,
                    goal: a.goal.polytope(),
                })
                .collect(),
            params: self.params.clone(),
        })
    }
}

/// Reads a scenario file; a bare bundled name (`paper_fig5`, `solo.scn`, ...)
/// that is not an existing path loads the compiled-in copy.
pub fn load_scenario(path: &Path) -> Result<Scenario, CliError> {
    if !path.exists() {
        if let Some(sc) = path.to_str().and_then(Scenario::bundled) {
            return Ok(sc);
        }
    }
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    Scenario::from_json(&text)
}
