use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::logic::{build_goal_formula, build_separation_formula, SeparationMode, StlFormula};
use crate::milp::{MilpModel, VarId};
use crate::qts::{CapacityMatrix, Grid, GridMatrix, Patterns};

use super::{
    encode_cost_j1, encode_cost_j2, encode_dynamics, encode_occupancy, encode_velocity_polygon, pattern_formula,
    require_spatel, require_stl, AgentModel, EncodeError, EncodingContext,
};

/// Weights of `alpha J1 + (1 - alpha) J2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CostWeights {
    pub alpha: f64,
    pub q: [f64; 4],
    pub r: [f64; 2],
    pub lambda: f64,
}

impl Default for CostWeights {
    fn default() -> Self {
        CostWeights {
            alpha: 0.5,
            q: [0.0; 4],
            r: [1.0, 1.0],
            lambda: 0.005,
        }
    }
}

/// A neighbor as seen by the planning agent: its broadcast states on the
/// local steps of the window (held at the last entry beyond its end) and the
/// communication-quality pattern it induces.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborTrack {
    pub states: Vec<[f64; 4]>,
    pub comm: GridMatrix<f64>,
}

impl NeighborTrack {
    fn at(&self, t: usize) -> [f64; 4] {
        self.states[t.min(self.states.len() - 1)]
    }
}

/// Everything needed to lower one agent's problem for one planning period.
#[derive(Debug, Clone)]
pub struct ProblemSpec<'a> {
    pub agent: &'a AgentModel,
    pub x0: [f64; 4],
    /// Current global step.
    pub t0: usize,
    pub horizon: usize,
    pub deadline: usize,
    pub grid: &'a Grid,
    /// Per-cell capacity, doubling as base-station quality.
    pub capacity: &'a CapacityMatrix,
    pub patterns: Option<&'a Patterns>,
    /// Goal polytope rows `(a, b)`; the goal is reached strictly inside, `a . p + b < 0`.
    pub goal: &'a [([f64; 2], f64)],
    pub goal_center: [f64; 2],
    pub neighbors: &'a [NeighborTrack],
    pub weights: CostWeights,
    pub separation: Option<(f64, f64, SeparationMode)>,
    pub sides: usize,
    /// Enforce the goal once the deadline falls inside the window.
    pub hard_goal: bool,
}

impl ProblemSpec<'_> {
    /// Number of encoded steps: the horizon, cut at the deadline.
    pub fn effective_horizon(&self) -> usize {
        self.horizon.min(self.deadline.saturating_sub(self.t0) + 1).max(1)
    }

    /// Whether the hard goal constraint is part of the model.
    pub fn goal_is_hard(&self) -> bool {
        let h = self.effective_horizon();
        self.hard_goal && h >= 2 && self.t0 + h > self.deadline
    }
}

/// Neighbor cell counts per local step, saturated at the cell capacity.
fn neighbor_counts(spec: &ProblemSpec, steps: usize) -> Vec<GridMatrix<f64>> {
    let g = spec.grid;
    (0..steps)
        .map(|t| {
            let positions: Vec<[f64; 2]> = spec
                .neighbors
                .iter()
                .map(|n| {
                    let s = n.at(t);
                    [s[0], s[1]]
                })
                .collect();
            let counts = g.occupancy_counts(&positions);
            GridMatrix::from_fn(counts.side(), |m, n| {
                (*counts.get(m, n)).min(*spec.capacity.get(m, n)) as f64
            })
        })
        .collect()
}

/// Lowers the agent's problem: dynamics, velocity polygon, occupancy, cost,
/// separation from neighbors, spatial patterns and, when due, the goal.
pub fn assemble_agent_problem(spec: &ProblemSpec) -> Result<(MilpModel, EncodingContext), EncodeError> {
    let side = spec.grid.cells_per_side();
    if spec.capacity.side() != side {
        return Err(EncodeError::GridMismatch {
            expected: side,
            got: spec.capacity.side(),
        });
    }
    let h = spec.effective_horizon();
    let mut model = MilpModel::new();
    let mut ctx = encode_dynamics(&mut model, spec.agent, &spec.x0, spec.t0, h, Some(spec.grid))?;
    encode_velocity_polygon(&mut model, &ctx, spec.agent, spec.sides)?;
    encode_occupancy(&mut model, &mut ctx, spec.grid)?;
    ctx.add_leaf_constants(&neighbor_counts(spec, h))?;

    if h >= 2 {
        if let (Some((d1, d2, mode)), false) = (spec.separation, spec.neighbors.is_empty()) {
            for n in spec.neighbors {
                let samples: Vec<Vec<f64>> = (0..h).map(|t| n.at(t).to_vec()).collect();
                ctx.stack_constants(&samples);
            }
            let sep = build_separation_formula(d1, d2, mode, spec.neighbors.len(), (1, h - 1))?;
            require_stl(&mut model, &mut ctx, &sep, 0)?;
        }
        if let Some(p) = spec.patterns {
            require_spatel(&mut model, &mut ctx, &pattern_formula(p, (1, h - 1))?, 0)?;
        }
        if spec.goal_is_hard() {
            let StlFormula::Eventually(_, _, body) = build_goal_formula(spec.goal, 0)? else {
                unreachable!("goal formula is an eventuality");
            };
            require_stl(&mut model, &mut ctx, &StlFormula::eventually(1, h - 1, *body), 0)?;
        }
    }

    let w = spec.weights;
    if !(0.0..=1.0).contains(&w.alpha) {
        return Err(EncodeError::NegativeWeight);
    }
    if w.alpha > 0.0 {
        let j1 = encode_cost_j1(&mut model, &mut ctx, &w.q, &w.r, w.lambda, spec.t0, &spec.goal_center)?;
        model.add_objective(&(j1 * w.alpha))?;
    }
    if w.alpha < 1.0 {
        let comms: Vec<GridMatrix<f64>> = spec.neighbors.iter().map(|n| n.comm.clone()).collect();
        let j2 = encode_cost_j2(&ctx, spec.capacity, &comms)?;
        model.add_objective(&(j2 * (1.0 - w.alpha)))?;
    }
    Ok((model, ctx))
}

/// Solution values read back through the context's handles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodedPlan {
    pub t0: usize,
    pub states: Vec<[f64; 4]>,
    pub inputs: Vec<[f64; 2]>,
    /// Cell whose occupancy binary is set, per step.
    pub cells: Vec<(usize, usize)>,
}

pub fn decode(ctx: &EncodingContext, x: &[f64]) -> DecodedPlan {
    let read = |v: &VarId| x[v.0];
    DecodedPlan {
        t0: ctx.t0,
        states: ctx.states.iter().map(|s| s.each_ref().map(read)).collect(),
        inputs: ctx.inputs.iter().map(|u| u.each_ref().map(read)).collect(),
        cells: ctx
            .occupancy
            .iter()
            .map(|o| {
                o.cells()
                    .max_by(|a, b| read(o.get(a.0, a.1)).total_cmp(&read(o.get(b.0, b.1))).then(b.cmp(a)))
                    .expect("nonempty grid")
            })
            .collect(),
    }
}

/// Writes the model in LP format to `dir/agent{agent}_period{period}.lp`.
pub fn dump_model(model: &MilpModel, agent: usize, period: usize, dir: &Path) -> std::io::Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(format!("agent{agent}_period{period}.lp"));
    std::fs::write(&path, model.to_lp_string(&format!("agent {agent}, period {period}")))?;
    Ok(path)
}
