//! Distributed receding-horizon loop.
//!
//! Every period the active agents get a fresh random priority order. Each
//! agent plans against its neighbors: higher-priority neighbors through the
//! plans they just broadcast, lower-priority ones through their previous
//! plans shifted by one step (or not at all, see
//! [`PlannerParams::ignore_stale`]). All agents then execute their first
//! input, and agents strictly inside their goal retire.

mod log;
mod run;
mod schedule;

pub use log::{AgentTiming, PeriodRecord, PlanSummary, RunLog, RunOutput, StateRow};
pub use run::{goal_center, plan_agent, run, step_world, Plan, PlanStatus};
pub use schedule::{assign_priorities, neighbor_set, planning_waves};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoder::{AgentModel, CostWeights, EncodeError};
use crate::logic::SeparationMode;
use crate::qts::{CapacityMatrix, Grid, PathLossParams, Patterns};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlannerError {
    #[error("agent {agent}: {source}")]
    Encode {
        agent: usize,
        #[source]
        source: EncodeError,
    },
    #[error("agent {0} has an empty goal polytope")]
    EmptyGoal(usize),
    #[error("duplicate agent id {0}")]
    DuplicateId(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentStatus {
    Active,
    Arrived,
}

/// Static description of one agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSpec {
    pub id: usize,
    pub x0: [f64; 4],
    /// Rows `(a, b)` of the goal polytope; inside means `a . p + b < 0`.
    pub goal: Vec<([f64; 2], f64)>,
}

impl AgentSpec {
    pub fn in_goal(&self, p: [f64; 2]) -> bool {
        self.goal.iter().all(|(a, b)| a[0] * p[0] + a[1] * p[1] + b < 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerParams {
    pub horizon: usize,
    pub sides: usize,
    pub deadline: usize,
    pub weights: CostWeights,
    pub d1: f64,
    pub d2: f64,
    pub separation_mode: SeparationMode,
    pub neighbor_radius: f64,
    pub seed: u64,
    pub node_limit: usize,
    /// Leave lower-priority neighbors out instead of using their stale plans.
    pub ignore_stale: bool,
    /// Solve independent agents of a period on separate threads.
    pub parallel: bool,
}

impl Default for PlannerParams {
    fn default() -> Self {
        PlannerParams {
            horizon: 5,
            sides: 8,
            deadline: 50,
            weights: CostWeights::default(),
            d1: 1.0,
            d2: 1.0,
            separation_mode: SeparationMode::Disjunctive,
            neighbor_radius: 40.0,
            seed: 0,
            node_limit: 100_000,
            ignore_stale: false,
            parallel: false,
        }
    }
}

/// Everything the loop needs that does not change during a run.
#[derive(Debug, Clone)]
pub struct Mission {
    pub grid: Grid,
    pub capacity: CapacityMatrix,
    pub patterns: Patterns,
    pub model: AgentModel,
    pub comm: PathLossParams,
    pub agents: Vec<AgentSpec>,
    pub params: PlannerParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub id: usize,
    pub x: [f64; 4],
    pub status: AgentStatus,
    /// Last broadcast plan.
    pub plan: Option<Plan>,
}

/// Global step, agent states and the priority generator.
#[derive(Debug, Clone)]
pub struct WorldState {
    pub t: usize,
    pub agents: Vec<AgentState>,
    pub rng: ChaCha8Rng,
}

impl WorldState {
    /// Agents start active unless they already sit inside their goal.
    pub fn new(mission: &Mission) -> Self {
        WorldState {
            t: 0,
            agents: mission
                .agents
                .iter()
                .map(|a| AgentState {
                    id: a.id,
                    x: a.x0,
                    status: if a.in_goal([a.x0[0], a.x0[1]]) {
                        AgentStatus::Arrived
                    } else {
                        AgentStatus::Active
                    },
                    plan: None,
                })
                .collect(),
            rng: ChaCha8Rng::seed_from_u64(mission.params.seed),
        }
    }

    pub fn active(&self) -> impl Iterator<Item = &AgentState> {
        self.agents.iter().filter(|a| a.status == AgentStatus::Active)
    }

    pub fn index_of(&self, id: usize) -> Option<usize> {
        self.agents.iter().position(|a| a.id == id)
    }

    pub fn position(&self, idx: usize) -> [f64; 2] {
        let x = self.agents[idx].x;
        [x[0], x[1]]
    }
}
