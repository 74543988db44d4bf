use serde::{Deserialize, Serialize};

use super::{AgentStatus, Plan};
use crate::qts::{Grid, OccupancyCounts};

/// One row of the flat state table: the agent's state at `step` and the
/// input it applied from there (zero once arrived and at the final step).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateRow {
    pub step: usize,
    pub agent: usize,
    pub p1: f64,
    pub p2: f64,
    pub v1: f64,
    pub v2: f64,
    pub u1: f64,
    pub u2: f64,
    #[serde(rename = "cell-m")]
    pub cell_m: usize,
    #[serde(rename = "cell-n")]
    pub cell_n: usize,
    pub status: AgentStatus,
}

/// Compact per-agent view of a period's plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanSummary {
    pub agent: usize,
    pub plan: Plan,
    /// Neighbors whose tracks entered the problem.
    pub neighbors_used: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodRecord {
    pub t: usize,
    /// Active agent ids, highest priority first.
    pub priorities: Vec<usize>,
    /// Undirected neighbor edges `(i, j)` with `i < j` among planned agents.
    pub neighbor_edges: Vec<(usize, usize)>,
    /// Order in which problems were assembled (equal to the priority order).
    pub assembly_order: Vec<usize>,
    pub plans: Vec<PlanSummary>,
    /// Agent counts per cell at `t`, north row first.
    pub occupancy: Vec<Vec<u32>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLog {
    pub seed: u64,
    pub horizon: usize,
    pub deadline: usize,
    pub grid: Grid,
    /// Capacity matrix, north row first.
    pub capacity: Vec<Vec<u32>>,
    /// Goal polytope of each agent, scenario order.
    pub goals: Vec<Vec<([f64; 2], f64)>>,
    /// Base stations, for plotting only.
    #[serde(default)]
    pub stations: Vec<[f64; 2]>,
    /// Agent ids in scenario order.
    pub agents: Vec<usize>,
    pub periods: Vec<PeriodRecord>,
    pub table: Vec<StateRow>,
    /// Step at which each agent (scenario order) arrived, if it did.
    pub arrivals: Vec<Option<usize>>,
    /// Last simulated step.
    pub final_step: usize,
    /// Every agent arrived.
    pub complete: bool,
}

impl RunLog {
    /// Rows of one step, in scenario agent order.
    pub fn rows_at(&self, step: usize) -> Vec<&StateRow> {
        let mut rows: Vec<&StateRow> = self.table.iter().filter(|r| r.step == step).collect();
        rows.sort_by_key(|r| self.agents.iter().position(|&a| a == r.agent));
        rows
    }

    /// One agent's rows, by step.
    pub fn rows_of(&self, agent: usize) -> Vec<&StateRow> {
        let mut rows: Vec<&StateRow> = self.table.iter().filter(|r| r.agent == agent).collect();
        rows.sort_by_key(|r| r.step);
        rows
    }

    pub fn positions_at(&self, step: usize) -> Vec<[f64; 2]> {
        self.rows_at(step).iter().map(|r| [r.p1, r.p2]).collect()
    }

    pub fn occupancy_at(&self, step: usize, g: &Grid) -> OccupancyCounts {
        g.occupancy_counts(&self.positions_at(step))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("log serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }

    /// The state table as CSV, header included.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.table {
            w.serialize(row).expect("in-memory csv write");
        }
        String::from_utf8(w.into_inner().expect("flush to memory")).expect("csv is utf-8")
    }
}

/// Wall time of one agent-period solve (kept out of the log for determinism).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentTiming {
    pub t: usize,
    pub agent: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub log: RunLog,
    pub timings: Vec<AgentTiming>,
}

impl RunOutput {
    pub fn median_solve_seconds(&self) -> Option<f64> {
        let mut s: Vec<f64> = self.timings.iter().map(|t| t.seconds).collect();
        if s.is_empty() {
            return None;
        }
        s.sort_by(f64::total_cmp);
        let n = s.len();
        Some(if n % 2 == 1 {
            s[n / 2]
        } else {
            0.5 * (s[n / 2 - 1] + s[n / 2])
        })
    }
}
