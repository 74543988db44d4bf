use serde::{Deserialize, Serialize};

use super::{CliError, Scenario};
use crate::logic::{build_goal_formula, build_separation_formula, eval_stl, Signal, StlFormula};
use crate::planner::{AgentStatus, PlanStatus, RunLog, StateRow};
use crate::qts::{agent_comm_matrix, build_qts, eval_spatel, eval_tssl, failing_node, QtsTrace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentVerdict {
    pub id: usize,
    /// Reaches its goal by the deadline.
    pub reach: bool,
    /// Keeps the separation distances to every other agent throughout.
    pub separation: bool,
    pub arrived_at: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternViolation {
    pub step: usize,
    /// Index of the failing pattern, 0 being the obstacle pattern.
    pub pattern: usize,
    /// Quadtree node `(level, row, col)` where it fails.
    pub node: (u32, usize, usize),
}

/// Solver effort over the run. Wall times live in the separate timing file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveSummary {
    pub periods: usize,
    pub agent_periods: usize,
    pub goal_dropped: usize,
    pub holds: usize,
    pub total_nodes: usize,
    pub total_simplex_iterations: usize,
    pub median_nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub scenario: String,
    pub seed: u64,
    pub agents: Vec<AgentVerdict>,
    /// Global pattern verdict over the whole trace.
    pub patterns: bool,
    pub first_violation: Option<PatternViolation>,
    pub solve: SolveSummary,
    /// Per step of `[0, T_f]`, sum over agents of the base-station quality of
    /// their cell (final states held after the last simulated step).
    pub base_quality: Vec<u32>,
    /// Per step, sum over agents of `C + sum_j C'_j` at their cell.
    pub comm_quality: Vec<f64>,
    pub mean_base_quality: f64,
    /// Mean base-station quality over agent-steps taken before arrival.
    pub mean_transit_quality: f64,
    pub all_verdicts: bool,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn summary(&self) -> String {
        let reach = self.agents.iter().filter(|a| a.reach).count();
        let sep = self.agents.iter().filter(|a| a.separation).count();
        format!(
            "{}: reach {}/{}, separation {}/{}, patterns {}, mean base quality {:.3} (transit {:.3}) -> {}",
            self.scenario,
            reach,
            self.agents.len(),
            sep,
            self.agents.len(),
            self.patterns,
            self.mean_base_quality,
            self.mean_transit_quality,
            if self.all_verdicts { "PASS" } else { "FAIL" }
        )
    }
}

/// Rows `step x agent`, checked for completeness against the scenario.
fn state_grid<'a>(log: &'a RunLog, sc: &Scenario) -> Result<Vec<Vec<&'a StateRow>>, CliError> {
    let ids: Vec<usize> = sc.agents.iter().map(|a| a.id).collect();
    if log.agents != ids {
        return Err(CliError::Mismatch(format!(
            "log agents {:?} vs scenario agents {:?}",
            log.agents, ids
        )));
    }
    if log.deadline != sc.params.deadline {
        return Err(CliError::Mismatch(format!(
            "log deadline {} vs scenario deadline {}",
            log.deadline, sc.params.deadline
        )));
    }
    (0..=log.final_step)
        .map(|t| {
            let rows = log.rows_at(t);
            if rows.len() != ids.len() || rows.iter().zip(&ids).any(|(r, id)| r.agent != *id) {
                Err(CliError::Mismatch(format!("log is missing rows at step {t}")))
            } else {
                Ok(rows)
            }
        })
        .collect()
}

/// Independent verification of a run log against its scenario, using only
/// the temporal and spatial monitors on the logged states.
pub fn verify(log: &RunLog, sc: &Scenario) -> Result<Report, CliError> {
    let rows = state_grid(log, sc)?;
    let grid = sc.grid()?;
    let cap = sc.capacity_matrix()?;
    let mission = sc.mission()?;
    let pp = &sc.params;
    let tf = pp.deadline;
    // hold the final state up to the deadline
    let at = |t: usize| &rows[t.min(rows.len() - 1)];
    let n = sc.agents.len();

    let mut agents = Vec::new();
    for (i, a) in sc.agents.iter().enumerate() {
        let goal = build_goal_formula(&a.goal.polytope(), tf)?;
        let own: Vec<Vec<f64>> = (0..=tf)
            .map(|t| {
                let r = at(t)[i];
                vec![r.p1, r.p2, r.v1, r.v2]
            })
            .collect();
        let reach = eval_stl(&goal, &Signal::new(own.clone())?, 0)?;
        let separation = if n > 1 {
            let sep = build_separation_formula(pp.d1, pp.d2, pp.separation_mode, n - 1, (0, tf))?;
            let stacked: Vec<Vec<f64>> = (0..=tf)
                .map(|t| {
                    let mut s = own[t].clone();
                    for (j, r) in at(t).iter().enumerate() {
                        if j != i {
                            s.extend([r.p1, r.p2, r.v1, r.v2]);
                        }
                    }
                    s
                })
                .collect();
            eval_stl(&sep, &Signal::new(stacked)?, 0)?
        } else {
            true
        };
        agents.push(AgentVerdict {
            id: a.id,
            reach,
            separation,
            arrived_at: log.arrivals.get(i).copied().flatten(),
        });
    }

    let counts: Vec<_> = (0..=tf)
        .map(|t| grid.occupancy_counts(&at(t).iter().map(|r| [r.p1, r.p2]).collect::<Vec<_>>()))
        .collect();
    let snapshots = counts
        .iter()
        .map(|c| build_qts(&c.to_f64()))
        .collect::<Result<Vec<_>, _>>()?;
    let trace = QtsTrace::new(snapshots)?;
    let phi = StlFormula::always(0, tf, StlFormula::SpatialAtom(mission.patterns.conjunction()));
    let patterns = eval_spatel(&phi, &trace, 0)?;
    let first_violation = (!patterns)
        .then(|| {
            (0..trace.len()).find_map(|t| {
                let q = trace.at(t);
                mission.patterns.psi.iter().enumerate().find_map(|(k, psi)| {
                    (!eval_tssl(psi, q, q.root())).then(|| {
                        let v = failing_node(psi, q, q.root()).unwrap_or(q.root());
                        PatternViolation {
                            step: t,
                            pattern: k,
                            node: (v.level, v.row, v.col),
                        }
                    })
                })
            })
        })
        .flatten();

    let cap_f = cap.to_f64();
    let mut base_quality = Vec::new();
    let mut comm_quality = Vec::new();
    let (mut transit_sum, mut transit_n) = (0u64, 0usize);
    for step_rows in &rows {
        for r in step_rows.iter().filter(|r| r.status == AgentStatus::Active) {
            transit_sum += *cap.get(r.cell_m, r.cell_n) as u64;
            transit_n += 1;
        }
    }
    for t in 0..=tf {
        let step_rows = at(t);
        let cells: Vec<(usize, usize)> = step_rows.iter().map(|r| grid.cell_of([r.p1, r.p2])).collect();
        base_quality.push(cells.iter().map(|&(m, c)| *cap.get(m, c)).sum());
        let comm: Vec<_> = step_rows
            .iter()
            .map(|r| agent_comm_matrix([r.p1, r.p2], &grid, &sc.path_loss))
            .collect();
        let total: f64 = cells
            .iter()
            .enumerate()
            .map(|(i, &(m, c))| {
                *cap_f.get(m, c)
                    + comm
                        .iter()
                        .enumerate()
                        .filter(|(j, _)| *j != i)
                        .map(|(_, cj)| *cj.get(m, c))
                        .sum::<f64>()
            })
            .sum();
        comm_quality.push(total);
    }
    let mean_base_quality = base_quality.iter().map(|&q| q as f64).sum::<f64>() / base_quality.len() as f64;
    let mean_transit_quality = if transit_n == 0 {
        0.0
    } else {
        transit_sum as f64 / transit_n as f64
    };

    let mut solve = SolveSummary {
        periods: log.periods.len(),
        ..SolveSummary::default()
    };
    let mut nodes = Vec::new();
    for p in log.periods.iter().flat_map(|p| &p.plans) {
        solve.agent_periods += 1;
        solve.total_nodes += p.plan.stats.nodes;
        solve.total_simplex_iterations += p.plan.stats.simplex_iterations;
        nodes.push(p.plan.stats.nodes);
        match p.plan.status {
            PlanStatus::GoalDropped => solve.goal_dropped += 1,
            PlanStatus::Hold => solve.holds += 1,
            PlanStatus::Optimal => {}
        }
    }
    nodes.sort_unstable();
    solve.median_nodes = nodes.get(nodes.len() / 2).copied().unwrap_or(0);

    let all_verdicts = patterns && agents.iter().all(|a| a.reach && a.separation);
    Ok(Report {
        scenario: sc.name.clone(),
        seed: log.seed,
        agents,
        patterns,
        first_violation,
        solve,
        base_quality,
        comm_quality,
        mean_base_quality,
        mean_transit_quality,
        all_verdicts,
    })
}
