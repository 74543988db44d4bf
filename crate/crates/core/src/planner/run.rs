use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::log::{AgentTiming, PeriodRecord, PlanSummary, RunLog, RunOutput, StateRow};
use super::schedule::{assign_priorities, neighbor_set, planning_waves};
use super::{AgentStatus, Mission, PlannerError, WorldState};
use crate::encoder::{assemble_agent_problem, decode, NeighborTrack, ProblemSpec};
use crate::milp::{solve_lp, solve_milp_with, MilpModel, MilpOptions, Sense, SolveStats, SolveStatus};
use crate::qts::agent_comm_matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlanStatus {
    Optimal,
    /// Solved only after dropping the hard goal window.
    GoalDropped,
    /// Every solve failed; zero inputs for the period.
    Hold,
}

/// A broadcast plan. States are the exact rollout of the inputs from the
/// agent's state at `start`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub agent: usize,
    pub start: usize,
    pub states: Vec<[f64; 4]>,
    pub inputs: Vec<[f64; 2]>,
    pub cells: Vec<(usize, usize)>,
    /// `None` for hold plans.
    pub objective: Option<f64>,
    pub status: PlanStatus,
    /// Solver status of each attempt, in order.
    pub attempts: Vec<SolveStatus>,
    pub stats: SolveStats,
}

impl Plan {
    /// Planned states from global step `t` on, holding the last one; empty
    /// if the plan does not reach `t`.
    pub fn states_from(&self, t: usize) -> Vec<[f64; 4]> {
        match t.checked_sub(self.start) {
            Some(k) if k < self.states.len() => self.states[k..].to_vec(),
            _ => Vec::new(),
        }
    }
}

/// Chebyshev center of the polytope `a . p + b <= 0`; `None` when it has no
/// interior or is unbounded.
pub fn goal_center(polytope: &[([f64; 2], f64)]) -> Option<[f64; 2]> {
    const BIG: f64 = 1e7;
    let mut m = MilpModel::new();
    let c1 = m.add_continuous(-BIG, BIG, "c1").ok()?;
    let c2 = m.add_continuous(-BIG, BIG, "c2").ok()?;
    let r = m.add_continuous(0.0, BIG, "r").ok()?;
    for (a, b) in polytope {
        let norm = a[0].hypot(a[1]);
        m.add_constraint([(c1, a[0]), (c2, a[1]), (r, norm)], Sense::Le, -b)
            .ok()?;
    }
    m.add_objective_term(r, -1.0).ok()?;
    let s = solve_lp(&m);
    let radius = s.values.get(r.0).copied().unwrap_or(0.0);
    (s.is_optimal() && radius > 1e-9 && radius < BIG * 0.5).then(|| [s.values[c1.0], s.values[c2.0]])
}

fn rollout(mission: &Mission, x0: [f64; 4], inputs: &[[f64; 2]]) -> Vec<[f64; 4]> {
    let mut states = vec![x0];
    for u in inputs {
        let x = *states.last().expect("nonempty");
        states.push(mission.model.step(&x, u));
    }
    states
}

fn track(mission: &Mission, states: Vec<[f64; 4]>) -> NeighborTrack {
    let p = [states[0][0], states[0][1]];
    NeighborTrack {
        states,
        comm: agent_comm_matrix(p, &mission.grid, &mission.comm),
    }
}

/// Tracks of the neighbors that enter agent `id`'s problem this period.
fn neighbor_tracks(
    mission: &Mission,
    world: &WorldState,
    neighbors: &[usize],
    fresh: &BTreeMap<usize, Plan>,
) -> (Vec<usize>, Vec<NeighborTrack>) {
    let mut used = Vec::new();
    let mut tracks = Vec::new();
    for &j in neighbors {
        let Some(idx) = world.index_of(j) else { continue };
        let a = &world.agents[idx];
        let states = if a.status == AgentStatus::Arrived {
            vec![a.x]
        } else if let Some(p) = fresh.get(&j) {
            p.states.clone()
        } else if mission.params.ignore_stale {
            continue;
        } else {
            let s = a.plan.as_ref().map(|p| p.states_from(world.t)).unwrap_or_default();
            if s.is_empty() {
                vec![a.x]
            } else {
                s
            }
        };
        used.push(j);
        tracks.push(track(mission, states));
    }
    (used, tracks)
}

/// Solves agent `id`'s problem for the current period against the given
/// neighbors, with the fallback chain: full problem, then without the hard
/// goal, then a zero-input hold.
pub fn plan_agent(
    mission: &Mission,
    world: &WorldState,
    id: usize,
    neighbors: &[usize],
    fresh: &BTreeMap<usize, Plan>,
) -> Result<(PlanSummary, Duration), PlannerError> {
    let started = Instant::now();
    let idx = world.index_of(id).expect("planned agent exists");
    let spec_agent = &mission.agents[mission.agents.iter().position(|a| a.id == id).expect("agent spec")];
    let center = goal_center(&spec_agent.goal).ok_or(PlannerError::EmptyGoal(id))?;
    let (used, tracks) = neighbor_tracks(mission, world, neighbors, fresh);
    let p = &mission.params;
    let x0 = world.agents[idx].x;
    let mut spec = ProblemSpec {
        agent: &mission.model,
        x0,
        t0: world.t,
        horizon: p.horizon,
        deadline: p.deadline,
        grid: &mission.grid,
        capacity: &mission.capacity,
        patterns: Some(&mission.patterns),
        goal: &spec_agent.goal,
        goal_center: center,
        neighbors: &tracks,
        weights: p.weights,
        separation: Some((p.d1, p.d2, p.separation_mode)),
        sides: p.sides,
        hard_goal: true,
    };
    let opts = MilpOptions {
        node_limit: p.node_limit,
        ..MilpOptions::default()
    };
    let mut attempts = Vec::new();
    let mut stats = SolveStats::default();
    let mut result = None;
    for hard in [true, false] {
        if !hard && !spec.goal_is_hard() {
            break;
        }
        spec.hard_goal = hard;
        let (model, ctx) =
            assemble_agent_problem(&spec).map_err(|source| PlannerError::Encode { agent: id, source })?;
        let sol = solve_milp_with(&model, &opts);
        attempts.push(sol.status);
        stats.nodes += sol.stats.nodes;
        stats.simplex_iterations += sol.stats.simplex_iterations;
        if sol.is_optimal() {
            let status = if hard {
                PlanStatus::Optimal
            } else {
                PlanStatus::GoalDropped
            };
            result = Some((decode(&ctx, &sol.values).inputs, Some(sol.objective), status));
            break;
        }
    }
    let h = spec.effective_horizon();
    let (inputs, objective, status) = result.unwrap_or_else(|| (vec![[0.0; 2]; h - 1], None, PlanStatus::Hold));
    let u_max = mission.model.u_max;
    let inputs: Vec<[f64; 2]> = inputs.iter().map(|u| u.map(|c| c.clamp(-u_max, u_max))).collect();
    let states = rollout(mission, x0, &inputs);
    let cells = states.iter().map(|x| mission.grid.cell_of([x[0], x[1]])).collect();
    let plan = Plan {
        agent: id,
        start: world.t,
        states,
        inputs,
        cells,
        objective,
        status,
        attempts,
        stats,
    };
    Ok((
        PlanSummary {
            agent: id,
            plan,
            neighbors_used: used,
        },
        started.elapsed(),
    ))
}

/// Applies each active agent's first planned input (zero without a plan),
/// advances the clock and retires agents that entered their goal.
pub fn step_world(mission: &Mission, world: &mut WorldState, plans: &BTreeMap<usize, Plan>) {
    for a in world.agents.iter_mut().filter(|a| a.status == AgentStatus::Active) {
        let plan = plans.get(&a.id);
        let u = plan.and_then(|p| p.inputs.first().copied()).unwrap_or([0.0; 2]);
        a.x = mission.model.step(&a.x, &u);
        if let Some(p) = plan {
            a.plan = Some(p.clone());
        }
        let spec = mission.agents.iter().find(|s| s.id == a.id).expect("agent spec");
        if spec.in_goal([a.x[0], a.x[1]]) {
            a.status = AgentStatus::Arrived;
            a.x[2] = 0.0;
            a.x[3] = 0.0;
        }
    }
    world.t += 1;
}

fn validate(mission: &Mission) -> Result<(), PlannerError> {
    let mut seen = BTreeSet::new();
    for a in &mission.agents {
        if !seen.insert(a.id) {
            return Err(PlannerError::DuplicateId(a.id));
        }
        if goal_center(&a.goal).is_none() {
            return Err(PlannerError::EmptyGoal(a.id));
        }
    }
    Ok(())
}

fn state_rows(mission: &Mission, world: &WorldState, plans: &BTreeMap<usize, Plan>) -> Vec<StateRow> {
    world
        .agents
        .iter()
        .map(|a| {
            let u = match a.status {
                AgentStatus::Active => plans
                    .get(&a.id)
                    .and_then(|p| p.inputs.first().copied())
                    .unwrap_or([0.0; 2]),
                AgentStatus::Arrived => [0.0; 2],
            };
            let (m, n) = mission.grid.cell_of([a.x[0], a.x[1]]);
            StateRow {
                step: world.t,
                agent: a.id,
                p1: a.x[0],
                p2: a.x[1],
                v1: a.x[2],
                v2: a.x[3],
                u1: u[0],
                u2: u[1],
                cell_m: m,
                cell_n: n,
                status: a.status,
            }
        })
        .collect()
}

/// Runs the planning loop until every agent arrived or the deadline is reached.
pub fn run(mission: &Mission) -> Result<RunOutput, PlannerError> {
    validate(mission)?;
    let p = &mission.params;
    let mut world = WorldState::new(mission);
    let mut periods = Vec::new();
    let mut table = Vec::new();
    let mut timings = Vec::new();
    let mut arrivals: Vec<Option<usize>> = world
        .agents
        .iter()
        .map(|a| (a.status == AgentStatus::Arrived).then_some(0))
        .collect();

    while world.active().next().is_some() && world.t < p.deadline {
        let priorities = assign_priorities(&mut world);
        let neighbors: BTreeMap<usize, Vec<usize>> = priorities
            .iter()
            .map(|&id| (id, neighbor_set(&world, id, p.neighbor_radius)))
            .collect();
        let mut fresh: BTreeMap<usize, Plan> = BTreeMap::new();
        let mut summaries: BTreeMap<usize, PlanSummary> = BTreeMap::new();
        let waves = if p.parallel {
            planning_waves(&priorities, &neighbors)
        } else {
            priorities.iter().map(|&id| vec![id]).collect()
        };
        for wave in waves {
            let results: Vec<Result<(PlanSummary, Duration), PlannerError>> = if wave.len() == 1 {
                vec![plan_agent(mission, &world, wave[0], &neighbors[&wave[0]], &fresh)]
            } else {
                std::thread::scope(|s| {
                    let handles: Vec<_> = wave
                        .iter()
                        .map(|&id| {
                            let (w, f, nb) = (&world, &fresh, &neighbors[&id]);
                            s.spawn(move || plan_agent(mission, w, id, nb, f))
                        })
                        .collect();
                    handles.into_iter().map(|h| h.join().expect("planner thread")).collect()
                })
            };
            for r in results {
                let (summary, elapsed) = r?;
                timings.push(AgentTiming {
                    t: world.t,
                    agent: summary.agent,
                    seconds: elapsed.as_secs_f64(),
                });
                fresh.insert(summary.agent, summary.plan.clone());
                summaries.insert(summary.agent, summary);
            }
        }
        let mut edges = BTreeSet::new();
        for (&i, js) in &neighbors {
            for &j in js {
                if neighbors.contains_key(&j) {
                    edges.insert((i.min(j), i.max(j)));
                }
            }
        }
        let positions: Vec<[f64; 2]> = world.agents.iter().map(|a| [a.x[0], a.x[1]]).collect();
        periods.push(PeriodRecord {
            t: world.t,
            assembly_order: priorities.clone(),
            plans: priorities.iter().map(|id| summaries[id].clone()).collect(),
            priorities,
            neighbor_edges: edges.into_iter().collect(),
            occupancy: mission.grid.occupancy_counts(&positions).rows(),
        });
        table.extend(state_rows(mission, &world, &fresh));
        step_world(mission, &mut world, &fresh);
        for (k, a) in world.agents.iter().enumerate() {
            if a.status == AgentStatus::Arrived && arrivals[k].is_none() {
                arrivals[k] = Some(world.t);
            }
        }
    }
    table.extend(state_rows(mission, &world, &BTreeMap::new()));
    let complete = arrivals.iter().all(Option::is_some);
    Ok(RunOutput {
        log: RunLog {
            seed: p.seed,
            horizon: p.horizon,
            deadline: p.deadline,
            grid: mission.grid,
            capacity: mission.capacity.rows(),
            goals: mission.agents.iter().map(|a| a.goal.clone()).collect(),
            stations: Vec::new(),
            agents: world.agents.iter().map(|a| a.id).collect(),
            periods,
            table,
            arrivals,
            final_step: world.t,
            complete,
        },
        timings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::AgentModel;
    use crate::planner::{AgentSpec, PlannerParams};
    use crate::qts::{generate_patterns, Grid, GridMatrix, PathLossParams};

    fn square(c: [f64; 2], h: f64) -> Vec<([f64; 2], f64)> {
        vec![
            ([1.0, 0.0], -(c[0] + h)),
            ([-1.0, 0.0], c[0] - h),
            ([0.0, 1.0], -(c[1] + h)),
            ([0.0, -1.0], c[1] - h),
        ]
    }

    /// 80 m square, 4x4 cells of 20 m.
    fn mission(cap: u32, agents: Vec<AgentSpec>, params: PlannerParams) -> Mission {
        let capacity = GridMatrix::filled(4, cap);
        Mission {
            grid: Grid::new([0.0, 0.0], 80.0, 2).unwrap(),
            patterns: generate_patterns(&capacity).unwrap(),
            capacity,
            model: AgentModel::double_integrator(2.0, 8.0).unwrap(),
            comm: PathLossParams::default(),
            agents,
            params,
        }
    }

    fn agent(id: usize, p: [f64; 2], goal: [f64; 2]) -> AgentSpec {
        AgentSpec {
            id,
            x0: [p[0], p[1], 0.0, 0.0],
            goal: square(goal, 5.0),
        }
    }

    fn params(deadline: usize) -> PlannerParams {
        PlannerParams {
            deadline,
            seed: 3,
            ..PlannerParams::default()
        }
    }

    #[test]
    fn solo_closes_in_monotonically() {
        let m = mission(2, vec![agent(0, [10.0, 70.0], [70.0, 10.0])], params(40));
        let out = run(&m).unwrap();
        assert!(out.log.complete, "arrivals {:?}", out.log.arrivals);
        let dist: Vec<f64> = out
            .log
            .rows_of(0)
            .iter()
            .map(|r| (r.p1 - 70.0).abs() + (r.p2 - 10.0).abs())
            .collect();
        for w in dist.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "{dist:?}");
        }
    }

    #[test]
    fn full_goal_cell_keeps_the_agent_outside() {
        // agent 1 is parked (already arrived) in the capacity-1 cell agent 0 wants
        let m = mission(
            1,
            vec![agent(0, [50.0, 50.0], [12.0, 68.0]), agent(1, [6.0, 74.0], [6.0, 74.0])],
            PlannerParams {
                neighbor_radius: 200.0,
                ..params(20)
            },
        );
        let out = run(&m).unwrap();
        assert_eq!(out.log.arrivals, vec![None, Some(0)]);
        assert!(out.log.rows_of(0).iter().all(|r| (r.cell_m, r.cell_n) != (0, 0)));
        // it still closes in on the goal from outside
        let last = out.log.rows_of(0).last().copied().unwrap();
        assert!(last.p1 < 40.0 && last.p2 > 40.0, "{last:?}");
    }

    #[test]
    fn empty_mission_terminates_at_once() {
        let out = run(&mission(1, Vec::new(), params(50))).unwrap();
        assert_eq!(out.log.final_step, 0);
        assert!(out.log.periods.is_empty() && out.log.table.is_empty());
        assert!(out.log.complete);
    }

    #[test]
    fn deadline_leaves_run_incomplete() {
        let out = run(&mission(2, vec![agent(0, [10.0, 70.0], [70.0, 10.0])], params(3))).unwrap();
        assert_eq!(out.log.final_step, 3);
        assert!(!out.log.complete);
        assert_eq!(out.log.arrivals, vec![None]);
    }

    fn four_corners(parallel: bool, radius: f64) -> Mission {
        mission(
            2,
            vec![
                agent(0, [10.0, 70.0], [70.0, 10.0]),
                agent(1, [70.0, 70.0], [10.0, 10.0]),
                agent(2, [10.0, 10.0], [70.0, 70.0]),
                agent(3, [70.0, 10.0], [10.0, 70.0]),
            ],
            PlannerParams {
                neighbor_radius: radius,
                parallel,
                ..params(30)
            },
        )
    }

    #[test]
    fn repeated_runs_are_identical() {
        let m = four_corners(false, 40.0);
        assert_eq!(run(&m).unwrap().log.to_json(), run(&m).unwrap().log.to_json());
    }

    #[test]
    fn parallel_waves_match_sequential_order() {
        for radius in [15.0, 40.0] {
            let seq = run(&four_corners(false, radius)).unwrap().log;
            let par = run(&four_corners(true, radius)).unwrap().log;
            assert_eq!(seq.to_json(), par.to_json(), "radius {radius}");
        }
    }

    #[test]
    fn realized_states_follow_the_dynamics() {
        let m = four_corners(false, 40.0);
        let log = run(&m).unwrap().log;
        for &id in &log.agents {
            let rows = log.rows_of(id);
            for w in rows.windows(2) {
                let (a, b) = (w[0], w[1]);
                if a.status == AgentStatus::Arrived {
                    continue;
                }
                let mut next = m.model.step(&[a.p1, a.p2, a.v1, a.v2], &[a.u1, a.u2]);
                if b.status == AgentStatus::Arrived {
                    next[2] = 0.0;
                    next[3] = 0.0;
                }
                let got = [b.p1, b.p2, b.v1, b.v2];
                for k in 0..4 {
                    assert!(
                        (next[k] - got[k]).abs() <= 1e-9,
                        "agent {id} step {}: {next:?} vs {got:?}",
                        b.step
                    );
                }
            }
        }
        for p in log.periods.iter().flat_map(|p| &p.plans) {
            let x0 = log
                .rows_of(p.agent)
                .iter()
                .find(|r| r.step == p.plan.start)
                .map(|r| [r.p1, r.p2, r.v1, r.v2]);
            assert_eq!(Some(p.plan.states[0]), x0);
            assert_eq!(p.plan.states.len(), p.plan.inputs.len() + 1);
        }
    }

    #[test]
    fn higher_priority_neighbors_assemble_first() {
        let log = run(&four_corners(false, 40.0)).unwrap().log;
        for period in &log.periods {
            let pos = |id: usize| period.assembly_order.iter().position(|&a| a == id).unwrap();
            let rank = |id: usize| period.priorities.iter().position(|&a| a == id).unwrap();
            for &(i, j) in &period.neighbor_edges {
                assert_eq!(rank(i) < rank(j), pos(i) < pos(j));
            }
            assert_eq!(period.plans.len(), period.priorities.len());
        }
    }

    #[test]
    fn zero_input_step_coasts() {
        let m = mission(
            2,
            vec![AgentSpec {
                id: 0,
                x0: [10.0, 10.0, 3.0, -1.5],
                goal: square([70.0, 70.0], 5.0),
            }],
            params(10),
        );
        let mut w = WorldState::new(&m);
        step_world(&m, &mut w, &BTreeMap::new());
        assert_eq!(w.t, 1);
        assert_eq!(w.agents[0].x, [13.0, 8.5, 3.0, -1.5]);
        assert_eq!(w.agents[0].status, AgentStatus::Active);
    }

    #[test]
    fn entering_the_goal_retires_the_agent() {
        let m = mission(
            2,
            vec![AgentSpec {
                id: 0,
                x0: [60.0, 70.0, 8.0, 0.0],
                goal: square([70.0, 70.0], 5.0),
            }],
            params(10),
        );
        let mut w = WorldState::new(&m);
        step_world(&m, &mut w, &BTreeMap::new());
        assert_eq!(w.agents[0].status, AgentStatus::Arrived);
        assert_eq!(w.agents[0].x, [68.0, 70.0, 0.0, 0.0]);
    }

    #[test]
    fn chebyshev_center_of_a_box() {
        let c = goal_center(&square([30.0, -4.0], 2.0)).unwrap();
        assert!((c[0] - 30.0).abs() < 1e-9 && (c[1] + 4.0).abs() < 1e-9);
        // empty: p1 < 0 and p1 > 1
        assert_eq!(goal_center(&[([1.0, 0.0], 0.0), ([-1.0, 0.0], 1.0)]), None);
        // unbounded half-plane
        assert_eq!(goal_center(&[([1.0, 0.0], 0.0)]), None);
    }
}
