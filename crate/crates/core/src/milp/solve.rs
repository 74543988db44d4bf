use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::simplex::{Basis, Lp, LpStatus, Simplex, FEAS_TOL};
use super::{MilpModel, Sense, VarKind};

pub const INT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// Node or simplex iteration cap hit; `values` holds the incumbent if any.
    NodeLimit,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub nodes: usize,
    pub simplex_iterations: usize,
    #[serde(skip)]
    pub wall_time: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub status: SolveStatus,
    /// One value per model variable; empty when no feasible point is known.
    pub values: Vec<f64>,
    pub objective: f64,
    /// Row multipliers of the final LP basis (`solve_lp` only, optimal only).
    pub duals: Option<Vec<f64>>,
    pub stats: SolveStats,
}

impl Solution {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    /// Same status, values, objective, duals and counters; wall time ignored.
    pub fn same_outcome(&self, other: &Solution) -> bool {
        self.status == other.status
            && self.values == other.values
            && self.objective.to_bits() == other.objective.to_bits()
            && self.duals == other.duals
            && self.stats.nodes == other.stats.nodes
            && self.stats.simplex_iterations == other.stats.simplex_iterations
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MilpOptions {
    pub node_limit: usize,
    /// Absolute optimality gap for pruning.
    pub gap: f64,
}

impl Default for MilpOptions {
    fn default() -> Self {
        MilpOptions {
            node_limit: 1_000_000,
            gap: 1e-6,
        }
    }
}

/// Model with fixed variables substituted out and empty rows dropped.
struct Presolved {
    lp: Lp,
    /// Original variable of each LP column.
    cols: Vec<usize>,
    /// Original constraint of each LP row.
    rows: Vec<usize>,
    binary: Vec<bool>,
    /// Values of the removed (fixed) variables, by original index.
    fixed: Vec<Option<f64>>,
}

fn presolve(model: &MilpModel) -> Option<Presolved> {
    if model.vars.iter().any(|v| v.lb > v.ub) {
        return None;
    }
    let fixed: Vec<Option<f64>> = model.vars.iter().map(|v| (v.lb == v.ub).then_some(v.lb)).collect();
    let mut col_of = vec![usize::MAX; model.vars.len()];
    let mut cols = Vec::new();
    for (i, f) in fixed.iter().enumerate() {
        if f.is_none() {
            col_of[i] = cols.len();
            cols.push(i);
        }
    }
    let n = cols.len();
    let mut a = Vec::new();
    let mut rows = Vec::new();
    let mut row_lb = Vec::new();
    let mut row_ub = Vec::new();
    for (ci, c) in model.constraints.iter().enumerate() {
        let mut rhs = c.rhs;
        let mut dense = vec![0.0; n];
        let mut empty = true;
        for &(v, coef) in &c.coeffs {
            match fixed[v.0] {
                Some(val) => rhs -= coef * val,
                None => {
                    dense[col_of[v.0]] += coef;
                    empty = false;
                }
            }
        }
        if empty {
            if !c.sense.holds(0.0, rhs, FEAS_TOL) {
                return None;
            }
            continue;
        }
        // A x + s = 0 with s = -(A x)
        let (l, u) = match c.sense {
            Sense::Le => (-rhs, f64::INFINITY),
            Sense::Ge => (f64::NEG_INFINITY, -rhs),
            Sense::Eq => (-rhs, -rhs),
        };
        a.extend(dense);
        rows.push(ci);
        row_lb.push(l);
        row_ub.push(u);
    }
    let obj = model.objective.normalized();
    let mut cost = vec![0.0; n];
    for &(v, c) in &obj.terms {
        if fixed[v.0].is_none() {
            cost[col_of[v.0]] += c;
        }
    }
    let lb = cols.iter().map(|&i| model.vars[i].lb).chain(row_lb).collect();
    let ub = cols.iter().map(|&i| model.vars[i].ub).chain(row_ub).collect();
    let binary = cols.iter().map(|&i| model.vars[i].kind == VarKind::Binary).collect();
    Some(Presolved {
        lp: Lp {
            m: rows.len(),
            n,
            a,
            cost,
            lb,
            ub,
        },
        cols,
        rows,
        binary,
        fixed,
    })
}

impl Presolved {
    fn expand(&self, x: &[f64], round_binaries: bool) -> Vec<f64> {
        let mut out: Vec<f64> = self.fixed.iter().map(|f| f.unwrap_or(0.0)).collect();
        for (j, &i) in self.cols.iter().enumerate() {
            out[i] = if round_binaries && self.binary[j] {
                x[j].round()
            } else {
                x[j]
            };
        }
        out
    }

    fn iteration_cap(&self) -> usize {
        50 * (self.lp.m + self.lp.n) + 10_000
    }
}

fn infeasible(stats: SolveStats) -> Solution {
    Solution {
        status: SolveStatus::Infeasible,
        values: Vec::new(),
        objective: f64::INFINITY,
        duals: None,
        stats,
    }
}

/// LP relaxation: binaries are treated as continuous in `[0, 1]`.
pub fn solve_lp(model: &MilpModel) -> Solution {
    let start = Instant::now();
    let Some(pre) = presolve(model) else {
        return infeasible(SolveStats::default());
    };
    let mut s = Simplex::new(&pre.lp, None);
    let status = s.solve(pre.iteration_cap());
    let mut stats = SolveStats {
        nodes: 1,
        simplex_iterations: s.iterations,
        wall_time: Duration::ZERO,
    };
    let sol = match status {
        LpStatus::Optimal => {
            let values = pre.expand(s.values(), false);
            let mut duals = vec![0.0; model.constraints.len()];
            for (r, y) in s.duals().into_iter().enumerate() {
                duals[pre.rows[r]] = y;
            }
            Solution {
                status: SolveStatus::Optimal,
                objective: model.objective_value(&values),
                values,
                duals: Some(duals),
                stats,
            }
        }
        LpStatus::Infeasible => infeasible(stats),
        LpStatus::Unbounded => Solution {
            status: SolveStatus::Unbounded,
            values: Vec::new(),
            objective: f64::NEG_INFINITY,
            duals: None,
            stats,
        },
        LpStatus::IterationLimit => Solution {
            status: SolveStatus::NodeLimit,
            values: Vec::new(),
            objective: f64::NAN,
            duals: None,
            stats,
        },
    };
    stats.wall_time = start.elapsed();
    Solution { stats, ..sol }
}

struct Node {
    id: usize,
    depth: usize,
    bound: f64,
    /// Branching fixings from the root, as (LP column, value).
    fixings: Vec<(usize, f64)>,
    basis: Basis,
    branch_col: usize,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    /// Max-heap order: lowest bound first, then deepest, then oldest.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then(self.depth.cmp(&other.depth))
            .then(other.id.cmp(&self.id))
    }
}

/// Most fractional binary column, lowest index on ties.
fn branching_column(pre: &Presolved, x: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (j, &is_bin) in pre.binary.iter().enumerate() {
        if !is_bin {
            continue;
        }
        let frac = (x[j] - x[j].floor()).min(x[j].ceil() - x[j]);
        if frac > INT_TOL && best.is_none_or(|(_, f)| frac > f) {
            best = Some((j, frac));
        }
    }
    best.map(|(j, _)| j)
}

enum NodeOutcome {
    Pruned,
    Integral(Vec<f64>, f64),
    Open(Node),
    Unbounded,
    Limit,
}

/// Best-bound branch and bound over the binaries, with default options.
pub fn solve_milp(model: &MilpModel) -> Solution {
    solve_milp_with(model, &MilpOptions::default())
}

pub fn solve_milp_with(model: &MilpModel, opts: &MilpOptions) -> Solution {
    let start = Instant::now();
    let Some(pre) = presolve(model) else {
        return infeasible(SolveStats::default());
    };
    let cap = pre.iteration_cap();
    let mut stats = SolveStats::default();
    let mut next_id = 0usize;
    let mut incumbent: Option<(Vec<f64>, f64)> = None;

    let mut evaluate = |fixings: Vec<(usize, f64)>,
                        depth: usize,
                        warm: Option<&Simplex>,
                        incumbent: &Option<(Vec<f64>, f64)>,
                        stats: &mut SolveStats|
     -> NodeOutcome {
        let mut s = match warm {
            Some(w) => w.clone(),
            None => Simplex::new(&pre.lp, None),
        };
        if warm.is_some() {
            let &(j, v) = fixings.last().expect("child has a fixing");
            s.set_bounds(j, v, v);
        }
        s.iterations = 0;
        let status = s.solve(cap);
        stats.nodes += 1;
        stats.simplex_iterations += s.iterations;
        match status {
            LpStatus::Infeasible => return NodeOutcome::Pruned,
            LpStatus::Unbounded => return NodeOutcome::Unbounded,
            LpStatus::IterationLimit => return NodeOutcome::Limit,
            LpStatus::Optimal => {}
        }
        let bound = s.objective();
        if let Some((_, best)) = incumbent {
            if bound >= best - opts.gap {
                return NodeOutcome::Pruned;
            }
        }
        let x = s.values();
        match branching_column(&pre, x) {
            None => NodeOutcome::Integral(x[..pre.lp.n].to_vec(), bound),
            Some(branch_col) => {
                let id = next_id;
                next_id += 1;
                NodeOutcome::Open(Node {
                    id,
                    depth,
                    bound,
                    fixings,
                    basis: s.basis(),
                    branch_col,
                })
            }
        }
    };

    let finish = |status: SolveStatus, incumbent: Option<(Vec<f64>, f64)>, mut stats: SolveStats| {
        stats.wall_time = start.elapsed();
        match incumbent {
            Some((x, _)) => {
                let values = pre.expand(&x, true);
                Solution {
                    status,
                    objective: model.objective_value(&values),
                    values,
                    duals: None,
                    stats,
                }
            }
            None => Solution {
                status,
                values: Vec::new(),
                objective: match status {
                    SolveStatus::Unbounded => f64::NEG_INFINITY,
                    SolveStatus::NodeLimit => f64::NAN,
                    _ => f64::INFINITY,
                },
                duals: None,
                stats,
            },
        }
    };

    let mut open = BinaryHeap::new();
    match evaluate(Vec::new(), 0, None, &incumbent, &mut stats) {
        NodeOutcome::Pruned => return finish(SolveStatus::Infeasible, None, stats),
        NodeOutcome::Unbounded => return finish(SolveStatus::Unbounded, None, stats),
        NodeOutcome::Limit => return finish(SolveStatus::NodeLimit, None, stats),
        NodeOutcome::Integral(x, obj) => incumbent = Some((x, obj)),
        NodeOutcome::Open(node) => open.push(node),
    }

    while let Some(node) = open.pop() {
        if let Some((_, best)) = &incumbent {
            if node.bound >= best - opts.gap {
                continue;
            }
        }
        if stats.nodes + 2 > opts.node_limit {
            return finish(SolveStatus::NodeLimit, incumbent, stats);
        }
        let mut parent = Simplex::new(&pre.lp, Some(&node.basis));
        for &(j, v) in &node.fixings {
            parent.set_bounds(j, v, v);
        }
        for v in [0.0, 1.0] {
            let mut fixings = node.fixings.clone();
            fixings.push((node.branch_col, v));
            match evaluate(fixings, node.depth + 1, Some(&parent), &incumbent, &mut stats) {
                NodeOutcome::Pruned => {}
                NodeOutcome::Unbounded => return finish(SolveStatus::Unbounded, None, stats),
                NodeOutcome::Limit => return finish(SolveStatus::NodeLimit, incumbent, stats),
                NodeOutcome::Integral(x, obj) => {
                    if incumbent.as_ref().is_none_or(|(_, best)| obj < *best) {
                        incumbent = Some((x, obj));
                    }
                }
                NodeOutcome::Open(child) => open.push(child),
            }
        }
    }
    let status = if incumbent.is_some() {
        SolveStatus::Optimal
    } else {
        SolveStatus::Infeasible
    };
    finish(status, incumbent, stats)
}
