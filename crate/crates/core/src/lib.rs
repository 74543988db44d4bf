//! Communication-aware motion planning for teams of double-integrator agents.
//!
//! Each agent must reach a goal region while keeping apart from the others,
//! and the team must respect per-cell capacities on a quadtree-indexed grid.
//! Goals and separation are temporal-logic formulas over the agent state;
//! obstacles and capacities are spatial patterns over the quadtree.
//! Everything is lowered to a mixed-integer program and re-solved in a
//! receding horizon, one agent at a time in priority order.
//!
//! - [`logic`]: formula trees, a text parser and brute-force monitors.
//! - [`qts`]: grid, quadtree, communication maps and the spatial patterns.
//! - [`milp`]: model builder and solver (bounded-variable simplex, branch and bound).
//! - [`encoder`]: dynamics, velocity polygon, occupancy, formulas and costs as MILP rows.
//! - [`planner`]: the receding-horizon loop and its run log.
//! - [`cli`]: scenario files, post-hoc verification and SVG plots.

pub mod cli;
pub mod encoder;
pub mod logic;
pub mod milp;
pub mod planner;
pub mod qts;
