//! Mixed-integer linear programs over continuous and binary variables, with
//! an embedded solver: bounded-variable primal simplex for LP relaxations and
//! best-bound branch and bound over the binaries.
//!
//! Node order and branching are fully deterministic: nodes are explored by
//! lowest bound, then greatest depth, then creation order; the branching
//! variable is the most fractional binary, lowest index on ties.

mod model;
mod simplex;
mod solve;

pub use model::{Constraint, ConstraintId, LinExpr, MilpModel, Sense, VarId, VarKind, Variable};
pub use solve::{solve_lp, solve_milp, solve_milp_with, MilpOptions, Solution, SolveStats, SolveStatus, INT_TOL};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MilpError {
    #[error("inverted bounds: lb {lb} > ub {ub}")]
    InvertedBounds { lb: f64, ub: f64 },
    #[error("unknown variable id {0}")]
    UnknownVar(usize),
    #[error("non-finite coefficient or right-hand side")]
    NonFinite,
}
