//! Quad transition systems over a gridded workspace.
//!
//! A [`Qts`] is a complete quadtree whose leaves carry per-cell valuations
//! (agent counts, capacities) and whose internal nodes carry the mean of
//! their four children. Spatial formulas ([`TsslFormula`]) are evaluated at a
//! node; SpaTeL formulas evaluate them at the root of each snapshot of a
//! [`QtsTrace`].
//!
//! [`TsslFormula`]: crate::logic::TsslFormula

mod comm;
mod grid;
mod patterns;
mod tree;
mod tssl;

pub use comm::{agent_comm_matrix, base_station_matrix, PathLossParams};
pub use grid::{cell_of, occupancy_counts, CapacityMatrix, Grid, GridMatrix, OccupancyCounts};
pub use patterns::{generate_patterns, Patterns};
pub use tree::{build_qts, reference_capacity_rows, NodeId, Qts};
pub use tssl::{eval_spatel, eval_tssl, failing_node, QtsTrace};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QtsError {
    #[error("matrix side {0} is not a power of two >= 2")]
    NotPowerOfTwo(usize),
    #[error("matrix rows must all have the matrix side length")]
    NotSquare,
    #[error("invalid grid: {0}")]
    BadGrid(String),
    #[error("trace of length {len} too short: need samples up to step {needed}")]
    TraceTooShort { len: usize, needed: usize },
    #[error("trace snapshots must share one tree shape")]
    ShapeMismatch,
    #[error("STL predicates cannot be evaluated over a QTS trace")]
    PredicateInSpatel,
}
