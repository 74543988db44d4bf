//! Lowering of one agent's horizon-`H` planning problem into a [`MilpModel`].
//!
//! Variables live on window-local steps `0..H`: local step `t` is global step
//! `t0 + t`, and local step 0 is the agent's current (fixed) state. Formulas
//! handed to [`encode_stl`] and friends are interpreted over the context's
//! symbolic signal with these local indices.
//!
//! Two lowering paths exist for formulas. `encode_*` reifies a formula into a
//! satisfaction binary `z` (z = 1 iff the formula holds, up to the margin
//! `eps`). `require_*` only forces the formula to hold, which lets
//! conjunctions, `Always` and spatial `forall` chains lower to plain rows or
//! bound tightenings without auxiliary binaries.
//!
//! [`MilpModel`]: crate::milp::MilpModel

mod assemble;
mod dynamics;
mod formula;

pub use assemble::{assemble_agent_problem, decode, dump_model, CostWeights, DecodedPlan, NeighborTrack, ProblemSpec};
pub use dynamics::{
    encode_cost_j1, encode_cost_j2, encode_dynamics, encode_occupancy, encode_velocity_polygon, reachable_boxes,
};
pub use formula::{encode_spatel, encode_stl, encode_tssl, pattern_formula, require_spatel, require_stl, Lit};

use nalgebra::{DMatrix, Matrix4, Matrix4x2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::logic::LogicError;
use crate::milp::{LinExpr, MilpError, VarId};
use crate::qts::{Grid, GridMatrix};

/// Default predicate margin, in meters (and valuation units for TSSL).
pub const EPS: f64 = 1e-4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EncodeError {
    #[error("horizon must be at least 1 step")]
    HorizonTooShort,
    #[error("velocity polygon needs at least 3 sides, got {0}")]
    TooFewSides(usize),
    #[error("cost weights must be nonnegative")]
    NegativeWeight,
    #[error("formula needs local step {needed} but only {horizon} steps are encoded")]
    WindowExceedsHorizon { needed: usize, horizon: usize },
    #[error("spatial atom in an STL formula; use encode_spatel")]
    SpatialAtomInStl,
    #[error("STL predicate in a SpaTeL formula")]
    PredicateInSpatel,
    #[error("predicate has {coeffs} coefficients but the symbolic signal has dimension {dim}")]
    DimensionMismatch { coeffs: usize, dim: usize },
    #[error("occupancy binaries must be encoded first")]
    NoOccupancy,
    #[error("matrix of side {got} does not match the {expected}x{expected} grid")]
    GridMismatch { expected: usize, got: usize },
    #[error("expression has an unbounded range; every variable needs finite bounds")]
    UnboundedExpression,
    #[error("empty SpaTeL window")]
    EmptyWindow,
    #[error("(A_d, B_d) is not controllable")]
    Uncontrollable,
    #[error("u_max and v_max must be positive")]
    NonPositiveLimit,
    #[error(transparent)]
    Milp(#[from] MilpError),
    #[error(transparent)]
    Logic(#[from] LogicError),
}

/// Discrete-time double-integrator-like agent with state `[p1, p2, v1, v2]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentModel {
    pub a: [[f64; 4]; 4],
    pub b: [[f64; 2]; 4],
    pub u_max: f64,
    pub v_max: f64,
}

impl AgentModel {
    pub fn new(a: [[f64; 4]; 4], b: [[f64; 2]; 4], u_max: f64, v_max: f64) -> Result<Self, EncodeError> {
        let m = AgentModel { a, b, u_max, v_max };
        m.validate()?;
        Ok(m)
    }

    /// Unit-step double integrator: `p += v + u/2`, `v += u`.
    pub fn double_integrator(u_max: f64, v_max: f64) -> Result<Self, EncodeError> {
        Self::new(
            [
                [1.0, 0.0, 1.0, 0.0],
                [0.0, 1.0, 0.0, 1.0],
                [0.0, 0.0, 1.0, 0.0],
                [0.0, 0.0, 0.0, 1.0],
            ],
            [[0.5, 0.0], [0.0, 0.5], [1.0, 0.0], [0.0, 1.0]],
            u_max,
            v_max,
        )
    }

    pub fn validate(&self) -> Result<(), EncodeError> {
        if !(self.u_max > 0.0 && self.v_max > 0.0) {
            return Err(EncodeError::NonPositiveLimit);
        }
        if !self.is_controllable() {
            return Err(EncodeError::Uncontrollable);
        }
        Ok(())
    }

    /// Rank test on `[B, AB, A^2 B, A^3 B]`.
    pub fn is_controllable(&self) -> bool {
        let a = Matrix4::from_fn(|i, j| self.a[i][j]);
        let b = Matrix4x2::from_fn(|i, j| self.b[i][j]);
        let mut c = DMatrix::zeros(4, 8);
        let mut block = b;
        for k in 0..4 {
            c.view_mut((0, 2 * k), (4, 2)).copy_from(&block);
            block = a * block;
        }
        c.rank(1e-9) == 4
    }

    pub fn step(&self, x: &[f64; 4], u: &[f64; 2]) -> [f64; 4] {
        std::array::from_fn(|i| {
            (0..4).map(|j| self.a[i][j] * x[j]).sum::<f64>() + (0..2).map(|k| self.b[i][k] * u[k]).sum::<f64>()
        })
    }

    /// Radius of the circle circumscribing the `sides`-gon with apothem `v_max`.
    pub fn speed_bound(&self, sides: usize) -> f64 {
        self.v_max / (std::f64::consts::PI / sides as f64).cos()
    }
}

/// Handles from model variables to their roles in one agent's encoding.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodingContext {
    /// Global step of local step 0.
    pub t0: usize,
    pub horizon: usize,
    pub states: Vec<[VarId; 4]>,
    /// Input applied between local steps `t` and `t + 1`.
    pub inputs: Vec<[VarId; 2]>,
    pub alpha: Vec<[Option<VarId>; 4]>,
    pub beta: Vec<[Option<VarId>; 2]>,
    pub gamma: Vec<[VarId; 2]>,
    /// `occupancy[t]` holds `o_{m,n,t}`, row-major, north row first.
    pub occupancy: Vec<GridMatrix<VarId>>,
    pub grid: Option<Grid>,
    /// Symbolic signal used by STL encodings; starts as the agent's own state.
    pub signal: Vec<Vec<LinExpr>>,
    /// Leaf valuations per local step: own occupancy plus neighbor constants.
    pub leaves: Vec<GridMatrix<LinExpr>>,
    pub formula_binaries: Vec<VarId>,
    /// Largest relaxation constant used by any reified row.
    pub big_m: f64,
    pub eps: f64,
}

impl EncodingContext {
    /// Context over an arbitrary symbolic signal, with no dynamics attached.
    pub fn from_signal(signal: Vec<Vec<LinExpr>>) -> Self {
        EncodingContext {
            t0: 0,
            horizon: signal.len(),
            states: Vec::new(),
            inputs: Vec::new(),
            alpha: Vec::new(),
            beta: Vec::new(),
            gamma: Vec::new(),
            occupancy: Vec::new(),
            grid: None,
            signal,
            leaves: Vec::new(),
            formula_binaries: Vec::new(),
            big_m: 0.0,
            eps: EPS,
        }
    }

    /// Context whose spatial leaves are the given expressions, one matrix per step.
    pub fn from_leaves(leaves: Vec<GridMatrix<LinExpr>>) -> Self {
        let mut ctx = Self::from_signal(vec![Vec::new(); leaves.len()]);
        ctx.leaves = leaves;
        ctx
    }

    /// Appends constant samples (one vector per local step) to the signal,
    /// e.g. a neighbor's broadcast states.
    pub fn stack_constants(&mut self, samples: &[Vec<f64>]) {
        for (t, sig) in self.signal.iter_mut().enumerate() {
            let s = &samples[t.min(samples.len() - 1)];
            sig.extend(s.iter().map(|&c| LinExpr::constant(c)));
        }
    }

    /// Adds constant counts (one matrix per local step) to the leaf valuations.
    pub fn add_leaf_constants(&mut self, counts: &[GridMatrix<f64>]) -> Result<(), EncodeError> {
        if self.leaves.is_empty() {
            return Err(EncodeError::NoOccupancy);
        }
        for (t, leaves) in self.leaves.iter_mut().enumerate() {
            let c = &counts[t.min(counts.len() - 1)];
            if c.side() != leaves.side() {
                return Err(EncodeError::GridMismatch {
                    expected: leaves.side(),
                    got: c.side(),
                });
            }
            for (m, n) in c.cells() {
                leaves.get_mut(m, n).constant += *c.get(m, n);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn double_integrator_controllable() {
        let m = AgentModel::double_integrator(2.0, 8.0).unwrap();
        assert_eq!(m.step(&[0.0, 0.0, 1.0, 0.0], &[0.0, 0.0]), [1.0, 0.0, 1.0, 0.0]);
        assert_eq!(m.step(&[0.0; 4], &[2.0, 0.0]), [1.0, 0.0, 2.0, 0.0]);
        let zero_b = AgentModel {
            b: [[0.0; 2]; 4],
            ..m.clone()
        };
        assert_eq!(zero_b.validate(), Err(EncodeError::Uncontrollable));
        assert_eq!(
            AgentModel::double_integrator(0.0, 1.0),
            Err(EncodeError::NonPositiveLimit)
        );
    }

    #[test]
    fn speed_bound_is_circumradius() {
        let m = AgentModel::double_integrator(1.0, 1.0).unwrap();
        assert!((m.speed_bound(4) - 2f64.sqrt()).abs() < 1e-12);
    }
}
