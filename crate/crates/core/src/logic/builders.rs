use serde::{Deserialize, Serialize};

use super::{LogicError, Predicate, StlFormula};

/// Dimension of one agent's state `[p1, p2, v1, v2]`.
pub const STATE_DIM: usize = 4;

/// How the two per-axis separation terms combine for one neighbor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SeparationMode {
    /// `|dp1| >= d1 && |dp2| >= d2`
    Conjunctive,
    /// `|dp1| >= d1 || |dp2| >= d2`
    #[default]
    Disjunctive,
}

/// `F[0,deadline] (and_j a_j . p + b_j <= 0)` over the 4-dimensional agent state.
pub fn build_goal_formula(polytope: &[([f64; 2], f64)], deadline: usize) -> Result<StlFormula, LogicError> {
    if polytope.is_empty() {
        return Err(LogicError::EmptyPolytope);
    }
    let halfplanes = polytope
        .iter()
        .map(|(a, b)| StlFormula::Pred(Predicate::new(vec![-a[0], -a[1], 0.0, 0.0], -b)))
        .collect();
    Ok(StlFormula::eventually(0, deadline, StlFormula::And(halfplanes)))
}

/// Pairwise separation over the stacked signal `[x_i, x_n1, x_n2, ...]`.
///
/// Each neighbor contributes one clause; clauses are conjoined and the result
/// is wrapped in `G[window.0, window.1]`. With no neighbors this is `true`.
pub fn build_separation_formula(
    d1: f64,
    d2: f64,
    mode: SeparationMode,
    neighbors: usize,
    window: (usize, usize),
) -> Result<StlFormula, LogicError> {
    if d1.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater)
        || d2.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater)
    {
        return Err(LogicError::NonPositiveDistance { d1, d2 });
    }
    if neighbors == 0 {
        return Ok(StlFormula::True);
    }
    let dim = STATE_DIM * (neighbors + 1);
    let axis_gap = |axis: usize, j: usize, d: f64| {
        let mut plus = vec![0.0; dim];
        plus[axis] = 1.0;
        plus[STATE_DIM * (j + 1) + axis] = -1.0;
        let minus: Vec<f64> = plus.iter().map(|c| -c).collect();
        StlFormula::Or(vec![
            StlFormula::Pred(Predicate::new(plus, -d)),
            StlFormula::Pred(Predicate::new(minus, -d)),
        ])
    };
    let clauses = (0..neighbors)
        .map(|j| {
            let terms = vec![axis_gap(0, j, d1), axis_gap(1, j, d2)];
            match mode {
                SeparationMode::Conjunctive => StlFormula::And(terms),
                SeparationMode::Disjunctive => StlFormula::Or(terms),
            }
        })
        .collect();
    Ok(StlFormula::always(window.0, window.1, StlFormula::And(clauses)))
}
