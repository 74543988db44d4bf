//! Signal temporal logic (STL) and the tree spatial logic (TSSL) that SpaTeL
//! embeds as atoms.
//!
//! Formulas are kept in negation normal form: `Not` may only wrap a
//! predicate (STL) or a valuation comparison (TSSL). Conjunction and
//! disjunction are n-ary, so `And(vec![])` is `true` and `Or(vec![])` is
//! `false`.

mod builders;
mod monitor;
mod parse;

pub use builders::{build_goal_formula, build_separation_formula, SeparationMode, STATE_DIM};
pub use monitor::{eval_stl, horizon};
pub use parse::{parse_stl, parse_stl_raw, ParseError, RawStl};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LogicError {
    #[error("signal of length {len} too short: evaluation at step {step} needs samples up to {needed}")]
    SignalTooShort { len: usize, step: usize, needed: usize },
    #[error("predicate has {coeffs} coefficients but the signal has dimension {dim}")]
    DimensionMismatch { coeffs: usize, dim: usize },
    #[error("formula contains a spatial atom; evaluate it over a QTS trace instead")]
    SpatialAtom,
    #[error("goal polytope needs at least one half-plane")]
    EmptyPolytope,
    #[error("separation distances must be positive (got d1={d1}, d2={d2})")]
    NonPositiveDistance { d1: f64, d2: f64 },
    #[error("signal samples must share one dimension")]
    RaggedSignal,
    #[error("signal must contain at least one sample")]
    EmptySignal,
}

/// Affine predicate `coeffs · x + offset > 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Predicate {
    pub coeffs: Vec<f64>,
    pub offset: f64,
}

impl Predicate {
    pub fn new(coeffs: Vec<f64>, offset: f64) -> Self {
        Predicate { coeffs, offset }
    }

    /// Value of the affine function. Missing trailing coefficients count as zero.
    pub fn value(&self, x: &[f64]) -> Result<f64, LogicError> {
        if self.coeffs.len() > x.len() {
            return Err(LogicError::DimensionMismatch {
                coeffs: self.coeffs.len(),
                dim: x.len(),
            });
        }
        Ok(self.coeffs.iter().zip(x).map(|(c, v)| c * v).sum::<f64>() + self.offset)
    }

    pub fn holds(&self, x: &[f64]) -> Result<bool, LogicError> {
        Ok(self.value(x)? > 0.0)
    }

    /// Pads the coefficient vector with zeros up to `dim`.
    pub fn padded(&self, dim: usize) -> Predicate {
        let mut coeffs = self.coeffs.clone();
        if coeffs.len() < dim {
            coeffs.resize(dim, 0.0);
        }
        Predicate::new(coeffs, self.offset)
    }
}

/// STL formula over discrete-time signals, optionally carrying TSSL atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum StlFormula {
    True,
    Pred(Predicate),
    /// Negated predicate; holds iff the affine value is `<= 0`.
    NotPred(Predicate),
    And(Vec<StlFormula>),
    Or(Vec<StlFormula>),
    Always(usize, usize, Box<StlFormula>),
    Eventually(usize, usize, Box<StlFormula>),
    Until(usize, usize, Box<StlFormula>, Box<StlFormula>),
    SpatialAtom(TsslFormula),
}

impl StlFormula {
    pub fn always(a: usize, b: usize, f: StlFormula) -> Self {
        StlFormula::Always(a, b, Box::new(f))
    }

    pub fn eventually(a: usize, b: usize, f: StlFormula) -> Self {
        StlFormula::Eventually(a, b, Box::new(f))
    }

    pub fn until(a: usize, b: usize, left: StlFormula, right: StlFormula) -> Self {
        StlFormula::Until(a, b, Box::new(left), Box::new(right))
    }

    pub fn falsum() -> Self {
        StlFormula::Or(Vec::new())
    }

    pub fn contains_spatial(&self) -> bool {
        match self {
            StlFormula::SpatialAtom(_) => true,
            StlFormula::True | StlFormula::Pred(_) | StlFormula::NotPred(_) => false,
            StlFormula::And(cs) | StlFormula::Or(cs) => cs.iter().any(|c| c.contains_spatial()),
            StlFormula::Always(_, _, c) | StlFormula::Eventually(_, _, c) => c.contains_spatial(),
            StlFormula::Until(_, _, l, r) => l.contains_spatial() || r.contains_spatial(),
        }
    }

    /// Largest coefficient count among the predicates.
    pub fn dimension(&self) -> usize {
        match self {
            StlFormula::True | StlFormula::SpatialAtom(_) => 0,
            StlFormula::Pred(p) | StlFormula::NotPred(p) => p.coeffs.len(),
            StlFormula::And(cs) | StlFormula::Or(cs) => cs.iter().map(|c| c.dimension()).max().unwrap_or(0),
            StlFormula::Always(_, _, c) | StlFormula::Eventually(_, _, c) => c.dimension(),
            StlFormula::Until(_, _, l, r) => l.dimension().max(r.dimension()),
        }
    }

    /// Pads every predicate to `dim` coefficients.
    pub fn with_dimension(&self, dim: usize) -> StlFormula {
        match self {
            StlFormula::Pred(p) => StlFormula::Pred(p.padded(dim)),
            StlFormula::NotPred(p) => StlFormula::NotPred(p.padded(dim)),
            StlFormula::And(cs) => StlFormula::And(cs.iter().map(|c| c.with_dimension(dim)).collect()),
            StlFormula::Or(cs) => StlFormula::Or(cs.iter().map(|c| c.with_dimension(dim)).collect()),
            StlFormula::Always(a, b, c) => StlFormula::always(*a, *b, c.with_dimension(dim)),
            StlFormula::Eventually(a, b, c) => StlFormula::eventually(*a, *b, c.with_dimension(dim)),
            StlFormula::Until(a, b, l, r) => StlFormula::until(*a, *b, l.with_dimension(dim), r.with_dimension(dim)),
            other => other.clone(),
        }
    }
}

/// Discrete-time signal with uniform sampling, starting at step 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    samples: Vec<Vec<f64>>,
}

impl Signal {
    pub fn new(samples: Vec<Vec<f64>>) -> Result<Self, LogicError> {
        let first = samples.first().ok_or(LogicError::EmptySignal)?;
        if samples.iter().any(|s| s.len() != first.len()) {
            return Err(LogicError::RaggedSignal);
        }
        Ok(Signal { samples })
    }

    /// One-dimensional signal.
    pub fn scalar(values: &[f64]) -> Self {
        Signal {
            samples: values.iter().map(|v| vec![*v]).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.samples[0].len()
    }

    pub fn sample(&self, k: usize) -> &[f64] {
        &self.samples[k]
    }

    pub fn samples(&self) -> &[Vec<f64>] {
        &self.samples
    }
}

/// Edge labels of the quadtree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Quadrant {
    NW,
    NE,
    SW,
    SE,
}

impl Quadrant {
    pub const ALL: [Quadrant; 4] = [Quadrant::NW, Quadrant::NE, Quadrant::SW, Quadrant::SE];

    pub fn index(self) -> usize {
        self as usize
    }

    /// (row, col) offset of this child inside its parent's 2x2 block.
    pub fn offset(self) -> (usize, usize) {
        match self {
            Quadrant::NW => (0, 0),
            Quadrant::NE => (0, 1),
            Quadrant::SW => (1, 0),
            Quadrant::SE => (1, 1),
        }
    }

    pub fn from_offset(dr: usize, dc: usize) -> Quadrant {
        Quadrant::ALL[dr * 2 + dc]
    }
}

/// Non-empty-by-construction subset of the four labels, as a bitmask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LabelSet(u8);

impl LabelSet {
    pub const ALL: LabelSet = LabelSet(0b1111);

    /// Returns `None` for the empty set.
    pub fn new(labels: &[Quadrant]) -> Option<LabelSet> {
        let bits = labels.iter().fold(0u8, |acc, q| acc | (1 << q.index()));
        (bits != 0).then_some(LabelSet(bits))
    }

    pub fn single(q: Quadrant) -> LabelSet {
        LabelSet(1 << q.index())
    }

    pub fn contains(self, q: Quadrant) -> bool {
        self.0 & (1 << q.index()) != 0
    }

    pub fn iter(self) -> impl Iterator<Item = Quadrant> {
        Quadrant::ALL.into_iter().filter(move |q| self.contains(*q))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Comparison {
    Le,
    Ge,
}

/// TSSL spatial formula evaluated at a quadtree node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TsslFormula {
    True,
    /// `mu ~ threshold`.
    ValCmp(Comparison, f64),
    NotValCmp(Comparison, f64),
    And(Vec<TsslFormula>),
    Or(Vec<TsslFormula>),
    ForAllNext(LabelSet, Box<TsslFormula>),
    ExistsNext(LabelSet, Box<TsslFormula>),
}

impl TsslFormula {
    pub fn le(d: f64) -> Self {
        TsslFormula::ValCmp(Comparison::Le, d)
    }

    pub fn ge(d: f64) -> Self {
        TsslFormula::ValCmp(Comparison::Ge, d)
    }

    pub fn forall(labels: LabelSet, f: TsslFormula) -> Self {
        TsslFormula::ForAllNext(labels, Box::new(f))
    }

    pub fn exists(labels: LabelSet, f: TsslFormula) -> Self {
        TsslFormula::ExistsNext(labels, Box::new(f))
    }

    /// Conjunction that collapses the trivial cases.
    pub fn conj(mut parts: Vec<TsslFormula>) -> Self {
        match parts.len() {
            0 => TsslFormula::True,
            1 => parts.pop().unwrap(),
            _ => TsslFormula::And(parts),
        }
    }
}

impl std::fmt::Display for Quadrant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Quadrant::NW => "NW",
            Quadrant::NE => "NE",
            Quadrant::SW => "SW",
            Quadrant::SE => "SE",
        };
        f.write_str(s)
    }
}

impl std::fmt::Display for TsslFormula {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fn labels(b: &LabelSet) -> String {
            let v: Vec<String> = b.iter().map(|q| q.to_string()).collect();
            if v.len() == 1 {
                v[0].clone()
            } else {
                format!("{{{}}}", v.join(","))
            }
        }
        let op = |c: &Comparison| match c {
            Comparison::Le => "<=",
            Comparison::Ge => ">=",
        };
        match self {
            TsslFormula::True => write!(f, "true"),
            TsslFormula::ValCmp(c, d) => write!(f, "(mu {} {})", op(c), d),
            TsslFormula::NotValCmp(c, d) => write!(f, "!(mu {} {})", op(c), d),
            TsslFormula::And(cs) | TsslFormula::Or(cs) => {
                if cs.is_empty() {
                    let t = matches!(self, TsslFormula::And(_));
                    return write!(f, "{}", if t { "true" } else { "false" });
                }
                let sep = if matches!(self, TsslFormula::And(_)) {
                    " && "
                } else {
                    " || "
                };
                let parts: Vec<String> = cs.iter().map(|c| format!("({c})")).collect();
                write!(f, "{}", parts.join(sep))
            }
            TsslFormula::ForAllNext(b, c) => write!(f, "A{} o {}", labels(b), c),
            TsslFormula::ExistsNext(b, c) => write!(f, "E{} o {}", labels(b), c),
        }
    }
}
