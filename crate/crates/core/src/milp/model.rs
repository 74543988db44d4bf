use std::fmt::Write as _;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use super::MilpError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ConstraintId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl Sense {
    fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        }
    }

    /// Whether `lhs (sense) rhs` holds within `tol`.
    pub fn holds(self, lhs: f64, rhs: f64, tol: f64) -> bool {
        match self {
            Sense::Le => lhs <= rhs + tol,
            Sense::Eq => (lhs - rhs).abs() <= tol,
            Sense::Ge => lhs >= rhs - tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub kind: VarKind,
    pub lb: f64,
    pub ub: f64,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    /// Sorted by variable, no duplicates, no zeros.
    pub coeffs: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Constraint {
    pub fn lhs(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|(v, c)| c * x[v.0]).sum()
    }
}

/// Affine expression `sum c_i x_i + constant`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinExpr {
    pub terms: Vec<(VarId, f64)>,
    pub constant: f64,
}

impl LinExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        LinExpr {
            terms: Vec::new(),
            constant: c,
        }
    }

    pub fn var(v: VarId) -> Self {
        Self::term(v, 1.0)
    }

    pub fn term(v: VarId, c: f64) -> Self {
        LinExpr {
            terms: vec![(v, c)],
            constant: 0.0,
        }
    }

    pub fn add_term(&mut self, v: VarId, c: f64) {
        self.terms.push((v, c));
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|(v, c)| c * x[v.0]).sum::<f64>()
    }

    /// Terms merged by variable and sorted, zeros dropped.
    pub fn normalized(&self) -> LinExpr {
        LinExpr {
            terms: merge_terms(self.terms.iter().copied()),
            constant: self.constant,
        }
    }

    /// Interval of values over the box given by per-variable bounds.
    pub fn range(&self, bounds: impl Fn(VarId) -> (f64, f64)) -> (f64, f64) {
        let (mut lo, mut hi) = (self.constant, self.constant);
        for &(v, c) in &self.terms {
            let (l, u) = bounds(v);
            if c >= 0.0 {
                lo += c * l;
                hi += c * u;
            } else {
                lo += c * u;
                hi += c * l;
            }
        }
        (lo, hi)
    }
}

fn merge_terms(terms: impl Iterator<Item = (VarId, f64)>) -> Vec<(VarId, f64)> {
    let mut t: Vec<(VarId, f64)> = terms.collect();
    t.sort_by_key(|(v, _)| *v);
    let mut out: Vec<(VarId, f64)> = Vec::with_capacity(t.len());
    for (v, c) in t {
        match out.last_mut() {
            Some((w, d)) if *w == v => *d += c,
            _ => out.push((v, c)),
        }
    }
    out.retain(|(_, c)| *c != 0.0);
    out
}

impl From<VarId> for LinExpr {
    fn from(v: VarId) -> Self {
        LinExpr::var(v)
    }
}

impl From<f64> for LinExpr {
    fn from(c: f64) -> Self {
        LinExpr::constant(c)
    }
}

impl AddAssign<&LinExpr> for LinExpr {
    fn add_assign(&mut self, rhs: &LinExpr) {
        self.terms.extend_from_slice(&rhs.terms);
        self.constant += rhs.constant;
    }
}

impl AddAssign<LinExpr> for LinExpr {
    fn add_assign(&mut self, rhs: LinExpr) {
        *self += &rhs;
    }
}

impl Add for LinExpr {
    type Output = LinExpr;
    fn add(mut self, rhs: LinExpr) -> LinExpr {
        self += &rhs;
        self
    }
}

impl Sub for LinExpr {
    type Output = LinExpr;
    fn sub(self, rhs: LinExpr) -> LinExpr {
        self + (-rhs)
    }
}

impl Neg for LinExpr {
    type Output = LinExpr;
    fn neg(self) -> LinExpr {
        self * -1.0
    }
}

impl Mul<f64> for LinExpr {
    type Output = LinExpr;
    fn mul(mut self, k: f64) -> LinExpr {
        for t in &mut self.terms {
            t.1 *= k;
        }
        self.constant *= k;
        self
    }
}

/// Minimization MILP over continuous and binary variables.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MilpModel {
    pub vars: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    pub objective: LinExpr,
}

impl MilpModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn num_binaries(&self) -> usize {
        self.vars.iter().filter(|v| v.kind == VarKind::Binary).count()
    }

    /// Declares a variable. Binary variables always get bounds `[0, 1]`.
    pub fn add_var(&mut self, kind: VarKind, lb: f64, ub: f64, name: impl Into<String>) -> Result<VarId, MilpError> {
        let (lb, ub) = match kind {
            VarKind::Binary => (0.0, 1.0),
            VarKind::Continuous => (lb, ub),
        };
        if lb.is_nan() || ub.is_nan() || lb > ub || lb == f64::INFINITY || ub == f64::NEG_INFINITY {
            return Err(MilpError::InvertedBounds { lb, ub });
        }
        self.vars.push(Variable {
            kind,
            lb,
            ub,
            name: name.into(),
        });
        Ok(VarId(self.vars.len() - 1))
    }

    pub fn add_continuous(&mut self, lb: f64, ub: f64, name: impl Into<String>) -> Result<VarId, MilpError> {
        self.add_var(VarKind::Continuous, lb, ub, name)
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> VarId {
        self.add_var(VarKind::Binary, 0.0, 1.0, name)
            .expect("binary bounds are valid")
    }

    fn check(&self, v: VarId) -> Result<(), MilpError> {
        if v.0 < self.vars.len() {
            Ok(())
        } else {
            Err(MilpError::UnknownVar(v.0))
        }
    }

    /// Stores `row (sense) rhs`; repeated variables in `row` are summed.
    pub fn add_constraint(
        &mut self,
        row: impl IntoIterator<Item = (VarId, f64)>,
        sense: Sense,
        rhs: f64,
    ) -> Result<ConstraintId, MilpError> {
        let coeffs = merge_terms(row.into_iter());
        for (v, c) in &coeffs {
            self.check(*v)?;
            if !c.is_finite() {
                return Err(MilpError::NonFinite);
            }
        }
        if !rhs.is_finite() {
            return Err(MilpError::NonFinite);
        }
        self.constraints.push(Constraint { coeffs, sense, rhs });
        Ok(ConstraintId(self.constraints.len() - 1))
    }

    /// `lhs (sense) rhs` with the constant parts moved to the right.
    pub fn add_expr_constraint(&mut self, lhs: &LinExpr, sense: Sense, rhs: f64) -> Result<ConstraintId, MilpError> {
        self.add_constraint(lhs.terms.iter().copied(), sense, rhs - lhs.constant)
    }

    pub fn bounds(&self, v: VarId) -> (f64, f64) {
        let var = &self.vars[v.0];
        (var.lb, var.ub)
    }

    /// Intersects the bounds of `v` with `[lb, ub]`. An empty intersection is
    /// kept as an inverted pair and reported infeasible by the solvers.
    pub fn tighten_bounds(&mut self, v: VarId, lb: f64, ub: f64) -> Result<(), MilpError> {
        self.check(v)?;
        let var = &mut self.vars[v.0];
        var.lb = var.lb.max(lb);
        var.ub = var.ub.min(ub);
        Ok(())
    }

    pub fn fix(&mut self, v: VarId, value: f64) -> Result<(), MilpError> {
        self.tighten_bounds(v, value, value)
    }

    pub fn add_objective(&mut self, e: &LinExpr) -> Result<(), MilpError> {
        for (v, _) in &e.terms {
            self.check(*v)?;
        }
        self.objective += e;
        Ok(())
    }

    pub fn add_objective_term(&mut self, v: VarId, c: f64) -> Result<(), MilpError> {
        self.add_objective(&LinExpr::term(v, c))
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.value(x)
    }

    /// Largest bound or row violation of `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let bounds = self
            .vars
            .iter()
            .zip(x)
            .map(|(v, &xi)| (v.lb - xi).max(xi - v.ub).max(0.0));
        let rows = self.constraints.iter().map(|c| {
            let lhs = c.lhs(x);
            match c.sense {
                Sense::Le => (lhs - c.rhs).max(0.0),
                Sense::Ge => (c.rhs - lhs).max(0.0),
                Sense::Eq => (lhs - c.rhs).abs(),
            }
        });
        bounds.chain(rows).fold(0.0, f64::max)
    }

    fn var_name(&self, v: VarId) -> String {
        let name = &self.vars[v.0].name;
        if name.is_empty() {
            format!("x{}", v.0)
        } else {
            name.clone()
        }
    }

    fn write_terms(&self, out: &mut String, terms: &[(VarId, f64)]) {
        if terms.is_empty() {
            out.push_str(" 0");
        }
        for (i, &(v, c)) in terms.iter().enumerate() {
            if c < 0.0 {
                out.push_str(" -");
            } else if i > 0 {
                out.push_str(" +");
            }
            if c.abs() != 1.0 {
                let _ = write!(out, " {}", c.abs());
            }
            let _ = write!(out, " {}", self.var_name(v));
        }
    }

    /// Plain-text dump in CPLEX LP style.
    pub fn to_lp_string(&self, title: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "\\ {title}");
        if self.objective.constant != 0.0 {
            let _ = writeln!(out, "\\ objective constant {}", self.objective.constant);
        }
        out.push_str("Minimize\n obj:");
        self.write_terms(&mut out, &self.objective.normalized().terms);
        out.push_str("\nSubject To\n");
        for (i, c) in self.constraints.iter().enumerate() {
            let _ = write!(out, " c{i}:");
            self.write_terms(&mut out, &c.coeffs);
            let _ = writeln!(out, " {} {}", c.sense.symbol(), c.rhs);
        }
        out.push_str("Bounds\n");
        for (i, v) in self.vars.iter().enumerate() {
            if v.kind == VarKind::Binary {
                continue;
            }
            let name = self.var_name(VarId(i));
            let _ = match (v.lb.is_finite(), v.ub.is_finite()) {
                (true, true) if v.lb == v.ub => writeln!(out, " {name} = {}", v.lb),
                (true, true) => writeln!(out, " {} <= {name} <= {}", v.lb, v.ub),
                (true, false) => writeln!(out, " {name} >= {}", v.lb),
                (false, true) => writeln!(out, " -inf <= {name} <= {}", v.ub),
                (false, false) => writeln!(out, " {name} free"),
            };
        }
        let binaries: Vec<String> = (0..self.vars.len())
            .filter(|&i| self.vars[i].kind == VarKind::Binary)
            .map(|i| self.var_name(VarId(i)))
            .collect();
        if !binaries.is_empty() {
            out.push_str("Binaries\n");
            for b in binaries {
                let _ = writeln!(out, " {b}");
            }
        }
        out.push_str("End\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn add_var_bounds() {
        let mut m = MilpModel::new();
        assert_eq!(m.add_continuous(-10.0, 10.0, "x").unwrap(), VarId(0));
        let b = m.add_var(VarKind::Binary, -5.0, 5.0, "b").unwrap();
        assert_eq!(m.bounds(b), (0.0, 1.0));
        assert!(matches!(
            m.add_continuous(1.0, 0.0, "bad"),
            Err(MilpError::InvertedBounds { .. })
        ));
    }

    #[test]
    fn constraints_merge_duplicates() {
        let mut m = MilpModel::new();
        let x = m.add_continuous(0.0, 1.0, "x").unwrap();
        let y = m.add_continuous(0.0, 1.0, "y").unwrap();
        m.add_constraint([(y, 1.0), (x, 1.0), (x, 2.0)], Sense::Le, 1.0)
            .unwrap();
        assert_eq!(m.constraints[0].coeffs, vec![(x, 3.0), (y, 1.0)]);
        m.add_constraint([], Sense::Le, 1.0).unwrap();
        m.add_constraint([], Sense::Le, -1.0).unwrap();
        assert_eq!(m.num_constraints(), 3);
        assert!(matches!(
            m.add_constraint([(VarId(7), 1.0)], Sense::Le, 0.0),
            Err(MilpError::UnknownVar(7))
        ));
    }

    #[test]
    fn expr_arithmetic() {
        let (x, y) = (VarId(0), VarId(1));
        let e = (LinExpr::var(x) * 2.0 + LinExpr::constant(1.0) - LinExpr::term(y, 3.0) + LinExpr::var(x)).normalized();
        assert_eq!(e.terms, vec![(x, 3.0), (y, -3.0)]);
        assert_eq!(e.value(&[1.0, 1.0]), 1.0);
        assert_eq!(e.range(|_| (0.0, 1.0)), (-2.0, 4.0));
    }

    #[test]
    fn lp_dump_sections() {
        let mut m = MilpModel::new();
        let x = m.add_continuous(-1.0, 2.0, "x").unwrap();
        let z = m.add_binary("z");
        m.add_constraint([(x, 1.0), (z, -2.5)], Sense::Ge, 0.5).unwrap();
        m.add_objective_term(x, 1.0).unwrap();
        let s = m.to_lp_string("demo");
        for section in ["Minimize", "Subject To", "Bounds", "Binaries", "End"] {
            assert!(s.contains(section), "{s}");
        }
        assert!(s.contains(" c0: x - 2.5 z >= 0.5"), "{s}");
        assert!(s.contains(" -1 <= x <= 2"));
    }
}
