use std::collections::HashMap;

use crate::logic::{horizon, Comparison, StlFormula, TsslFormula};
use crate::milp::{LinExpr, MilpModel, Sense, VarId, VarKind};
use crate::qts::{NodeId, Patterns};

use super::{EncodeError, EncodingContext};

/// Satisfaction literal: either folded to a constant or a binary variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Lit {
    Const(bool),
    Var(VarId),
}

impl Lit {
    pub fn expr(self) -> LinExpr {
        match self {
            Lit::Const(b) => LinExpr::constant(if b { 1.0 } else { 0.0 }),
            Lit::Var(v) => LinExpr::var(v),
        }
    }

    /// Value under a solution vector.
    pub fn value(self, x: &[f64]) -> bool {
        match self {
            Lit::Const(b) => b,
            Lit::Var(v) => x[v.0] > 0.5,
        }
    }
}

/// `(formula address, quadtree node, local step)`; the node is `None` for STL.
type MemoKey = (usize, Option<NodeId>, usize);

struct Lowering<'a> {
    model: &'a mut MilpModel,
    ctx: &'a mut EncodingContext,
    memo: HashMap<MemoKey, Lit>,
    nodes: HashMap<(NodeId, usize), LinExpr>,
}

fn key<T>(f: &T, node: Option<NodeId>, t: usize) -> MemoKey {
    (f as *const T as usize, node, t)
}

impl<'a> Lowering<'a> {
    fn new(model: &'a mut MilpModel, ctx: &'a mut EncodingContext) -> Self {
        Lowering {
            model,
            ctx,
            memo: HashMap::new(),
            nodes: HashMap::new(),
        }
    }

    fn range(&self, e: &LinExpr) -> Result<(f64, f64), EncodeError> {
        let (lo, hi) = e.range(|v| self.model.bounds(v));
        if lo.is_finite() && hi.is_finite() {
            Ok((lo, hi))
        } else {
            Err(EncodeError::UnboundedExpression)
        }
    }

    fn binary(&mut self, name: &str) -> VarId {
        let z = self
            .model
            .add_binary(format!("{name}{}", self.ctx.formula_binaries.len()));
        self.ctx.formula_binaries.push(z);
        z
    }

    /// Literal with `z = 1 => e >= thr` and `z = 0 => e <= thr - eps`.
    /// Constant expressions fold through `exact`.
    fn reify_ge(&mut self, e: &LinExpr, thr: f64, exact: impl Fn(f64) -> bool) -> Result<Lit, EncodeError> {
        let e = e.normalized();
        if e.terms.is_empty() {
            return Ok(Lit::Const(exact(e.constant)));
        }
        let eps = self.ctx.eps;
        let (lo, hi) = self.range(&e)?;
        if lo >= thr {
            return Ok(Lit::Const(true));
        }
        if hi <= thr - eps {
            return Ok(Lit::Const(false));
        }
        let z = self.binary("zp");
        let rhs_lo = lo - e.constant;
        let mut row: Vec<(VarId, f64)> = e.terms.clone();
        row.push((z, -(thr - lo)));
        self.model.add_constraint(row, Sense::Ge, rhs_lo)?;
        let m_hi = (hi - thr + eps).max(0.0);
        let mut row: Vec<(VarId, f64)> = e.terms.clone();
        row.push((z, -m_hi));
        self.model.add_constraint(row, Sense::Le, thr - eps - e.constant)?;
        self.ctx.big_m = self.ctx.big_m.max(thr - lo).max(m_hi);
        Ok(Lit::Var(z))
    }

    /// Forces `e >= thr`, as a bound change when `e` has a single variable.
    fn require_ge(&mut self, e: &LinExpr, thr: f64) -> Result<(), EncodeError> {
        let e = e.normalized();
        let rhs = thr - e.constant;
        match e.terms.as_slice() {
            [] => {
                if e.constant < thr {
                    self.model.add_constraint([], Sense::Ge, 1.0)?;
                }
            }
            &[(v, c)] => {
                let b = rhs / c;
                let integral = self.model.vars[v.0].kind == VarKind::Binary;
                if c > 0.0 {
                    let b = if integral { (b - 1e-9).ceil() } else { b };
                    self.model.tighten_bounds(v, b, f64::INFINITY)?;
                } else {
                    let b = if integral { (b + 1e-9).floor() } else { b };
                    self.model.tighten_bounds(v, f64::NEG_INFINITY, b)?;
                }
            }
            _ => {
                self.model.add_expr_constraint(&e, Sense::Ge, thr)?;
            }
        }
        Ok(())
    }

    fn and(&mut self, lits: Vec<Lit>) -> Result<Lit, EncodeError> {
        let mut vars = Vec::new();
        for l in lits {
            match l {
                Lit::Const(false) => return Ok(Lit::Const(false)),
                Lit::Const(true) => {}
                Lit::Var(v) if !vars.contains(&v) => vars.push(v),
                Lit::Var(_) => {}
            }
        }
        match vars.as_slice() {
            [] => Ok(Lit::Const(true)),
            &[v] => Ok(Lit::Var(v)),
            _ => {
                let z = self.binary("za");
                for &v in &vars {
                    self.model.add_constraint([(z, 1.0), (v, -1.0)], Sense::Le, 0.0)?;
                }
                let mut row: Vec<_> = vars.iter().map(|&v| (v, -1.0)).collect();
                row.push((z, 1.0));
                self.model.add_constraint(row, Sense::Ge, 1.0 - vars.len() as f64)?;
                Ok(Lit::Var(z))
            }
        }
    }

    fn or(&mut self, lits: Vec<Lit>) -> Result<Lit, EncodeError> {
        let mut vars = Vec::new();
        for l in lits {
            match l {
                Lit::Const(true) => return Ok(Lit::Const(true)),
                Lit::Const(false) => {}
                Lit::Var(v) if !vars.contains(&v) => vars.push(v),
                Lit::Var(_) => {}
            }
        }
        match vars.as_slice() {
            [] => Ok(Lit::Const(false)),
            &[v] => Ok(Lit::Var(v)),
            _ => {
                let z = self.binary("zo");
                for &v in &vars {
                    self.model.add_constraint([(z, 1.0), (v, -1.0)], Sense::Ge, 0.0)?;
                }
                let mut row: Vec<_> = vars.iter().map(|&v| (v, -1.0)).collect();
                row.push((z, 1.0));
                self.model.add_constraint(row, Sense::Le, 0.0)?;
                Ok(Lit::Var(z))
            }
        }
    }

    /// `sum lits >= 1`.
    fn require_any(&mut self, lits: Vec<Lit>) -> Result<(), EncodeError> {
        let mut vars = Vec::new();
        for l in lits {
            match l {
                Lit::Const(true) => return Ok(()),
                Lit::Const(false) => {}
                Lit::Var(v) => vars.push(v),
            }
        }
        if vars.len() == 1 {
            self.model.tighten_bounds(vars[0], 1.0, 1.0)?;
        } else {
            self.model
                .add_constraint(vars.into_iter().map(|v| (v, 1.0)), Sense::Ge, 1.0)?;
        }
        Ok(())
    }

    fn predicate_expr(&self, coeffs: &[f64], offset: f64, t: usize) -> LinExpr {
        let mut e = LinExpr::constant(offset);
        for (c, x) in coeffs.iter().zip(&self.ctx.signal[t]) {
            if *c != 0.0 {
                e += x.clone() * *c;
            }
        }
        e
    }

    fn stl(&mut self, f: &StlFormula, t: usize) -> Result<Lit, EncodeError> {
        let k = key(f, None, t);
        if let Some(l) = self.memo.get(&k) {
            return Ok(*l);
        }
        let lit = match f {
            StlFormula::True => Lit::Const(true),
            StlFormula::Pred(p) => {
                let e = self.predicate_expr(&p.coeffs, p.offset, t);
                let eps = self.ctx.eps;
                self.reify_ge(&e, eps, |c| c > 0.0)?
            }
            StlFormula::NotPred(p) => {
                let e = -self.predicate_expr(&p.coeffs, p.offset, t);
                self.reify_ge(&e, 0.0, |c| c >= 0.0)?
            }
            StlFormula::And(cs) => {
                let lits = cs.iter().map(|c| self.stl(c, t)).collect::<Result<_, _>>()?;
                self.and(lits)?
            }
            StlFormula::Or(cs) => {
                let lits = cs.iter().map(|c| self.stl(c, t)).collect::<Result<_, _>>()?;
                self.or(lits)?
            }
            StlFormula::Always(a, b, c) => {
                let lits = (t + a..=t + b).map(|s| self.stl(c, s)).collect::<Result<_, _>>()?;
                self.and(lits)?
            }
            StlFormula::Eventually(a, b, c) => {
                let lits = (t + a..=t + b).map(|s| self.stl(c, s)).collect::<Result<_, _>>()?;
                self.or(lits)?
            }
            StlFormula::Until(a, b, l, r) => {
                let lits = self.until_terms(*a, *b, l, r, t)?;
                self.or(lits)?
            }
            StlFormula::SpatialAtom(psi) => {
                if self.ctx.leaves.is_empty() {
                    return Err(EncodeError::SpatialAtomInStl);
                }
                self.tssl(psi, NodeId::ROOT, t)?
            }
        };
        self.memo.insert(k, lit);
        Ok(lit)
    }

    /// One literal per candidate switching step `t'`: `r(t') and l on [t, t']`.
    fn until_terms(
        &mut self,
        a: usize,
        b: usize,
        l: &StlFormula,
        r: &StlFormula,
        t: usize,
    ) -> Result<Vec<Lit>, EncodeError> {
        let mut out = Vec::new();
        for tp in t + a..=t + b {
            let mut parts = vec![self.stl(r, tp)?];
            for s in t..=tp {
                parts.push(self.stl(l, s)?);
            }
            out.push(self.and(parts)?);
        }
        Ok(out)
    }

    fn require_stl(&mut self, f: &StlFormula, t: usize) -> Result<(), EncodeError> {
        match f {
            StlFormula::True => Ok(()),
            StlFormula::Pred(p) => {
                let e = self.predicate_expr(&p.coeffs, p.offset, t);
                let eps = self.ctx.eps;
                self.require_ge(&e, eps)
            }
            StlFormula::NotPred(p) => {
                let e = -self.predicate_expr(&p.coeffs, p.offset, t);
                self.require_ge(&e, 0.0)
            }
            StlFormula::And(cs) => cs.iter().try_for_each(|c| self.require_stl(c, t)),
            StlFormula::Always(a, b, c) => (t + a..=t + b).try_for_each(|s| self.require_stl(c, s)),
            StlFormula::SpatialAtom(psi) => {
                if self.ctx.leaves.is_empty() {
                    return Err(EncodeError::SpatialAtomInStl);
                }
                self.require_tssl(psi, NodeId::ROOT, t)
            }
            StlFormula::Or(_) | StlFormula::Eventually(..) => {
                let lits = match f {
                    StlFormula::Or(cs) => cs.iter().map(|c| self.stl(c, t)).collect::<Result<_, _>>()?,
                    StlFormula::Eventually(a, b, c) => {
                        (t + a..=t + b).map(|s| self.stl(c, s)).collect::<Result<_, _>>()?
                    }
                    _ => unreachable!(),
                };
                self.require_any(lits)
            }
            StlFormula::Until(a, b, l, r) => {
                let lits = self.until_terms(*a, *b, l, r, t)?;
                self.require_any(lits)
            }
        }
    }

    /// Mean of the leaf expressions under `v` at local step `t`.
    fn node_expr(&mut self, v: NodeId, t: usize) -> LinExpr {
        if let Some(e) = self.nodes.get(&(v, t)) {
            return e.clone();
        }
        let leaves = &self.ctx.leaves[t];
        let depth = leaves.side().trailing_zeros();
        let (rows, cols) = v.leaf_range(depth);
        let count = (rows.len() * cols.len()) as f64;
        let mut e = LinExpr::zero();
        for m in rows {
            for n in cols.clone() {
                e += leaves.get(m, n).clone();
            }
        }
        let e = (e * (1.0 / count)).normalized();
        self.nodes.insert((v, t), e.clone());
        e
    }

    fn successors(&self, v: NodeId, labels: crate::logic::LabelSet, t: usize) -> Vec<NodeId> {
        let depth = self.ctx.leaves[t].side().trailing_zeros();
        if v.level == depth {
            return if labels.is_empty() { Vec::new() } else { vec![v] };
        }
        labels.iter().map(|q| v.child(q)).collect()
    }

    fn tssl(&mut self, f: &TsslFormula, v: NodeId, t: usize) -> Result<Lit, EncodeError> {
        let k = key(f, Some(v), t);
        if let Some(l) = self.memo.get(&k) {
            return Ok(*l);
        }
        let eps = self.ctx.eps;
        let lit = match f {
            TsslFormula::True => Lit::Const(true),
            TsslFormula::ValCmp(c, d) => {
                let mu = self.node_expr(v, t);
                let d = *d;
                match c {
                    Comparison::Le => self.reify_ge(&-mu, -d, |x| x >= -d)?,
                    Comparison::Ge => self.reify_ge(&mu, d, |x| x >= d)?,
                }
            }
            TsslFormula::NotValCmp(c, d) => {
                let mu = self.node_expr(v, t);
                let d = *d;
                match c {
                    Comparison::Le => self.reify_ge(&mu, d + eps, |x| x > d)?,
                    Comparison::Ge => self.reify_ge(&-mu, -d + eps, |x| x > -d)?,
                }
            }
            TsslFormula::And(cs) => {
                let lits = cs.iter().map(|c| self.tssl(c, v, t)).collect::<Result<_, _>>()?;
                self.and(lits)?
            }
            TsslFormula::Or(cs) => {
                let lits = cs.iter().map(|c| self.tssl(c, v, t)).collect::<Result<_, _>>()?;
                self.or(lits)?
            }
            TsslFormula::ForAllNext(b, c) => {
                let lits = self
                    .successors(v, *b, t)
                    .into_iter()
                    .map(|w| self.tssl(c, w, t))
                    .collect::<Result<_, _>>()?;
                self.and(lits)?
            }
            TsslFormula::ExistsNext(b, c) => {
                let lits = self
                    .successors(v, *b, t)
                    .into_iter()
                    .map(|w| self.tssl(c, w, t))
                    .collect::<Result<_, _>>()?;
                self.or(lits)?
            }
        };
        self.memo.insert(k, lit);
        Ok(lit)
    }

    fn require_tssl(&mut self, f: &TsslFormula, v: NodeId, t: usize) -> Result<(), EncodeError> {
        let eps = self.ctx.eps;
        match f {
            TsslFormula::True => Ok(()),
            TsslFormula::ValCmp(c, d) => {
                let mu = self.node_expr(v, t);
                match c {
                    Comparison::Le => self.require_ge(&-mu, -d),
                    Comparison::Ge => self.require_ge(&mu, *d),
                }
            }
            TsslFormula::NotValCmp(c, d) => {
                let mu = self.node_expr(v, t);
                match c {
                    Comparison::Le => self.require_ge(&mu, d + eps),
                    Comparison::Ge => self.require_ge(&-mu, -d + eps),
                }
            }
            TsslFormula::And(cs) => cs.iter().try_for_each(|c| self.require_tssl(c, v, t)),
            TsslFormula::ForAllNext(b, c) => self
                .successors(v, *b, t)
                .into_iter()
                .try_for_each(|w| self.require_tssl(c, w, t)),
            TsslFormula::Or(_) | TsslFormula::ExistsNext(..) => {
                let lit = self.tssl(f, v, t)?;
                self.require_any(vec![lit])
            }
        }
    }
}

fn check_stl(f: &StlFormula, ctx: &EncodingContext, t: usize, spatial: bool) -> Result<(), EncodeError> {
    let len = if spatial { ctx.leaves.len() } else { ctx.signal.len() };
    if spatial && len == 0 {
        return Err(EncodeError::NoOccupancy);
    }
    let needed = t + horizon(f);
    if needed >= len {
        return Err(EncodeError::WindowExceedsHorizon { needed, horizon: len });
    }
    if spatial {
        if f.dimension() > 0 {
            return Err(EncodeError::PredicateInSpatel);
        }
    } else {
        if f.contains_spatial() {
            return Err(EncodeError::SpatialAtomInStl);
        }
        let dim = ctx.signal[0].len();
        if f.dimension() > dim {
            return Err(EncodeError::DimensionMismatch {
                coeffs: f.dimension(),
                dim,
            });
        }
    }
    Ok(())
}

/// Reified STL: the returned literal is 1 iff `f` holds at local step `t`
/// (predicates with margin `ctx.eps`).
pub fn encode_stl(
    model: &mut MilpModel,
    ctx: &mut EncodingContext,
    f: &StlFormula,
    t: usize,
) -> Result<Lit, EncodeError> {
    check_stl(f, ctx, t, false)?;
    Lowering::new(model, ctx).stl(f, t)
}

/// Adds rows forcing `f` to hold at local step `t`.
pub fn require_stl(
    model: &mut MilpModel,
    ctx: &mut EncodingContext,
    f: &StlFormula,
    t: usize,
) -> Result<(), EncodeError> {
    check_stl(f, ctx, t, false)?;
    Lowering::new(model, ctx).require_stl(f, t)
}

/// Reified TSSL formula at node `v` of the step-`t` quadtree.
pub fn encode_tssl(
    model: &mut MilpModel,
    ctx: &mut EncodingContext,
    f: &TsslFormula,
    v: NodeId,
    t: usize,
) -> Result<Lit, EncodeError> {
    if t >= ctx.leaves.len() {
        return Err(EncodeError::WindowExceedsHorizon {
            needed: t,
            horizon: ctx.leaves.len(),
        });
    }
    Lowering::new(model, ctx).tssl(f, v, t)
}

/// Reified SpaTeL formula (temporal operators over root-evaluated spatial atoms).
pub fn encode_spatel(
    model: &mut MilpModel,
    ctx: &mut EncodingContext,
    f: &StlFormula,
    t: usize,
) -> Result<Lit, EncodeError> {
    check_stl(f, ctx, t, true)?;
    Lowering::new(model, ctx).stl(f, t)
}

pub fn require_spatel(
    model: &mut MilpModel,
    ctx: &mut EncodingContext,
    f: &StlFormula,
    t: usize,
) -> Result<(), EncodeError> {
    check_stl(f, ctx, t, true)?;
    Lowering::new(model, ctx).require_stl(f, t)
}

/// `G[a, b]` of the conjunction of all patterns.
pub fn pattern_formula(patterns: &Patterns, window: (usize, usize)) -> Result<StlFormula, EncodeError> {
    if window.0 > window.1 {
        return Err(EncodeError::EmptyWindow);
    }
    Ok(StlFormula::always(
        window.0,
        window.1,
        StlFormula::SpatialAtom(patterns.conjunction()),
    ))
}
