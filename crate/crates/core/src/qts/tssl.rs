use crate::logic::{horizon, Comparison, StlFormula, TsslFormula};

use super::{NodeId, Qts, QtsError};

fn compare(c: Comparison, mu: f64, d: f64) -> bool {
    match c {
        Comparison::Le => mu <= d,
        Comparison::Ge => mu >= d,
    }
}

/// Satisfaction of a spatial formula at node `v`.
pub fn eval_tssl(f: &TsslFormula, q: &Qts, v: NodeId) -> bool {
    match f {
        TsslFormula::True => true,
        TsslFormula::ValCmp(c, d) => compare(*c, q.valuation(v), *d),
        TsslFormula::NotValCmp(c, d) => !compare(*c, q.valuation(v), *d),
        TsslFormula::And(cs) => cs.iter().all(|c| eval_tssl(c, q, v)),
        TsslFormula::Or(cs) => cs.iter().any(|c| eval_tssl(c, q, v)),
        TsslFormula::ForAllNext(b, c) => q
            .children(v)
            .iter()
            .filter(|(l, _)| b.contains(*l))
            .all(|(_, w)| eval_tssl(c, q, *w)),
        TsslFormula::ExistsNext(b, c) => q
            .children(v)
            .iter()
            .filter(|(l, _)| b.contains(*l))
            .any(|(_, w)| eval_tssl(c, q, *w)),
    }
}

/// Node at which a failing formula breaks, following the first failing branch.
pub fn failing_node(f: &TsslFormula, q: &Qts, v: NodeId) -> Option<NodeId> {
    if eval_tssl(f, q, v) {
        return None;
    }
    match f {
        TsslFormula::And(cs) => cs.iter().find_map(|c| failing_node(c, q, v)),
        TsslFormula::ForAllNext(b, c) => q
            .children(v)
            .iter()
            .filter(|(l, _)| b.contains(*l))
            .find_map(|(_, w)| failing_node(c, q, *w)),
        _ => Some(v),
    }
}

/// Sequence of QTS snapshots sharing one tree shape, indexed by step.
#[derive(Debug, Clone, Default)]
pub struct QtsTrace {
    snapshots: Vec<Qts>,
}

impl QtsTrace {
    pub fn new(snapshots: Vec<Qts>) -> Result<Self, QtsError> {
        if let Some(first) = snapshots.first() {
            if snapshots.iter().any(|s| s.depth() != first.depth()) {
                return Err(QtsError::ShapeMismatch);
            }
        }
        Ok(QtsTrace { snapshots })
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn at(&self, t: usize) -> &Qts {
        &self.snapshots[t]
    }
}

/// SpaTeL satisfaction at step `k`: temporal operators over the trace, spatial
/// atoms evaluated at the root of the snapshot.
pub fn eval_spatel(f: &StlFormula, trace: &QtsTrace, k: usize) -> Result<bool, QtsError> {
    let needed = k + horizon(f);
    if needed >= trace.len() {
        return Err(QtsError::TraceTooShort {
            len: trace.len(),
            needed,
        });
    }
    eval(f, trace, k)
}

fn eval(f: &StlFormula, tr: &QtsTrace, k: usize) -> Result<bool, QtsError> {
    Ok(match f {
        StlFormula::True => true,
        StlFormula::Pred(_) | StlFormula::NotPred(_) => return Err(QtsError::PredicateInSpatel),
        StlFormula::SpatialAtom(psi) => eval_tssl(psi, tr.at(k), NodeId::ROOT),
        StlFormula::And(cs) => {
            for c in cs {
                if !eval(c, tr, k)? {
                    return Ok(false);
                }
            }
            true
        }
        StlFormula::Or(cs) => {
            for c in cs {
                if eval(c, tr, k)? {
                    return Ok(true);
                }
            }
            false
        }
        StlFormula::Always(a, b, c) => {
            for t in k + a..=k + b {
                if !eval(c, tr, t)? {
                    return Ok(false);
                }
            }
            true
        }
        StlFormula::Eventually(a, b, c) => {
            for t in k + a..=k + b {
                if eval(c, tr, t)? {
                    return Ok(true);
                }
            }
            false
        }
        StlFormula::Until(a, b, l, r) => {
            for tp in k + a..=k + b {
                if eval(r, tr, tp)? {
                    let mut ok = true;
                    for t in k..=tp {
                        if !eval(l, tr, t)? {
                            ok = false;
                            break;
                        }
                    }
                    if ok {
                        return Ok(true);
                    }
                }
            }
            false
        }
    })
}
