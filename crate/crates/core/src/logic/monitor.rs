use super::{LogicError, Signal, StlFormula};

/// Number of future samples the verdict at step k depends on.
pub fn horizon(f: &StlFormula) -> usize {
    match f {
        StlFormula::True | StlFormula::Pred(_) | StlFormula::NotPred(_) | StlFormula::SpatialAtom(_) => 0,
        StlFormula::And(cs) | StlFormula::Or(cs) => cs.iter().map(horizon).max().unwrap_or(0),
        StlFormula::Always(_, b, c) | StlFormula::Eventually(_, b, c) => b + horizon(c),
        StlFormula::Until(_, b, l, r) => b + horizon(l).max(horizon(r)),
    }
}

/// Boolean satisfaction of `f` by signal `s` at step `k`.
pub fn eval_stl(f: &StlFormula, s: &Signal, k: usize) -> Result<bool, LogicError> {
    if f.contains_spatial() {
        return Err(LogicError::SpatialAtom);
    }
    let needed = k + horizon(f);
    if needed >= s.len() {
        return Err(LogicError::SignalTooShort {
            len: s.len(),
            step: k,
            needed,
        });
    }
    if f.dimension() > s.dim() {
        return Err(LogicError::DimensionMismatch {
            coeffs: f.dimension(),
            dim: s.dim(),
        });
    }
    Ok(eval(f, s, k))
}

fn eval(f: &StlFormula, s: &Signal, k: usize) -> bool {
    match f {
        StlFormula::True => true,
        StlFormula::Pred(p) => p.value(s.sample(k)).expect("dimension checked") > 0.0,
        StlFormula::NotPred(p) => p.value(s.sample(k)).expect("dimension checked") <= 0.0,
        StlFormula::And(cs) => cs.iter().all(|c| eval(c, s, k)),
        StlFormula::Or(cs) => cs.iter().any(|c| eval(c, s, k)),
        StlFormula::Always(a, b, c) => (k + a..=k + b).all(|t| eval(c, s, t)),
        StlFormula::Eventually(a, b, c) => (k + a..=k + b).any(|t| eval(c, s, t)),
        StlFormula::Until(a, b, l, r) => {
            // the left operand must hold on [k, t'] inclusive
            (k + a..=k + b).any(|tp| eval(r, s, tp) && (k..=tp).all(|t| eval(l, s, t)))
        }
        StlFormula::SpatialAtom(_) => unreachable!("rejected before evaluation"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{parse_stl, Predicate};

    fn gt0() -> StlFormula {
        StlFormula::Pred(Predicate::new(vec![1.0], 0.0))
    }

    #[test]
    fn always_positive() {
        let f = StlFormula::always(0, 2, gt0());
        assert!(eval_stl(&f, &Signal::scalar(&[1.0, 2.0, 3.0]), 0).unwrap());
    }

    #[test]
    fn eventually_is_strict() {
        let f = StlFormula::eventually(0, 2, gt0());
        assert!(!eval_stl(&f, &Signal::scalar(&[-1.0, -1.0, 0.0]), 0).unwrap());
    }

    #[test]
    fn until_satisfied() {
        let f = parse_stl("x1 > 0 U[0,2] x1 > 5").unwrap();
        let s = Signal::scalar(&[1.0, 2.0, 6.0, -4.0, -4.0]);
        assert!(eval_stl(&f, &s, 0).unwrap());
        // left must also hold at the step where the right side fires
        let s = Signal::scalar(&[1.0, 2.0, 6.0]);
        let f2 = parse_stl("x1 < 6 U[0,2] x1 > 5").unwrap();
        assert!(!eval_stl(&f2, &s, 0).unwrap());
    }

    #[test]
    fn horizons() {
        assert_eq!(horizon(&gt0()), 0);
        assert_eq!(horizon(&StlFormula::always(0, 50, gt0())), 50);
        let nested = StlFormula::eventually(0, 3, StlFormula::always(0, 2, gt0()));
        assert_eq!(horizon(&nested), 5);
    }

    #[test]
    fn too_short_signal() {
        let f = StlFormula::always(0, 3, gt0());
        assert!(matches!(
            eval_stl(&f, &Signal::scalar(&[1.0, 1.0]), 0),
            Err(LogicError::SignalTooShort { .. })
        ));
    }
}
