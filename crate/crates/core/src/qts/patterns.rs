use crate::logic::{LabelSet, Quadrant, TsslFormula};

use super::{CapacityMatrix, NodeId, QtsError};

/// `forall B1 o forall B2 o ... (mu <= threshold)`.
#[derive(Debug, Clone, PartialEq)]
struct Chain {
    path: Vec<LabelSet>,
    threshold: f64,
}

impl Chain {
    fn into_formula(self) -> TsslFormula {
        self.path
            .into_iter()
            .rev()
            .fold(TsslFormula::le(self.threshold), |f, b| TsslFormula::forall(b, f))
    }
}

/// The five spatial patterns: `psi[0]` keeps obstacle cells empty, `psi[1..5]`
/// cap the per-cell agent count in the NW, NE, SW and SE quadrants.
#[derive(Debug, Clone, PartialEq)]
pub struct Patterns {
    pub psi: [TsslFormula; 5],
}

impl Patterns {
    pub fn obstacles(&self) -> &TsslFormula {
        &self.psi[0]
    }

    pub fn capacities(&self) -> &[TsslFormula] {
        &self.psi[1..]
    }

    pub fn conjunction(&self) -> TsslFormula {
        TsslFormula::And(self.psi.to_vec())
    }
}

/// Root-to-leaf chains below `node` for the leaves accepted by `leaf`.
/// Siblings whose subtrees yield identical chains share one label set.
fn chains(node: NodeId, depth: u32, leaf: &dyn Fn(usize, usize) -> Option<f64>) -> Vec<Chain> {
    if node.level == depth {
        return leaf(node.row, node.col)
            .map(|threshold| Chain {
                path: Vec::new(),
                threshold,
            })
            .into_iter()
            .collect();
    }
    let mut groups: Vec<(Vec<Quadrant>, Vec<Chain>)> = Vec::new();
    for q in Quadrant::ALL {
        let sub = chains(node.child(q), depth, leaf);
        if sub.is_empty() {
            continue;
        }
        match groups.iter_mut().find(|(_, c)| *c == sub) {
            Some((labels, _)) => labels.push(q),
            None => groups.push((vec![q], sub)),
        }
    }
    groups
        .into_iter()
        .flat_map(|(labels, sub)| {
            let set = LabelSet::new(&labels).expect("group has a label");
            sub.into_iter().map(move |mut c| {
                c.path.insert(0, set);
                c
            })
        })
        .collect()
}

/// Generates the obstacle and capacity patterns for a capacity matrix.
pub fn generate_patterns(cap: &CapacityMatrix) -> Result<Patterns, QtsError> {
    let side = cap.side();
    if side < 2 || !side.is_power_of_two() {
        return Err(QtsError::NotPowerOfTwo(side));
    }
    let depth = side.trailing_zeros();
    let obstacle = |m: usize, n: usize| (*cap.get(m, n) == 0).then_some(0.0);
    let free = |m: usize, n: usize| {
        let c = *cap.get(m, n);
        (c > 0).then_some(c as f64)
    };
    let conj = |cs: Vec<Chain>| TsslFormula::conj(cs.into_iter().map(Chain::into_formula).collect());

    let psi1 = conj(chains(NodeId::ROOT, depth, &obstacle));
    let quadrant = |q: Quadrant| {
        let cs = chains(NodeId::ROOT.child(q), depth, &free)
            .into_iter()
            .map(|mut c| {
                c.path.insert(0, LabelSet::single(q));
                c
            })
            .collect();
        conj(cs)
    };
    Ok(Patterns {
        psi: [
            psi1,
            quadrant(Quadrant::NW),
            quadrant(Quadrant::NE),
            quadrant(Quadrant::SW),
            quadrant(Quadrant::SE),
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qts::{build_qts, eval_tssl, reference_capacity_rows, GridMatrix};

    fn fig2() -> CapacityMatrix {
        GridMatrix::from_rows(reference_capacity_rows()).unwrap()
    }

    fn set(labels: &[Quadrant]) -> LabelSet {
        LabelSet::new(labels).unwrap()
    }

    fn chain(path: &[LabelSet], d: f64) -> TsslFormula {
        Chain {
            path: path.to_vec(),
            threshold: d,
        }
        .into_formula()
    }

    use Quadrant::*;

    #[test]
    fn reference_capacity_pattern_matches_expected_conjuncts() {
        let p = generate_patterns(&fig2()).unwrap();
        let TsslFormula::And(psi2) = &p.psi[1] else {
            panic!("{:?}", p.psi[1])
        };
        let nw = set(&[NW]);
        assert_eq!(psi2[0], chain(&[nw, nw, nw], 6.0));
        assert_eq!(psi2[1], chain(&[nw, nw, set(&[NE, SW, SE])], 4.0));
        assert!(psi2.contains(&chain(&[nw, set(&[NE]), set(&[NW, SE])], 3.0)));
        assert!(psi2.contains(&chain(&[nw, set(&[SE]), set(&[NE, SE])], 2.0)));
        assert_eq!(psi2.len(), 11);
    }

    #[test]
    fn obstacle_pattern_matches_expected_chains() {
        let p = generate_patterns(&fig2()).unwrap();
        let TsslFormula::And(psi1) = &p.psi[0] else { panic!() };
        assert_eq!(psi1.len(), 3);
        assert!(psi1.contains(&chain(&[set(&[SE]), set(&[NW]), set(&[NW])], 0.0)));
        assert!(psi1.contains(&chain(&[set(&[SW]), set(&[NE]), set(&[NW, NE, SW])], 0.0)));
        assert!(psi1.contains(&chain(&[set(&[NE]), set(&[SW]), set(&[NW, NE])], 0.0)));
    }

    #[test]
    fn uniform_capacity_merges_fully() {
        let p = generate_patterns(&GridMatrix::filled(8, 1u32)).unwrap();
        assert_eq!(p.psi[0], TsslFormula::True);
        for (i, q) in Quadrant::ALL.into_iter().enumerate() {
            assert_eq!(p.psi[i + 1], chain(&[set(&[q]), LabelSet::ALL, LabelSet::ALL], 1.0));
        }
    }

    #[test]
    fn capacity_pattern_holds_on_capacity_itself() {
        let cap = fig2();
        let p = generate_patterns(&cap).unwrap();
        let q = build_qts(&cap.to_f64()).unwrap();
        assert!(p.psi.iter().all(|f| eval_tssl(f, &q, q.root())));
        let over = build_qts(&cap.map(|c| *c as f64 + 1.0)).unwrap();
        assert!(p.psi.iter().all(|f| !eval_tssl(f, &over, over.root())));
        let empty = build_qts(&GridMatrix::filled(8, 0.0)).unwrap();
        assert!(eval_tssl(&p.conjunction(), &empty, empty.root()));
    }
}
