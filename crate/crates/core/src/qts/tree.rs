use crate::logic::Quadrant;

use super::{GridMatrix, QtsError};

/// Node of the quadtree: `level` 0 is the root, `level == depth` are leaves.
/// `(row, col)` index the node inside the `2^level x 2^level` grid of its level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId {
    pub level: u32,
    pub row: usize,
    pub col: usize,
}

impl NodeId {
    pub const ROOT: NodeId = NodeId {
        level: 0,
        row: 0,
        col: 0,
    };

    pub fn child(self, q: Quadrant) -> NodeId {
        let (dr, dc) = q.offset();
        NodeId {
            level: self.level + 1,
            row: 2 * self.row + dr,
            col: 2 * self.col + dc,
        }
    }

    /// Leaf cells `(m, n)` covered by this node in a tree of the given depth.
    pub fn leaf_range(self, depth: u32) -> (std::ops::Range<usize>, std::ops::Range<usize>) {
        let span = 1usize << (depth - self.level);
        (
            self.row * span..(self.row + 1) * span,
            self.col * span..(self.col + 1) * span,
        )
    }

    /// Label path from the root.
    pub fn path(self) -> Vec<Quadrant> {
        (0..self.level)
            .rev()
            .map(|shift| Quadrant::from_offset((self.row >> shift) & 1, (self.col >> shift) & 1))
            .collect()
    }
}

/// Quad transition system: complete quadtree with averaged valuations.
#[derive(Debug, Clone, PartialEq)]
pub struct Qts {
    depth: u32,
    /// `levels[l]` holds the `2^l x 2^l` valuations of level `l`, row-major.
    levels: Vec<Vec<f64>>,
}

impl Qts {
    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn root(&self) -> NodeId {
        NodeId::ROOT
    }

    pub fn is_leaf(&self, v: NodeId) -> bool {
        v.level == self.depth
    }

    pub fn valuation(&self, v: NodeId) -> f64 {
        let side = 1usize << v.level;
        self.levels[v.level as usize][v.row * side + v.col]
    }

    pub fn leaf_valuation(&self, m: usize, n: usize) -> f64 {
        self.valuation(NodeId {
            level: self.depth,
            row: m,
            col: n,
        })
    }

    /// Labelled successors. A leaf's only successor is itself, under every label.
    pub fn children(&self, v: NodeId) -> [(Quadrant, NodeId); 4] {
        if self.is_leaf(v) {
            Quadrant::ALL.map(|q| (q, v))
        } else {
            Quadrant::ALL.map(|q| (q, v.child(q)))
        }
    }

    pub fn node_count(&self) -> usize {
        self.levels.iter().map(|l| l.len()).sum()
    }

    pub fn leaf_count(&self) -> usize {
        self.levels[self.depth as usize].len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..=self.depth).flat_map(|level| {
            let side = 1usize << level;
            (0..side * side).map(move |i| NodeId {
                level,
                row: i / side,
                col: i % side,
            })
        })
    }
}

/// Builds the quadtree over a `2^D x 2^D` matrix of leaf valuations.
pub fn build_qts(values: &GridMatrix<f64>) -> Result<Qts, QtsError> {
    let side = values.side();
    if side < 2 || !side.is_power_of_two() {
        return Err(QtsError::NotPowerOfTwo(side));
    }
    let depth = side.trailing_zeros();
    let mut levels = vec![Vec::new(); depth as usize + 1];
    levels[depth as usize] = values.as_slice().to_vec();
    for level in (0..depth as usize).rev() {
        let s = 1usize << level;
        let below = &levels[level + 1];
        let mut cur = Vec::with_capacity(s * s);
        for r in 0..s {
            for c in 0..s {
                let at = |dr: usize, dc: usize| below[(2 * r + dr) * (2 * s) + 2 * c + dc];
                cur.push(0.25 * (at(0, 0) + at(0, 1) + at(1, 0) + at(1, 1)));
            }
        }
        levels[level] = cur;
    }
    Ok(Qts { depth, levels })
}

/// Reference 8x8 communication-quality matrix (D = 3) used throughout the tests.
pub fn reference_capacity_rows() -> Vec<Vec<u32>> {
    vec![
        vec![6, 4, 3, 2, 2, 3, 3, 2],
        vec![4, 4, 4, 3, 3, 4, 6, 3],
        vec![3, 4, 4, 2, 0, 0, 4, 3],
        vec![2, 3, 3, 2, 1, 2, 3, 2],
        vec![2, 3, 0, 0, 0, 3, 3, 2],
        vec![3, 4, 0, 2, 3, 4, 4, 3],
        vec![4, 4, 4, 3, 3, 4, 6, 3],
        vec![6, 4, 3, 2, 2, 3, 3, 2],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_root_mean() {
        let q = build_qts(&GridMatrix::from_rows(vec![vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap()).unwrap();
        assert_eq!(q.valuation(q.root()), 2.5);
        assert_eq!(q.node_count(), 5);
        assert_eq!(q.leaf_valuation(1, 0), 3.0);
        assert_eq!(q.valuation(NodeId::ROOT.child(Quadrant::SW)), 3.0);
    }

    #[test]
    fn reference_matrix_root() {
        let rows = reference_capacity_rows();
        // oracle: direct sum of the printed entries
        let total: u32 = rows.iter().flatten().sum();
        assert_eq!(total, 186);
        let m = GridMatrix::from_rows(rows).unwrap().map(|v| *v as f64);
        let q = build_qts(&m).unwrap();
        assert_eq!(q.valuation(q.root()), 186.0 / 64.0);
        assert_eq!(q.leaf_count(), 64);
        assert_eq!(q.node_count(), (4usize.pow(4) - 1) / 3);
    }

    #[test]
    fn uniform_fixpoint() {
        let q = build_qts(&GridMatrix::filled(8, 1.5)).unwrap();
        assert!(q.nodes().all(|v| q.valuation(v) == 1.5));
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(build_qts(&GridMatrix::filled(3, 0.0)).is_err());
        assert!(build_qts(&GridMatrix::filled(1, 0.0)).is_err());
    }

    #[test]
    fn node_paths() {
        let v = NodeId::ROOT.child(Quadrant::SE).child(Quadrant::NW).child(Quadrant::NW);
        assert_eq!((v.row, v.col), (4, 4));
        assert_eq!(v.path(), vec![Quadrant::SE, Quadrant::NW, Quadrant::NW]);
        let (rows, cols) = NodeId::ROOT.child(Quadrant::NE).leaf_range(3);
        assert_eq!((rows, cols), (0..4, 4..8));
    }
}
