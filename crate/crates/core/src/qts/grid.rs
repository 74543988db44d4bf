use serde::{Deserialize, Serialize};

use super::QtsError;

/// Square matrix over the grid cells, row 0 = northernmost row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<T>>", into = "Vec<Vec<T>>")]
#[serde(bound(
    serialize = "T: Clone + Serialize",
    deserialize = "T: Clone + serde::de::DeserializeOwned"
))]
pub struct GridMatrix<T> {
    side: usize,
    data: Vec<T>,
}

pub type CapacityMatrix = GridMatrix<u32>;
pub type OccupancyCounts = GridMatrix<u32>;

impl<T: Clone> GridMatrix<T> {
    pub fn filled(side: usize, value: T) -> Self {
        GridMatrix {
            side,
            data: vec![value; side * side],
        }
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self, QtsError> {
        let side = rows.len();
        if rows.iter().any(|r| r.len() != side) {
            return Err(QtsError::NotSquare);
        }
        Ok(GridMatrix {
            side,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn from_fn(side: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(side * side);
        for m in 0..side {
            for n in 0..side {
                data.push(f(m, n));
            }
        }
        GridMatrix { side, data }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn get(&self, m: usize, n: usize) -> &T {
        &self.data[m * self.side + n]
    }

    pub fn get_mut(&mut self, m: usize, n: usize) -> &mut T {
        &mut self.data[m * self.side + n]
    }

    pub fn set(&mut self, m: usize, n: usize, v: T) {
        self.data[m * self.side + n] = v;
    }

    pub fn rows(&self) -> Vec<Vec<T>> {
        self.data.chunks(self.side.max(1)).map(|r| r.to_vec()).collect()
    }

    /// Row-major entries, north row first.
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> GridMatrix<U> {
        GridMatrix {
            side: self.side,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.side).flat_map(move |m| (0..self.side).map(move |n| (m, n)))
    }
}

impl<T: Clone> TryFrom<Vec<Vec<T>>> for GridMatrix<T> {
    type Error = QtsError;

    fn try_from(rows: Vec<Vec<T>>) -> Result<Self, Self::Error> {
        GridMatrix::from_rows(rows)
    }
}

impl<T: Clone> From<GridMatrix<T>> for Vec<Vec<T>> {
    fn from(m: GridMatrix<T>) -> Self {
        m.rows()
    }
}

impl GridMatrix<u32> {
    pub fn to_f64(&self) -> GridMatrix<f64> {
        self.map(|v| *v as f64)
    }

    pub fn total(&self) -> u64 {
        self.data.iter().map(|v| *v as u64).sum()
    }

    /// Cells holding zero, i.e. obstacles when read as a capacity matrix.
    pub fn zero_cells(&self) -> Vec<(usize, usize)> {
        self.cells().filter(|&(m, n)| *self.get(m, n) == 0).collect()
    }
}

/// Square workspace divided into `2^depth x 2^depth` cells.
///
/// `origin` is the south-west corner. Cell `(m, n)` covers
/// `[west, east) x (south, north]`, with row 0 the northernmost row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub origin: [f64; 2],
    pub side: f64,
    pub depth: u32,
}

impl Grid {
    pub fn new(origin: [f64; 2], side: f64, depth: u32) -> Result<Self, QtsError> {
        if !(side > 0.0) {
            return Err(QtsError::BadGrid(format!("side must be positive, got {side}")));
        }
        if depth == 0 || depth > 12 {
            return Err(QtsError::BadGrid(format!("depth must be in 1..=12, got {depth}")));
        }
        Ok(Grid { origin, side, depth })
    }

    /// Cells per row.
    pub fn cells_per_side(&self) -> usize {
        1 << self.depth
    }

    pub fn cell_side(&self) -> f64 {
        self.side / self.cells_per_side() as f64
    }

    pub fn west(&self, n: usize) -> f64 {
        self.origin[0] + n as f64 * self.cell_side()
    }

    pub fn east(&self, n: usize) -> f64 {
        self.origin[0] + (n + 1) as f64 * self.cell_side()
    }

    pub fn north(&self, m: usize) -> f64 {
        self.origin[1] + self.side - m as f64 * self.cell_side()
    }

    pub fn south(&self, m: usize) -> f64 {
        self.origin[1] + self.side - (m + 1) as f64 * self.cell_side()
    }

    pub fn center(&self, m: usize, n: usize) -> [f64; 2] {
        let w = self.cell_side();
        [self.west(n) + 0.5 * w, self.south(m) + 0.5 * w]
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        p[0] >= self.origin[0]
            && p[0] <= self.origin[0] + self.side
            && p[1] >= self.origin[1]
            && p[1] <= self.origin[1] + self.side
    }

    /// Cell index of a position; positions outside the workspace clamp to the
    /// nearest boundary cell.
    pub fn cell_of(&self, p: [f64; 2]) -> (usize, usize) {
        let last = (self.cells_per_side() - 1) as f64;
        let w = self.cell_side();
        let col = ((p[0] - self.origin[0]) / w).floor().clamp(0.0, last);
        let row = ((self.origin[1] + self.side - p[1]) / w).floor().clamp(0.0, last);
        (row as usize, col as usize)
    }

    pub fn occupancy_counts(&self, positions: &[[f64; 2]]) -> OccupancyCounts {
        let mut counts = GridMatrix::filled(self.cells_per_side(), 0u32);
        for p in positions {
            let (m, n) = self.cell_of(*p);
            *counts.get_mut(m, n) += 1;
        }
        counts
    }
}

/// Free-function form of [`Grid::cell_of`].
pub fn cell_of(p: [f64; 2], g: &Grid) -> (usize, usize) {
    g.cell_of(p)
}

/// Free-function form of [`Grid::occupancy_counts`].
pub fn occupancy_counts(positions: &[[f64; 2]], g: &Grid) -> OccupancyCounts {
    g.occupancy_counts(positions)
}
