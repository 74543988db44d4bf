use serde::{Deserialize, Serialize};

use super::{CapacityMatrix, Grid, GridMatrix};

/// Log-distance path-loss quality model.
///
/// Quality falls from `q_max` at distance `<= d0` to zero at `d_cut`,
/// linearly in `log10(d)`. `None` distances default to one cell side and the
/// workspace side respectively.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PathLossParams {
    pub q_max: f64,
    pub d0: Option<f64>,
    pub d_cut: Option<f64>,
    /// Quality levels lost when the line of sight crosses an obstacle cell.
    pub shadow_penalty: f64,
}

impl Default for PathLossParams {
    fn default() -> Self {
        PathLossParams {
            q_max: 6.0,
            d0: None,
            d_cut: None,
            shadow_penalty: 2.0,
        }
    }
}

impl PathLossParams {
    fn distances(&self, g: &Grid) -> (f64, f64) {
        let d0 = self.d0.unwrap_or_else(|| g.cell_side());
        let d_cut = self.d_cut.unwrap_or(g.side).max(d0 * (1.0 + 1e-9));
        (d0, d_cut)
    }

    /// Unrounded quality at distance `d`.
    pub fn quality(&self, d: f64, g: &Grid) -> f64 {
        let (d0, d_cut) = self.distances(g);
        let ratio = (d.max(d0) / d0).log10() / (d_cut / d0).log10();
        self.q_max * (1.0 - ratio).max(0.0)
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Liang-Barsky test of segment `a -> b` against the closed box `[lo, hi]`.
fn segment_hits_box(a: [f64; 2], b: [f64; 2], lo: [f64; 2], hi: [f64; 2]) -> bool {
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for k in 0..2 {
        let d = b[k] - a[k];
        for (p, q) in [(-d, a[k] - lo[k]), (d, hi[k] - a[k])] {
            if p == 0.0 {
                if q < 0.0 {
                    return false;
                }
            } else {
                let r = q / p;
                if p < 0.0 {
                    t0 = t0.max(r);
                } else {
                    t1 = t1.min(r);
                }
                if t0 > t1 {
                    return false;
                }
            }
        }
    }
    true
}

/// Base-station quality per cell: path loss to the nearest station, minus the
/// shadowing penalty when the line of sight to that station crosses another
/// obstacle cell, rounded to an integer level. Obstacle cells get 0 and free
/// cells at least 1, so the zero entries are exactly the obstacles.
pub fn base_station_matrix(
    stations: &[[f64; 2]],
    obstacles: &[(usize, usize)],
    g: &Grid,
    params: &PathLossParams,
) -> CapacityMatrix {
    let side = g.cells_per_side();
    GridMatrix::from_fn(side, |m, n| {
        if obstacles.contains(&(m, n)) {
            return 0;
        }
        let c = g.center(m, n);
        let Some(station) = stations.iter().min_by(|a, b| dist(c, **a).total_cmp(&dist(c, **b))) else {
            return 1;
        };
        let mut q = params.quality(dist(c, *station), g);
        // grazing a corner or an edge does not count as blocked
        let shrink = 1e-9 * g.cell_side();
        let shadowed = obstacles.iter().any(|&(om, on)| {
            (om, on) != (m, n)
                && segment_hits_box(
                    c,
                    *station,
                    [g.west(on) + shrink, g.south(om) + shrink],
                    [g.east(on) - shrink, g.north(om) - shrink],
                )
        });
        if shadowed {
            q -= params.shadow_penalty;
        }
        q.round().max(1.0) as u32
    })
}

/// Quality pattern induced by a neighbor at `p`: pure path loss, no shadowing.
pub fn agent_comm_matrix(p: [f64; 2], g: &Grid, params: &PathLossParams) -> GridMatrix<f64> {
    GridMatrix::from_fn(g.cells_per_side(), |m, n| params.quality(dist(g.center(m, n), p), g))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid {
        Grid::new([0.0, 0.0], 160.0, 3).unwrap()
    }

    #[test]
    fn comm_matrix_closed_forms() {
        let g = grid();
        let params = PathLossParams::default();
        let p = g.center(3, 3);
        let c = agent_comm_matrix(p, &g, &params);
        assert_eq!(*c.get(3, 3), 6.0);
        // d0 = 20, d_cut = 160
        let d = (20.0f64 * 160.0).sqrt();
        assert!((params.quality(d, &g) - 3.0).abs() < 1e-12);
        assert_eq!(params.quality(160.0, &g), 0.0);
        assert_eq!(params.quality(500.0, &g), 0.0);
        let far = agent_comm_matrix(
            [0.0, 0.0],
            &g,
            &PathLossParams {
                d_cut: Some(30.0),
                ..params
            },
        );
        assert_eq!(*far.get(0, 7), 0.0);
    }

    #[test]
    fn station_cells_and_obstacles() {
        let g = grid();
        let stations = [[40.0, 120.0], [120.0, 120.0], [40.0, 40.0], [120.0, 40.0]];
        let obstacles = [(2, 4), (2, 5), (4, 2), (4, 3), (4, 4), (5, 2)];
        let c = base_station_matrix(&stations, &obstacles, &g, &PathLossParams::default());
        assert_eq!(*c.get(1, 1), 6);
        for &(m, n) in &obstacles {
            assert_eq!(*c.get(m, n), 0);
        }
        assert_eq!(c.zero_cells(), obstacles.to_vec());
    }

    #[test]
    fn shadowing_lowers_quality() {
        let g = grid();
        let station = [[120.0, 120.0]];
        let params = PathLossParams::default();
        let clear = base_station_matrix(&station, &[], &g, &params);
        let blocked = base_station_matrix(&station, &[(2, 4), (2, 5)], &g, &params);
        // (3, 4) sits below the obstacle pair, whose line of sight to the station crosses (2, 5)
        assert!(blocked.get(3, 4) < clear.get(3, 4));
        assert_eq!(blocked.get(0, 7), clear.get(0, 7));
    }

    #[test]
    fn segment_box() {
        assert!(segment_hits_box([0.0, 0.0], [10.0, 10.0], [4.0, 4.0], [6.0, 6.0]));
        assert!(!segment_hits_box([0.0, 0.0], [10.0, 0.0], [4.0, 1.0], [6.0, 6.0]));
        assert!(segment_hits_box([5.0, 5.0], [5.0, 5.0], [4.0, 4.0], [6.0, 6.0]));
    }
}
