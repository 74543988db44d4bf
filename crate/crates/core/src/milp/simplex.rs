//! Dense bounded-variable primal simplex.
//!
//! Rows are stored as `A x + s = 0` with one logical `s_i` per row whose
//! bounds carry the row sense and right-hand side, so the all-logical basis is
//! the identity. Phase one minimizes the total bound violation of the basic
//! variables; phase two the true objective. Pricing is Dantzig's rule with a
//! switch to Bland's rule after a run of degenerate pivots.

pub(crate) const FEAS_TOL: f64 = 1e-7;
const OPT_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const SINGULAR_TOL: f64 = 1e-11;
const REFACTOR_EVERY: usize = 64;
const DEGENERATE_STREAK: usize = 40;

/// Column-dense LP in the logical-variable form described above.
#[derive(Debug, Clone)]
pub(crate) struct Lp {
    pub m: usize,
    pub n: usize,
    /// Row-major `m x n` structural matrix.
    pub a: Vec<f64>,
    /// Costs of the `n` structurals.
    pub cost: Vec<f64>,
    /// Bounds of all `n + m` columns.
    pub lb: Vec<f64>,
    pub ub: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Pos {
    Basic(usize),
    Lower,
    Upper,
    /// Free nonbasic, held at zero.
    Zero,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Basis {
    pub head: Vec<usize>,
    pub pos: Vec<Pos>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

fn resting_pos(lb: f64, ub: f64) -> Pos {
    if lb.is_finite() {
        Pos::Lower
    } else if ub.is_finite() {
        Pos::Upper
    } else {
        Pos::Zero
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Simplex<'a> {
    lp: &'a Lp,
    cols: usize,
    tab: Vec<f64>,
    pub lb: Vec<f64>,
    pub ub: Vec<f64>,
    x: Vec<f64>,
    head: Vec<usize>,
    pos: Vec<Pos>,
    pub iterations: usize,
    since_refactor: usize,
}

impl<'a> Simplex<'a> {
    /// Starts from `basis` (refactorized) or from the all-logical basis.
    pub fn new(lp: &'a Lp, basis: Option<&Basis>) -> Self {
        let cols = lp.n + lp.m;
        let mut s = Simplex {
            lp,
            cols,
            tab: Vec::new(),
            lb: lp.lb.clone(),
            ub: lp.ub.clone(),
            x: vec![0.0; cols],
            head: (lp.n..cols).collect(),
            pos: (0..cols).map(|j| resting_pos(lp.lb[j], lp.ub[j])).collect(),
            iterations: 0,
            since_refactor: 0,
        };
        for (r, &j) in s.head.iter().enumerate() {
            s.pos[j] = Pos::Basic(r);
        }
        match basis {
            Some(b) => {
                s.head = b.head.clone();
                s.pos = b.pos.clone();
                s.refactor();
            }
            None => {
                s.tab = s.original();
                s.recompute_x();
            }
        }
        s
    }

    fn original(&self) -> Vec<f64> {
        let (m, n, cols) = (self.lp.m, self.lp.n, self.cols);
        let mut t = vec![0.0; m * cols];
        for i in 0..m {
            t[i * cols..i * cols + n].copy_from_slice(&self.lp.a[i * n..(i + 1) * n]);
            t[i * cols + n + i] = 1.0;
        }
        t
    }

    pub fn basis(&self) -> Basis {
        Basis {
            head: self.head.clone(),
            pos: self.pos.clone(),
        }
    }

    /// Changes the bounds of column `j`; a nonbasic column moves to the new bound.
    pub fn set_bounds(&mut self, j: usize, lb: f64, ub: f64) {
        self.lb[j] = lb;
        self.ub[j] = ub;
        if !matches!(self.pos[j], Pos::Basic(_)) {
            let p = match self.pos[j] {
                Pos::Upper if ub.is_finite() => Pos::Upper,
                _ => resting_pos(lb, ub),
            };
            self.pos[j] = p;
            self.recompute_x();
        }
    }

    fn nonbasic_value(&self, j: usize) -> f64 {
        match self.pos[j] {
            Pos::Lower => self.lb[j],
            Pos::Upper => self.ub[j],
            Pos::Zero => 0.0,
            Pos::Basic(_) => self.x[j],
        }
    }

    fn recompute_x(&mut self) {
        for j in 0..self.cols {
            if !matches!(self.pos[j], Pos::Basic(_)) {
                self.x[j] = self.nonbasic_value(j);
            }
        }
        for r in 0..self.lp.m {
            let row = &self.tab[r * self.cols..(r + 1) * self.cols];
            let mut v = 0.0;
            for (j, &t) in row.iter().enumerate() {
                if t != 0.0 && !matches!(self.pos[j], Pos::Basic(_)) {
                    v -= t * self.x[j];
                }
            }
            self.x[self.head[r]] = v;
        }
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let cols = self.cols;
        let p = self.tab[r * cols + q];
        let (before, rest) = self.tab.split_at_mut(r * cols);
        let (prow, after) = rest.split_at_mut(cols);
        for v in prow.iter_mut() {
            *v /= p;
        }
        prow[q] = 1.0;
        for row in before.chunks_mut(cols).chain(after.chunks_mut(cols)) {
            let f = row[q];
            if f != 0.0 {
                for (v, &pv) in row.iter_mut().zip(prow.iter()) {
                    if pv != 0.0 {
                        *v -= f * pv;
                    }
                }
                row[q] = 0.0;
            }
        }
    }

    /// Rebuilds the tableau from the original rows for the current basis,
    /// replacing basic columns that turned out singular by logicals.
    pub fn refactor(&mut self) {
        let (m, n, cols) = (self.lp.m, self.lp.n, self.cols);
        self.tab = self.original();
        let wanted: Vec<usize> = self.head.clone();
        let mut assigned = vec![false; m];
        let mut head = vec![usize::MAX; m];
        for &q in &wanted {
            let best = (0..m)
                .filter(|&i| !assigned[i])
                .map(|i| (i, self.tab[i * cols + q].abs()))
                .fold(None, |acc: Option<(usize, f64)>, c| match acc {
                    Some(a) if a.1 >= c.1 => Some(a),
                    _ => Some(c),
                });
            match best {
                Some((r, v)) if v > SINGULAR_TOL => {
                    self.pivot(r, q);
                    assigned[r] = true;
                    head[r] = q;
                    self.pos[q] = Pos::Basic(r);
                }
                _ => {
                    self.pos[q] = resting_pos(self.lb[q], self.ub[q]);
                }
            }
        }
        for j in n..cols {
            if assigned.iter().all(|&a| a) {
                break;
            }
            if matches!(self.pos[j], Pos::Basic(_)) && head.contains(&j) {
                continue;
            }
            let best = (0..m)
                .filter(|&i| !assigned[i])
                .map(|i| (i, self.tab[i * cols + j].abs()))
                .fold(None, |acc: Option<(usize, f64)>, c| match acc {
                    Some(a) if a.1 >= c.1 => Some(a),
                    _ => Some(c),
                });
            if let Some((r, v)) = best {
                if v > SINGULAR_TOL {
                    self.pivot(r, j);
                    assigned[r] = true;
                    head[r] = j;
                    self.pos[j] = Pos::Basic(r);
                }
            }
        }
        debug_assert!(assigned.iter().all(|&a| a));
        self.head = head;
        self.since_refactor = 0;
        self.recompute_x();
    }

    /// Phase-one cost of basic row `r`, or `None` for feasible rows in phase two.
    fn phase_one_costs(&self) -> Option<Vec<f64>> {
        let mut any = false;
        let c: Vec<f64> = self
            .head
            .iter()
            .map(|&j| {
                if self.x[j] < self.lb[j] - FEAS_TOL {
                    any = true;
                    -1.0
                } else if self.x[j] > self.ub[j] + FEAS_TOL {
                    any = true;
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        any.then_some(c)
    }

    fn cost(&self, j: usize) -> f64 {
        if j < self.lp.n {
            self.lp.cost[j]
        } else {
            0.0
        }
    }

    /// Reduced costs for all columns under basic costs `cb` and column costs `cj`.
    fn reduced_costs(&self, cb: &[f64], cj: impl Fn(usize) -> f64) -> Vec<f64> {
        let mut d: Vec<f64> = (0..self.cols).map(cj).collect();
        for (r, &c) in cb.iter().enumerate() {
            if c != 0.0 {
                let row = &self.tab[r * self.cols..(r + 1) * self.cols];
                for (dj, &t) in d.iter_mut().zip(row) {
                    if t != 0.0 {
                        *dj -= c * t;
                    }
                }
            }
        }
        for &j in &self.head {
            d[j] = 0.0;
        }
        d
    }

    fn choose_entering(&self, d: &[f64], bland: bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..self.cols {
            if self.lb[j] == self.ub[j] {
                continue;
            }
            let dir = match self.pos[j] {
                Pos::Basic(_) => continue,
                Pos::Lower if d[j] < -OPT_TOL => 1.0,
                Pos::Upper if d[j] > OPT_TOL => -1.0,
                Pos::Zero if d[j].abs() > OPT_TOL => -d[j].signum(),
                _ => continue,
            };
            if bland {
                return Some((j, dir));
            }
            if best.is_none_or(|b| d[j].abs() > b.2) {
                best = Some((j, dir, d[j].abs()));
            }
        }
        best.map(|(j, dir, _)| (j, dir))
    }

    /// Bound that basic `j` runs into when moving at `rate`, or `None`.
    fn target(&self, j: usize, rate: f64, phase_one: bool) -> Option<f64> {
        let (v, l, u) = (self.x[j], self.lb[j], self.ub[j]);
        if rate > 0.0 {
            if phase_one && v < l - FEAS_TOL {
                Some(l)
            } else if v > u + FEAS_TOL {
                None
            } else {
                u.is_finite().then_some(u)
            }
        } else if phase_one && v > u + FEAS_TOL {
            Some(u)
        } else if v < l - FEAS_TOL {
            None
        } else {
            l.is_finite().then_some(l)
        }
    }

    /// Runs both phases to completion from the current basis.
    pub fn solve(&mut self, max_iterations: usize) -> LpStatus {
        let m = self.lp.m;
        let mut degenerate = 0usize;
        let mut verified = false;
        loop {
            if self.since_refactor >= REFACTOR_EVERY {
                self.refactor();
            }
            let phase_one = self.phase_one_costs();
            let d = match &phase_one {
                Some(cb) => self.reduced_costs(cb, |_| 0.0),
                None => {
                    let cb: Vec<f64> = self.head.iter().map(|&j| self.cost(j)).collect();
                    self.reduced_costs(&cb, |j| self.cost(j))
                }
            };
            let Some((q, dir)) = self.choose_entering(&d, degenerate >= DEGENERATE_STREAK) else {
                if !verified && self.since_refactor > 0 {
                    verified = true;
                    self.refactor();
                    continue;
                }
                return if phase_one.is_some() {
                    LpStatus::Infeasible
                } else {
                    LpStatus::Optimal
                };
            };
            if self.iterations >= max_iterations {
                return LpStatus::IterationLimit;
            }
            verified = false;
            let bland = degenerate >= DEGENERATE_STREAK;

            // Harris two-pass ratio test.
            let mut theta_max = f64::INFINITY;
            let mut rows: Vec<(usize, f64, f64)> = Vec::new();
            for r in 0..m {
                let alpha = self.tab[r * self.cols + q];
                if alpha.abs() < PIVOT_TOL {
                    continue;
                }
                let rate = -dir * alpha;
                let j = self.head[r];
                if let Some(bound) = self.target(j, rate, phase_one.is_some()) {
                    let relaxed = (bound + rate.signum() * FEAS_TOL - self.x[j]) / rate;
                    theta_max = theta_max.min(relaxed.max(0.0));
                    rows.push((r, rate, bound));
                }
            }
            let span = self.ub[q] - self.lb[q];
            let mut leave: Option<(usize, f64, f64)> = None;
            for &(r, rate, bound) in &rows {
                let ratio = ((bound - self.x[self.head[r]]) / rate).max(0.0);
                if ratio > theta_max {
                    continue;
                }
                let better = match leave {
                    None => true,
                    Some((lr, lrate, _)) => {
                        if bland {
                            self.head[r] < self.head[lr]
                        } else {
                            rate.abs() > lrate.abs()
                        }
                    }
                };
                if better {
                    leave = Some((r, rate, bound));
                }
            }
            let theta = leave.map(|(r, rate, bound)| ((bound - self.x[self.head[r]]) / rate).max(0.0));
            let flip = span.is_finite() && theta.is_none_or(|t| span <= t);
            if leave.is_none() && !flip {
                if phase_one.is_some() {
                    // numerically stuck: cannot happen with exact arithmetic
                    return LpStatus::Infeasible;
                }
                return LpStatus::Unbounded;
            }
            let step = if flip { span } else { theta.unwrap_or(0.0) };
            degenerate = if step <= 1e-12 { degenerate + 1 } else { 0 };
            self.iterations += 1;

            self.x[q] += dir * step;
            for r in 0..m {
                let alpha = self.tab[r * self.cols + q];
                if alpha != 0.0 {
                    self.x[self.head[r]] -= dir * alpha * step;
                }
            }
            if flip {
                self.pos[q] = if dir > 0.0 { Pos::Upper } else { Pos::Lower };
                self.x[q] = if dir > 0.0 { self.ub[q] } else { self.lb[q] };
                continue;
            }
            let (r, _, bound) = leave.expect("leaving row chosen");
            let out = self.head[r];
            self.x[out] = bound;
            self.pos[out] = if bound == self.lb[out] { Pos::Lower } else { Pos::Upper };
            self.pivot(r, q);
            self.head[r] = q;
            self.pos[q] = Pos::Basic(r);
            self.since_refactor += 1;
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.x
    }

    pub fn objective(&self) -> f64 {
        (0..self.lp.n).map(|j| self.lp.cost[j] * self.x[j]).sum()
    }

    /// Row multipliers `y` with reduced costs `c - A^T y`.
    pub fn duals(&self) -> Vec<f64> {
        let n = self.lp.n;
        (0..self.lp.m)
            .map(|i| {
                self.head
                    .iter()
                    .enumerate()
                    .map(|(r, &j)| self.cost(j) * self.tab[r * self.cols + n + i])
                    .sum()
            })
            .collect()
    }
}
