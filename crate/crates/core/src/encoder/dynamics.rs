use std::f64::consts::PI;

use crate::milp::{LinExpr, MilpModel, Sense, VarId};
use crate::qts::{cell_of, CapacityMatrix, Grid, GridMatrix};

use super::{AgentModel, EncodeError, EncodingContext};

type StateBox = [(f64, f64); 4];

/// Largest `|v_k|` over the regular `sides`-gon `v . (sin, cos)(2 pi l / L) <= v_max`.
fn axis_speed_bound(v_max: f64, sides: usize) -> f64 {
    let circum = v_max / (PI / sides as f64).cos();
    (0..sides)
        .map(|l| {
            let mid = 2.0 * PI * (l as f64 + 1.5) / sides as f64;
            circum * mid.sin().abs().max(mid.cos().abs())
        })
        .fold(0.0, f64::max)
}

/// Interval over-approximation of the states reachable at each local step.
/// Positions are clipped to the workspace and, when `sides` is given,
/// velocities to the bounding box of the velocity polygon.
pub fn reachable_boxes(
    am: &AgentModel,
    x0: &[f64; 4],
    horizon: usize,
    workspace: Option<&Grid>,
    sides: Option<usize>,
) -> Vec<StateBox> {
    let vbound = sides.map(|l| axis_speed_bound(am.v_max, l));
    let mut boxes: Vec<StateBox> = vec![std::array::from_fn(|j| (x0[j], x0[j]))];
    for _ in 1..horizon {
        let prev = boxes.last().expect("nonempty");
        let mut next: StateBox = std::array::from_fn(|i| {
            let mut lo = 0.0;
            let mut hi = 0.0;
            for (j, &(l, u)) in prev.iter().enumerate() {
                let (a, b) = (am.a[i][j] * l, am.a[i][j] * u);
                lo += a.min(b);
                hi += a.max(b);
            }
            for k in 0..2 {
                let s = am.b[i][k].abs() * am.u_max;
                lo -= s;
                hi += s;
            }
            (lo, hi)
        });
        if let Some(g) = workspace {
            for (k, (lo, hi)) in next.iter_mut().take(2).enumerate() {
                *lo = lo.max(g.origin[k]);
                *hi = hi.min(g.origin[k] + g.side);
            }
        }
        if let Some(v) = vbound {
            for (lo, hi) in next.iter_mut().skip(2) {
                *lo = lo.max(-v);
                *hi = hi.min(v);
            }
        }
        boxes.push(next);
    }
    boxes
}

/// States for local steps `0..horizon` (step 0 fixed to `x0`), inputs between
/// consecutive steps in the box `[-u_max, u_max]^2`, and the dynamics rows.
/// State bounds come from [`reachable_boxes`], so positions stay inside
/// `workspace` when one is given.
pub fn encode_dynamics(
    model: &mut MilpModel,
    am: &AgentModel,
    x0: &[f64; 4],
    t0: usize,
    horizon: usize,
    workspace: Option<&Grid>,
) -> Result<EncodingContext, EncodeError> {
    if horizon < 1 {
        return Err(EncodeError::HorizonTooShort);
    }
    let boxes = reachable_boxes(am, x0, horizon, workspace, None);
    let names = ["p1", "p2", "v1", "v2"];
    let mut states = Vec::with_capacity(horizon);
    for (t, b) in boxes.iter().enumerate() {
        let mut vars = [VarId(0); 4];
        for j in 0..4 {
            vars[j] = model.add_continuous(b[j].0, b[j].1, format!("{}_{}", names[j], t0 + t))?;
            if let (Some(g), true) = (workspace, j < 2 && t > 0) {
                model.tighten_bounds(vars[j], g.origin[j], g.origin[j] + g.side)?;
            }
        }
        states.push(vars);
    }
    let mut inputs = Vec::with_capacity(horizon.saturating_sub(1));
    for t in 0..horizon - 1 {
        let u = [
            model.add_continuous(-am.u_max, am.u_max, format!("u1_{}", t0 + t))?,
            model.add_continuous(-am.u_max, am.u_max, format!("u2_{}", t0 + t))?,
        ];
        for i in 0..4 {
            let mut row = vec![(states[t + 1][i], 1.0)];
            row.extend((0..4).map(|j| (states[t][j], -am.a[i][j])));
            row.extend((0..2).map(|k| (u[k], -am.b[i][k])));
            model.add_constraint(row, Sense::Eq, 0.0)?;
        }
        inputs.push(u);
    }
    let mut ctx = EncodingContext::from_signal(
        states
            .iter()
            .map(|s| s.iter().map(|&v| LinExpr::var(v)).collect())
            .collect(),
    );
    ctx.t0 = t0;
    ctx.states = states;
    ctx.inputs = inputs;
    ctx.grid = workspace.copied();
    Ok(ctx)
}

/// `L` rows `v1 sin(2 pi l / L) + v2 cos(2 pi l / L) <= v_max` at every free
/// step (local step 0 is fixed). Also shrinks state bounds to the
/// correspondingly tighter reachable boxes.
pub fn encode_velocity_polygon(
    model: &mut MilpModel,
    ctx: &EncodingContext,
    am: &AgentModel,
    sides: usize,
) -> Result<(), EncodeError> {
    if sides < 3 {
        return Err(EncodeError::TooFewSides(sides));
    }
    for s in ctx.states.iter().skip(1) {
        for l in 1..=sides {
            let th = 2.0 * PI * l as f64 / sides as f64;
            model.add_constraint([(s[2], th.sin()), (s[3], th.cos())], Sense::Le, am.v_max)?;
        }
    }
    if let Some(first) = ctx.states.first() {
        let x0: [f64; 4] = std::array::from_fn(|j| model.bounds(first[j]).0);
        let boxes = reachable_boxes(am, &x0, ctx.states.len(), ctx.grid.as_ref(), Some(sides));
        for (s, b) in ctx.states.iter().zip(&boxes).skip(1) {
            for j in 0..4 {
                model.tighten_bounds(s[j], b[j].0, b[j].1)?;
            }
        }
    }
    Ok(())
}

fn abs_slack(model: &mut MilpModel, x: VarId, name: String) -> Result<VarId, EncodeError> {
    let (l, u) = model.bounds(x);
    let s = model.add_continuous(0.0, l.abs().max(u.abs()), name)?;
    model.add_constraint([(x, 1.0), (s, -1.0)], Sense::Le, 0.0)?;
    model.add_constraint([(x, -1.0), (s, -1.0)], Sense::Le, 0.0)?;
    Ok(s)
}

/// Linearized energy-plus-goal cost
/// `sum_t (q . alpha_t + r . beta_t) + lambda k'^2 sum_t (gamma_t1 + gamma_t2)`,
/// where the slacks bound `|x|`, `|u|` and `|p - goal|` componentwise.
/// Slacks with zero weight are not created.
pub fn encode_cost_j1(
    model: &mut MilpModel,
    ctx: &mut EncodingContext,
    q: &[f64; 4],
    r: &[f64; 2],
    lambda: f64,
    k_prime: usize,
    goal: &[f64; 2],
) -> Result<LinExpr, EncodeError> {
    if q.iter().chain(r).any(|w| *w < 0.0) || lambda < 0.0 {
        return Err(EncodeError::NegativeWeight);
    }
    let mut cost = LinExpr::zero();
    let t0 = ctx.t0;
    ctx.alpha.clear();
    for (t, s) in ctx.states.iter().enumerate() {
        let mut a = [None; 4];
        for j in 0..4 {
            if q[j] > 0.0 {
                let v = abs_slack(model, s[j], format!("alpha{j}_{}", t0 + t))?;
                cost.add_term(v, q[j]);
                a[j] = Some(v);
            }
        }
        ctx.alpha.push(a);
    }
    ctx.beta.clear();
    for (t, u) in ctx.inputs.iter().enumerate() {
        let mut b = [None; 2];
        for k in 0..2 {
            if r[k] > 0.0 {
                let v = abs_slack(model, u[k], format!("beta{k}_{}", t0 + t))?;
                cost.add_term(v, r[k]);
                b[k] = Some(v);
            }
        }
        ctx.beta.push(b);
    }
    let h = lambda * (k_prime as f64).powi(2);
    ctx.gamma.clear();
    if h > 0.0 {
        for (t, s) in ctx.states.iter().enumerate() {
            let mut g = [VarId(0); 2];
            for k in 0..2 {
                let (l, u) = model.bounds(s[k]);
                let ub = (l - goal[k]).abs().max((u - goal[k]).abs());
                let v = model.add_continuous(0.0, ub, format!("gamma{k}_{}", t0 + t))?;
                model.add_constraint([(s[k], 1.0), (v, -1.0)], Sense::Le, goal[k])?;
                model.add_constraint([(s[k], -1.0), (v, -1.0)], Sense::Le, -goal[k])?;
                cost.add_term(v, h);
                g[k] = v;
            }
            ctx.gamma.push(g);
        }
    }
    Ok(cost)
}

/// One occupancy binary per cell and step with `sum o = 1`, linked to the
/// position with an `eps` margin inside every cell edge, so that rounding in
/// the executed rollout cannot tip an agent across a boundary.
/// Cells outside the reachable position box are fixed to 0; local step 0 is
/// fixed to the current cell.
pub fn encode_occupancy(model: &mut MilpModel, ctx: &mut EncodingContext, g: &Grid) -> Result<(), EncodeError> {
    let side = g.cells_per_side();
    ctx.grid = Some(*g);
    ctx.occupancy.clear();
    ctx.leaves.clear();
    let eps = ctx.eps;
    for (t, s) in ctx.states.clone().iter().enumerate() {
        let (l1, u1) = model.bounds(s[0]);
        let (l2, u2) = model.bounds(s[1]);
        let here = (t == 0).then(|| cell_of([l1, l2], g));
        let o = GridMatrix::from_fn(side, |m, n| model.add_binary(format!("o_{m}_{n}_{}", ctx.t0 + t)));
        for (m, n) in o.cells() {
            let v = *o.get(m, n);
            let possible = match here {
                Some(c) => c == (m, n),
                None => {
                    g.west(n) + eps <= u1 && g.east(n) - eps >= l1 && g.south(m) + eps <= u2 && g.north(m) - eps >= l2
                }
            };
            if !possible {
                model.fix(v, 0.0)?;
            } else if here.is_some() {
                model.fix(v, 1.0)?;
            }
        }
        model.add_constraint(o.as_slice().iter().map(|&v| (v, 1.0)), Sense::Eq, 1.0)?;
        if t > 0 {
            let link = |coef: &dyn Fn(usize, usize) -> f64, pos: VarId, sense: Sense, model: &mut MilpModel| {
                let mut row = vec![(pos, 1.0)];
                row.extend(o.cells().map(|(m, n)| (*o.get(m, n), -coef(m, n))));
                model.add_constraint(row, sense, 0.0)
            };
            link(&|_, n| g.west(n) + eps, s[0], Sense::Ge, model)?;
            link(&|_, n| g.east(n) - eps, s[0], Sense::Le, model)?;
            link(&|m, _| g.south(m) + eps, s[1], Sense::Ge, model)?;
            link(&|m, _| g.north(m) - eps, s[1], Sense::Le, model)?;
        }
        ctx.leaves.push(o.map(|&v| LinExpr::var(v)));
        ctx.occupancy.push(o);
    }
    ctx.big_m = ctx.big_m.max(g.side);
    Ok(())
}

/// Communication cost `-sum_t sum_{m,n} (C + sum_j C'_j)[m][n] o_{m,n,t}`.
pub fn encode_cost_j2(
    ctx: &EncodingContext,
    c: &CapacityMatrix,
    neighbors: &[GridMatrix<f64>],
) -> Result<LinExpr, EncodeError> {
    if ctx.occupancy.is_empty() {
        return Err(EncodeError::NoOccupancy);
    }
    let side = ctx.occupancy[0].side();
    for m in std::iter::once(c.side()).chain(neighbors.iter().map(|n| n.side())) {
        if m != side {
            return Err(EncodeError::GridMismatch { expected: side, got: m });
        }
    }
    let weight = GridMatrix::from_fn(side, |m, n| {
        *c.get(m, n) as f64 + neighbors.iter().map(|cj| *cj.get(m, n)).sum::<f64>()
    });
    let mut cost = LinExpr::zero();
    for o in &ctx.occupancy {
        for (m, n) in o.cells() {
            let w = *weight.get(m, n);
            if w != 0.0 {
                cost.add_term(*o.get(m, n), -w);
            }
        }
    }
    Ok(cost)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::{solve_milp, SolveStatus};

    fn di() -> AgentModel {
        AgentModel::double_integrator(2.0, 8.0).unwrap()
    }

    #[test]
    fn unit_horizon_has_no_inputs() {
        let mut m = MilpModel::new();
        let ctx = encode_dynamics(&mut m, &di(), &[1.0, 2.0, 0.0, 0.0], 0, 1, None).unwrap();
        assert!(ctx.inputs.is_empty());
        assert_eq!(m.num_constraints(), 0);
        assert_eq!(m.bounds(ctx.states[0][1]), (2.0, 2.0));
        assert_eq!(
            encode_dynamics(&mut m, &di(), &[0.0; 4], 0, 0, None),
            Err(EncodeError::HorizonTooShort)
        );
    }

    #[test]
    fn coasting_advances_position() {
        let mut m = MilpModel::new();
        let ctx = encode_dynamics(&mut m, &di(), &[0.0, 0.0, 1.0, 0.0], 0, 4, None).unwrap();
        for u in &ctx.inputs {
            m.fix(u[0], 0.0).unwrap();
            m.fix(u[1], 0.0).unwrap();
        }
        let s = solve_milp(&m);
        assert_eq!(s.status, SolveStatus::Optimal);
        for (t, st) in ctx.states.iter().enumerate() {
            assert!((s.values[st[0].0] - t as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn polygon_axis_bound() {
        assert!((axis_speed_bound(1.0, 4) - 1.0).abs() < 1e-12);
        assert!((axis_speed_bound(1.0, 8) - 1.0).abs() < 1e-12);
        assert!(axis_speed_bound(1.0, 3) > 1.0);
    }

    #[test]
    fn occupancy_sizes() {
        let g = Grid::new([0.0, 0.0], 160.0, 3).unwrap();
        let mut m = MilpModel::new();
        let mut ctx = encode_dynamics(&mut m, &di(), &[10.0, 150.0, 0.0, 0.0], 0, 5, Some(&g)).unwrap();
        encode_occupancy(&mut m, &mut ctx, &g).unwrap();
        assert_eq!(ctx.occupancy.len(), 5);
        assert_eq!(m.num_binaries(), 320);
        assert_eq!(m.bounds(*ctx.occupancy[0].get(0, 0)), (1.0, 1.0));
        assert_eq!(ctx.big_m, 160.0);
    }

    fn velocity_only(sides: usize, v: [f64; 2]) -> SolveStatus {
        let am = AgentModel::double_integrator(100.0, 8.0).unwrap();
        let mut m = MilpModel::new();
        let ctx = encode_dynamics(&mut m, &am, &[0.0; 4], 0, 2, None).unwrap();
        encode_velocity_polygon(&mut m, &ctx, &am, sides).unwrap();
        m.fix(ctx.states[1][2], v[0]).unwrap();
        m.fix(ctx.states[1][3], v[1]).unwrap();
        solve_milp(&m).status
    }

    #[test]
    fn square_polygon_is_a_box() {
        for l in 1..=4 {
            let th = 2.0 * PI * l as f64 / 4.0;
            let (s, c) = (th.sin(), th.cos());
            assert!((s.abs() + c.abs() - 1.0).abs() < 1e-12);
        }
        assert_eq!(velocity_only(4, [8.0, -8.0]), SolveStatus::Optimal);
        assert_eq!(velocity_only(4, [8.1, 0.0]), SolveStatus::Infeasible);
    }

    #[test]
    fn octagon_cuts_the_corner() {
        assert_eq!(velocity_only(8, [8.0, 8.0]), SolveStatus::Infeasible);
        assert_eq!(velocity_only(8, [8.0, 0.0]), SolveStatus::Optimal);
        let mut m = MilpModel::new();
        let ctx = encode_dynamics(&mut m, &di(), &[0.0; 4], 0, 2, None).unwrap();
        assert_eq!(
            encode_velocity_polygon(&mut m, &ctx, &di(), 2),
            Err(EncodeError::TooFewSides(2))
        );
    }

    #[test]
    fn parked_on_quality_six() {
        let g = Grid::new([0.0, 0.0], 160.0, 3).unwrap();
        let cap = CapacityMatrix::from_rows(crate::qts::reference_capacity_rows()).unwrap();
        let mut m = MilpModel::new();
        let mut ctx = encode_dynamics(&mut m, &di(), &[10.0, 150.0, 0.0, 0.0], 0, 5, Some(&g)).unwrap();
        encode_occupancy(&mut m, &mut ctx, &g).unwrap();
        for u in &ctx.inputs {
            m.fix(u[0], 0.0).unwrap();
            m.fix(u[1], 0.0).unwrap();
        }
        let j2 = encode_cost_j2(&ctx, &cap, &[]).unwrap();
        let s = solve_milp(&m);
        assert_eq!(s.status, SolveStatus::Optimal);
        assert_eq!(j2.value(&s.values), -30.0);
        for o in &ctx.occupancy {
            for (r, c) in o.cells() {
                assert_eq!(s.values[o.get(r, c).0], if (r, c) == (0, 0) { 1.0 } else { 0.0 });
            }
        }
        let zero = GridMatrix::filled(8, 0u32);
        assert!(encode_cost_j2(&ctx, &zero, &[]).unwrap().terms.is_empty());
        assert!(matches!(
            encode_cost_j2(&ctx, &zero, &[GridMatrix::filled(4, 0.0)]),
            Err(EncodeError::GridMismatch { expected: 8, got: 4 })
        ));
    }

    #[test]
    fn goal_slacks_vanish_at_goal() {
        let mut m = MilpModel::new();
        let mut ctx = encode_dynamics(&mut m, &di(), &[0.0; 4], 0, 3, None).unwrap();
        let j1 = encode_cost_j1(&mut m, &mut ctx, &[1.0; 4], &[1.0, 1.0], 0.005, 10, &[0.0, 0.0]).unwrap();
        m.add_objective(&j1).unwrap();
        let s = solve_milp(&m);
        assert_eq!(s.objective, 0.0);
        let slacks = ctx
            .alpha
            .iter()
            .flatten()
            .flatten()
            .chain(ctx.beta.iter().flatten().flatten());
        assert!(slacks.chain(ctx.gamma.iter().flatten()).all(|v| s.values[v.0] == 0.0));
        assert_eq!(
            encode_cost_j1(&mut m, &mut ctx, &[-1.0; 4], &[0.0; 2], 0.0, 0, &[0.0; 2]),
            Err(EncodeError::NegativeWeight)
        );
        assert_eq!(0.005 * 10f64.powi(2), 0.5);
    }
}
