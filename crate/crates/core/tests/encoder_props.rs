use commplan::encoder::{assemble_agent_problem, decode, AgentModel, CostWeights, NeighborTrack, ProblemSpec, EPS};
use commplan::logic::{build_separation_formula, eval_stl, SeparationMode, Signal};
use commplan::milp::solve_milp;
use commplan::qts::{
    agent_comm_matrix, build_qts, eval_tssl, generate_patterns, CapacityMatrix, Grid, GridMatrix, PathLossParams,
};
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

mod common;

fn point_in(r: &mut ChaCha8Rng, g: &Grid, (m, n): (usize, usize)) -> [f64; 2] {
    let w = g.cell_side();
    [
        g.west(n) + r.gen_range(0.1..0.9) * w,
        g.south(m) + r.gen_range(0.1..0.9) * w,
    ]
}

fn square_goal(c: [f64; 2], half: f64) -> Vec<([f64; 2], f64)> {
    vec![
        ([1.0, 0.0], -(c[0] + half)),
        ([-1.0, 0.0], c[0] - half),
        ([0.0, 1.0], -(c[1] + half)),
        ([0.0, -1.0], c[1] - half),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn reified_stl_matches_the_monitor(seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let f = common::random_formula(&mut r, 3, 2, 2);
        let h = commplan::logic::horizon(&f);
        let samples: Vec<Vec<f64>> = (0..=h + r.gen_range(0..2))
            .map(|_| (0..2).map(|_| r.gen_range(-4..=4) as f64).collect())
            .collect();
        let truth = eval_stl(&f, &Signal::new(samples.clone()).unwrap(), 0).unwrap();
        prop_assert_eq!(common::stl_encoding_outcomes(&f, &samples), (truth, !truth), "{}", f);
    }

    #[test]
    fn reified_patterns_match_the_monitor(seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let cap: CapacityMatrix = GridMatrix::from_fn(4, |_, _| if r.gen_bool(0.2) { 0 } else { r.gen_range(1..=3) });
        let counts = GridMatrix::from_fn(4, |m, n| {
            let c = *cap.get(m, n);
            if r.gen_bool(0.1) { c + 1 } else { r.gen_range(0..=c) }
        });
        let psi = generate_patterns(&cap).unwrap().conjunction();
        let q = build_qts(&counts.to_f64()).unwrap();
        let truth = eval_tssl(&psi, &q, q.root());
        prop_assert_eq!(common::tssl_encoding_outcomes(&psi, &counts), (truth, !truth));
    }
}

/// Random small planning problems: every solved plan satisfies the dynamics,
/// the velocity polygon, the occupancy linking, the patterns and separation,
/// and with `alpha = 0` its objective is exactly the summed cell quality.
#[test]
fn assembled_plans_are_sound() {
    let g = Grid::new([0.0, 0.0], 80.0, 2).unwrap();
    let am = AgentModel::double_integrator(2.0, 8.0).unwrap();
    let loss = PathLossParams::default();
    let mut solved = 0;
    for seed in 0..60 {
        let mut r = common::rng(seed);
        let cap: CapacityMatrix = GridMatrix::from_fn(4, |_, _| if r.gen_bool(0.15) { 0 } else { r.gen_range(1..=3) });
        let free: Vec<(usize, usize)> = cap.cells().filter(|&(m, n)| *cap.get(m, n) > 0).collect();
        if free.len() < 2 {
            continue;
        }
        let patterns = generate_patterns(&cap).unwrap();
        let mut parked = GridMatrix::filled(4, 0u32);
        let mut neighbors = Vec::new();
        for _ in 0..r.gen_range(0..=2) {
            let c = free[r.gen_range(0..free.len())];
            if parked.get(c.0, c.1) < cap.get(c.0, c.1) {
                *parked.get_mut(c.0, c.1) += 1;
                let p = point_in(&mut r, &g, c);
                neighbors.push(NeighborTrack {
                    states: vec![[p[0], p[1], 0.0, 0.0]],
                    comm: agent_comm_matrix(p, &g, &loss),
                });
            }
        }
        let home = free[r.gen_range(0..free.len())];
        let start = point_in(&mut r, &g, home);
        let x0 = [start[0], start[1], r.gen_range(-3.0..3.0), r.gen_range(-3.0..3.0)];
        let goal_center = g.center(free[0].0, free[0].1);
        let goal = square_goal(goal_center, 5.0);
        let alpha = [0.0, 0.5, 1.0][r.gen_range(0..3)];
        let spec = ProblemSpec {
            agent: &am,
            x0,
            t0: r.gen_range(0..10),
            horizon: r.gen_range(3..=4),
            deadline: 50,
            grid: &g,
            capacity: &cap,
            patterns: Some(&patterns),
            goal: &goal,
            goal_center,
            neighbors: &neighbors,
            weights: CostWeights {
                alpha,
                ..CostWeights::default()
            },
            separation: Some((2.0, 2.0, SeparationMode::Disjunctive)),
            sides: 8,
            hard_goal: true,
        };
        let (model, ctx) = assemble_agent_problem(&spec).unwrap();
        let sol = solve_milp(&model);
        if !sol.is_optimal() {
            continue;
        }
        solved += 1;
        assert!(model.max_violation(&sol.values) <= 1e-6, "seed {seed}");
        let plan = decode(&ctx, &sol.values);
        let h = plan.states.len();
        assert_eq!(plan.states[0], x0);
        for t in 0..h - 1 {
            let next = am.step(&plan.states[t], &plan.inputs[t]);
            for j in 0..4 {
                assert!((next[j] - plan.states[t + 1][j]).abs() <= 1e-6, "seed {seed} step {t}");
            }
            assert!(plan.inputs[t].iter().all(|u| u.abs() <= am.u_max + 1e-9));
        }
        for (t, x) in plan.states.iter().enumerate().skip(1) {
            for l in 1..=8 {
                let th = 2.0 * std::f64::consts::PI * l as f64 / 8.0;
                assert!(x[2] * th.sin() + x[3] * th.cos() <= am.v_max + 1e-6);
            }
            assert!(x[2].hypot(x[3]) <= am.speed_bound(8) + 1e-6);
            let (m, n) = plan.cells[t];
            assert_eq!(g.cell_of([x[0], x[1]]), (m, n), "seed {seed} step {t}");
            let margin = (x[0] - g.west(n))
                .min(g.east(n) - x[0])
                .min(x[1] - g.south(m))
                .min(g.north(m) - x[1]);
            assert!(margin >= EPS - 1e-7, "seed {seed} step {t}: margin {margin}");

            let mut counts = parked.clone();
            *counts.get_mut(m, n) += 1;
            let q = build_qts(&counts.to_f64()).unwrap();
            assert!(eval_tssl(&patterns.conjunction(), &q, q.root()), "seed {seed} step {t}");
        }
        if !neighbors.is_empty() {
            let sep =
                build_separation_formula(2.0, 2.0, SeparationMode::Disjunctive, neighbors.len(), (1, h - 1)).unwrap();
            let stacked: Vec<Vec<f64>> = plan
                .states
                .iter()
                .map(|x| {
                    let mut s = x.to_vec();
                    neighbors.iter().for_each(|nb| s.extend(nb.states[0]));
                    s
                })
                .collect();
            assert!(
                eval_stl(&sep, &Signal::new(stacked).unwrap(), 0).unwrap(),
                "seed {seed}"
            );
        }
        if alpha == 0.0 {
            let quality: f64 = plan
                .cells
                .iter()
                .map(|&(m, n)| *cap.get(m, n) as f64 + neighbors.iter().map(|nb| *nb.comm.get(m, n)).sum::<f64>())
                .sum();
            assert!(
                (sol.objective + quality).abs() <= 1e-6,
                "seed {seed}: {} vs {}",
                sol.objective,
                -quality
            );
        }
    }
    assert!(solved >= 40, "only {solved} feasible problems");
}
