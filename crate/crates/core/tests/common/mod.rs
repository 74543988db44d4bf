//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use commplan::encoder::{encode_stl, encode_tssl, EncodingContext, Lit};
use commplan::logic::{Predicate, StlFormula, TsslFormula};
use commplan::milp::{solve_milp, LinExpr, MilpModel, Sense, VarKind};
use commplan::qts::{GridMatrix, NodeId};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random MILP with small integer data: at most 8 variables, at most 6 of them
/// binary and at most 3 continuous, at most 10 rows.
pub fn random_milp(seed: u64) -> MilpModel {
    let mut r = rng(seed);
    let n_bin = r.gen_range(0..=6usize);
    let n_cont = r.gen_range(usize::from(n_bin == 0)..=3usize.min(8 - n_bin));
    let mut kinds: Vec<VarKind> = std::iter::repeat_n(VarKind::Binary, n_bin)
        .chain(std::iter::repeat_n(VarKind::Continuous, n_cont))
        .collect();
    for i in (1..kinds.len()).rev() {
        kinds.swap(i, r.gen_range(0..=i));
    }
    let mut m = MilpModel::new();
    let vars: Vec<_> = kinds
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let lb = r.gen_range(-5..=0) as f64;
            let ub = lb + r.gen_range(1..=8) as f64;
            m.add_var(k, lb, ub, format!("v{i}")).unwrap()
        })
        .collect();
    for _ in 0..r.gen_range(1..=10) {
        let mut row = Vec::new();
        for &v in &vars {
            if r.gen_bool(0.6) {
                row.push((v, r.gen_range(-5..=5) as f64));
            }
        }
        let kinds = if r.gen_bool(0.15) { 3 } else { 2 };
        let sense = [Sense::Le, Sense::Ge, Sense::Eq][r.gen_range(0..kinds)];
        m.add_constraint(row, sense, r.gen_range(-10..=10) as f64).unwrap();
    }
    for &v in &vars {
        m.add_objective_term(v, r.gen_range(-5..=5) as f64).unwrap();
    }
    m
}

fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[p][c].abs() < 1e-9 {
            return None;
        }
        a.swap(c, p);
        b.swap(c, p);
        for i in 0..n {
            if i != c {
                let f = a[i][c] / a[c][c];
                if f != 0.0 {
                    for k in c..n {
                        a[i][k] -= f * a[c][k];
                    }
                    b[i] -= f * b[c];
                }
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

fn combinations(n: usize, k: usize, f: &mut dyn FnMut(&[usize])) {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            go(i + 1, n, k, cur, f);
            cur.pop();
        }
    }
    go(0, n, k, &mut Vec::new(), f);
}

/// Optimum of a bounded LP by enumerating every vertex of its polytope.
/// `rows` are `(coeffs, sense, rhs)` over `bounds.len()` variables.
pub fn vertex_lp(cost: &[f64], rows: &[(Vec<f64>, Sense, f64)], bounds: &[(f64, f64)]) -> Option<f64> {
    let n = bounds.len();
    let feasible = |x: &[f64]| {
        bounds.iter().zip(x).all(|(&(l, u), &v)| v >= l - 1e-9 && v <= u + 1e-9)
            && rows.iter().all(|(a, s, b)| {
                let lhs: f64 = a.iter().zip(x).map(|(c, v)| c * v).sum();
                s.holds(lhs, *b, 1e-9)
            })
    };
    if n == 0 {
        return feasible(&[]).then_some(0.0);
    }
    let mut planes: Vec<(Vec<f64>, f64)> = rows.iter().map(|(a, _, b)| (a.clone(), *b)).collect();
    for (j, &(l, u)) in bounds.iter().enumerate() {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        planes.push((e.clone(), l));
        planes.push((e, u));
    }
    let mut best: Option<f64> = None;
    combinations(planes.len(), n, &mut |idx| {
        let a = idx.iter().map(|&i| planes[i].0.clone()).collect();
        let b = idx.iter().map(|&i| planes[i].1).collect();
        if let Some(x) = solve_square(a, b) {
            if feasible(&x) {
                let obj: f64 = cost.iter().zip(&x).map(|(c, v)| c * v).sum();
                best = Some(best.map_or(obj, |o: f64| o.min(obj)));
            }
        }
    });
    best
}

/// Brute-force MILP optimum: every binary assignment, LP over the rest by
/// vertex enumeration. `None` means infeasible.
pub fn brute_force_milp(m: &MilpModel) -> Option<f64> {
    let bins: Vec<usize> = (0..m.num_vars())
        .filter(|&i| m.vars[i].kind == VarKind::Binary)
        .collect();
    let conts: Vec<usize> = (0..m.num_vars())
        .filter(|&i| m.vars[i].kind == VarKind::Continuous)
        .collect();
    let obj = m.objective.normalized();
    let mut cost_full = vec![0.0; m.num_vars()];
    for &(v, c) in &obj.terms {
        cost_full[v.0] += c;
    }
    let mut best: Option<f64> = None;
    for mask in 0u32..(1 << bins.len()) {
        let mut fixed = vec![0.0; m.num_vars()];
        for (k, &b) in bins.iter().enumerate() {
            fixed[b] = ((mask >> k) & 1) as f64;
        }
        let rows: Vec<(Vec<f64>, Sense, f64)> = m
            .constraints
            .iter()
            .map(|c| {
                let mut a = vec![0.0; conts.len()];
                let mut rhs = c.rhs;
                for &(v, coef) in &c.coeffs {
                    match conts.iter().position(|&j| j == v.0) {
                        Some(p) => a[p] += coef,
                        None => rhs -= coef * fixed[v.0],
                    }
                }
                (a, c.sense, rhs)
            })
            .collect();
        let cost: Vec<f64> = conts.iter().map(|&j| cost_full[j]).collect();
        let bounds: Vec<(f64, f64)> = conts.iter().map(|&j| (m.vars[j].lb, m.vars[j].ub)).collect();
        if let Some(v) = vertex_lp(&cost, &rows, &bounds) {
            let fixed_part: f64 = bins.iter().map(|&b| cost_full[b] * fixed[b]).sum();
            let total = v + fixed_part + obj.constant;
            best = Some(best.map_or(total, |o: f64| o.min(total)));
        }
    }
    best
}

/// Random bounded formula over a `dim`-dimensional signal, without spatial atoms.
pub fn random_formula(r: &mut ChaCha8Rng, depth: usize, dim: usize, max_bound: usize) -> StlFormula {
    let leaf = depth == 0 || r.gen_bool(0.25);
    if leaf {
        let coeffs: Vec<f64> = (0..dim).map(|_| r.gen_range(-2..=2) as f64).collect();
        let p = Predicate::new(coeffs, r.gen_range(-3..=3) as f64);
        return match r.gen_range(0..10) {
            0 => StlFormula::True,
            1..=5 => StlFormula::Pred(p),
            _ => StlFormula::NotPred(p),
        };
    }
    let interval = |r: &mut ChaCha8Rng| {
        let a = r.gen_range(0..=max_bound);
        (a, r.gen_range(a..=max_bound))
    };
    match r.gen_range(0..6) {
        0 => StlFormula::And(
            (0..r.gen_range(1..=3))
                .map(|_| random_formula(r, depth - 1, dim, max_bound))
                .collect(),
        ),
        1 => StlFormula::Or(
            (0..r.gen_range(1..=3))
                .map(|_| random_formula(r, depth - 1, dim, max_bound))
                .collect(),
        ),
        2 => {
            let (a, b) = interval(r);
            StlFormula::always(a, b, random_formula(r, depth - 1, dim, max_bound))
        }
        3 => {
            let (a, b) = interval(r);
            StlFormula::eventually(a, b, random_formula(r, depth - 1, dim, max_bound))
        }
        _ => {
            let (a, b) = interval(r);
            StlFormula::until(
                a,
                b,
                random_formula(r, depth - 1, dim, max_bound),
                random_formula(r, depth - 1, dim, max_bound),
            )
        }
    }
}

/// Whether `lit` can be forced to `true` and to `false` in `model`.
fn forced_outcomes(model: &MilpModel, lit: Lit) -> (bool, bool) {
    let feasible = |value: f64| match lit {
        Lit::Const(b) => b == (value == 1.0),
        Lit::Var(v) => {
            let mut m = model.clone();
            m.fix(v, value).unwrap();
            solve_milp(&m).is_optimal()
        }
    };
    (feasible(1.0), feasible(0.0))
}

/// Encodes `f` at step 0 over a signal of variables pinned by equality rows to
/// `samples`, and reports which verdicts the model admits.
pub fn stl_encoding_outcomes(f: &StlFormula, samples: &[Vec<f64>]) -> (bool, bool) {
    let mut model = MilpModel::new();
    let signal = samples
        .iter()
        .enumerate()
        .map(|(t, s)| {
            s.iter()
                .enumerate()
                .map(|(j, &x)| {
                    let v = model.add_continuous(-10.0, 10.0, format!("x{j}_{t}")).unwrap();
                    model.add_constraint([(v, 1.0)], Sense::Eq, x).unwrap();
                    LinExpr::var(v)
                })
                .collect()
        })
        .collect();
    let mut ctx = EncodingContext::from_signal(signal);
    let lit = encode_stl(&mut model, &mut ctx, f, 0).unwrap();
    forced_outcomes(&model, lit)
}

/// Same for a spatial formula at the root, over leaves pinned to `counts`.
pub fn tssl_encoding_outcomes(f: &TsslFormula, counts: &GridMatrix<u32>) -> (bool, bool) {
    let mut model = MilpModel::new();
    let leaves = GridMatrix::from_fn(counts.side(), |m, n| {
        let v = model.add_continuous(0.0, 10.0, format!("c_{m}_{n}")).unwrap();
        model
            .add_constraint([(v, 1.0)], Sense::Eq, *counts.get(m, n) as f64)
            .unwrap();
        LinExpr::var(v)
    });
    let mut ctx = EncodingContext::from_leaves(vec![leaves]);
    let lit = encode_tssl(&mut model, &mut ctx, f, NodeId::ROOT, 0).unwrap();
    forced_outcomes(&model, lit)
}
