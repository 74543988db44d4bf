use commplan::logic::{eval_stl, horizon, parse_stl, Predicate, RawStl, Signal, StlFormula};
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

mod common;

/// Bottom-up satisfaction table: `table[k]` is `Some(verdict)` when the
/// signal is long enough to decide `f` at `k`.
fn table(f: &StlFormula, s: &Signal) -> Vec<Option<bool>> {
    let n = s.len();
    let window = |a: usize, b: usize, c: &[Option<bool>], all: bool| -> Vec<Option<bool>> {
        (0..n)
            .map(|k| {
                let slice = c.get(k + a..=k + b)?;
                let vals: Option<Vec<bool>> = slice.iter().copied().collect();
                vals.map(|v| {
                    if all {
                        v.iter().all(|&x| x)
                    } else {
                        v.iter().any(|&x| x)
                    }
                })
            })
            .collect()
    };
    match f {
        StlFormula::True => vec![Some(true); n],
        StlFormula::Pred(p) => s.samples().iter().map(|x| Some(p.value(x).unwrap() > 0.0)).collect(),
        StlFormula::NotPred(p) => s.samples().iter().map(|x| Some(p.value(x).unwrap() <= 0.0)).collect(),
        StlFormula::And(cs) | StlFormula::Or(cs) => {
            let conj = matches!(f, StlFormula::And(_));
            let subs: Vec<_> = cs.iter().map(|c| table(c, s)).collect();
            (0..n)
                .map(|k| {
                    let v: Option<Vec<bool>> = subs.iter().map(|t| t[k]).collect();
                    v.map(|v| {
                        if conj {
                            v.iter().all(|&x| x)
                        } else {
                            v.iter().any(|&x| x)
                        }
                    })
                })
                .collect()
        }
        StlFormula::Always(a, b, c) => window(*a, *b, &table(c, s), true),
        StlFormula::Eventually(a, b, c) => window(*a, *b, &table(c, s), false),
        StlFormula::Until(a, b, l, r) => {
            let (tl, tr) = (table(l, s), table(r, s));
            // prefix-and of the left operand: holds on [k, t] for each t
            (0..n)
                .map(|k| {
                    if k + b >= n {
                        return None;
                    }
                    let mut left_ok = true;
                    let mut found = false;
                    for t in k..=k + b {
                        left_ok &= tl[t]?;
                        if t >= k + a && left_ok && tr[t]? {
                            found = true;
                        }
                    }
                    Some(found)
                })
                .collect()
        }
        StlFormula::SpatialAtom(_) => unreachable!(),
    }
}

fn random_signal(r: &mut ChaCha8Rng, len: usize, dim: usize) -> Signal {
    Signal::new(
        (0..len)
            .map(|_| (0..dim).map(|_| r.gen_range(-3..=3) as f64).collect())
            .collect(),
    )
    .unwrap()
}

fn random_raw(r: &mut ChaCha8Rng, depth: usize) -> RawStl {
    if depth == 0 || r.gen_bool(0.25) {
        return match r.gen_range(0..8) {
            0 => RawStl::True,
            1 => RawStl::False,
            _ => RawStl::Pred(Predicate::new(
                vec![r.gen_range(-2..=2) as f64],
                r.gen_range(-2..=2) as f64,
            )),
        };
    }
    let sub = |r: &mut ChaCha8Rng| Box::new(random_raw(r, depth - 1));
    let a = r.gen_range(0..=2);
    let b = r.gen_range(a..=2);
    match r.gen_range(0..7) {
        0 | 1 => RawStl::Not(sub(r)),
        2 => RawStl::And(vec![*sub(r), *sub(r)]),
        3 => RawStl::Or(vec![*sub(r), *sub(r)]),
        4 => RawStl::Always(a, b, sub(r)),
        5 => RawStl::Eventually(a, b, sub(r)),
        // until only in positive position; see `positive_until`
        _ => RawStl::Until(a, b, sub(r), sub(r)),
    }
}

/// Reference semantics with general negation.
fn naive(f: &RawStl, s: &Signal, k: usize) -> bool {
    match f {
        RawStl::True => true,
        RawStl::False => false,
        RawStl::Pred(p) => p.value(s.sample(k)).unwrap() > 0.0,
        RawStl::Not(c) => !naive(c, s, k),
        RawStl::And(cs) => cs.iter().all(|c| naive(c, s, k)),
        RawStl::Or(cs) => cs.iter().any(|c| naive(c, s, k)),
        RawStl::Always(a, b, c) => (k + a..=k + b).all(|t| naive(c, s, t)),
        RawStl::Eventually(a, b, c) => (k + a..=k + b).any(|t| naive(c, s, t)),
        RawStl::Until(a, b, l, r) => (k + a..=k + b).any(|t| naive(r, s, t) && (k..=t).all(|u| naive(l, s, u))),
    }
}

fn raw_horizon(f: &RawStl) -> usize {
    match f {
        RawStl::True | RawStl::False | RawStl::Pred(_) => 0,
        RawStl::Not(c) => raw_horizon(c),
        RawStl::And(cs) | RawStl::Or(cs) => cs.iter().map(raw_horizon).max().unwrap_or(0),
        RawStl::Always(_, b, c) | RawStl::Eventually(_, b, c) => b + raw_horizon(c),
        RawStl::Until(_, b, l, r) => b + raw_horizon(l).max(raw_horizon(r)),
    }
}

/// Whether every until sits under an even number of negations.
fn positive_until(f: &RawStl, neg: bool) -> bool {
    match f {
        RawStl::True | RawStl::False | RawStl::Pred(_) => true,
        RawStl::Not(c) => positive_until(c, !neg),
        RawStl::And(cs) | RawStl::Or(cs) => cs.iter().all(|c| positive_until(c, neg)),
        RawStl::Always(_, _, c) | RawStl::Eventually(_, _, c) => positive_until(c, neg),
        RawStl::Until(_, _, l, r) => !neg && positive_until(l, neg) && positive_until(r, neg),
    }
}

#[test]
fn monitor_agrees_with_table_evaluator() {
    let mut r = common::rng(2024);
    let mut checked = 0;
    while checked < 1000 {
        let f = common::random_formula(&mut r, 4, 2, 2);
        let h = horizon(&f);
        if h + 1 > 12 {
            continue;
        }
        let len = r.gen_range(h + 1..=12);
        let s = random_signal(&mut r, len, 2);
        let t = table(&f, &s);
        for k in 0..len - h {
            assert_eq!(Some(eval_stl(&f, &s, k).unwrap()), t[k], "{f} at {k}");
        }
        checked += 1;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn negation_normal_form_preserves_verdicts(seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let raw = random_raw(&mut r, 4);
        prop_assume!(positive_until(&raw, false));
        let nnf = raw.to_nnf().unwrap();
        let h = raw_horizon(&raw);
        prop_assert_eq!(horizon(&nnf), h);
        let s = random_signal(&mut r, h + 3, 1);
        for k in 0..3 {
            prop_assert_eq!(eval_stl(&nnf, &s, k).unwrap(), naive(&raw, &s, k), "{:?}", raw);
        }
    }

    #[test]
    fn printed_formulas_reparse_to_the_same_tree(seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let f = common::random_formula(&mut r, 3, 2, 3);
        let printed = f.to_string();
        let back = parse_stl(&printed).unwrap();
        let s = random_signal(&mut r, horizon(&f) + 2, 2);
        prop_assert_eq!(eval_stl(&back, &s, 0).unwrap(), eval_stl(&f, &s, 0).unwrap(), "{}", printed);
    }

    #[test]
    fn horizon_is_tight(seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let f = common::random_formula(&mut r, 3, 1, 3);
        let h = horizon(&f);
        let k = r.gen_range(0..3usize);
        let s = random_signal(&mut r, k + h + 4, 1);
        let base = eval_stl(&f, &s, k).unwrap();
        let mut samples = s.samples().to_vec();
        for x in samples.iter_mut().skip(k + h + 1) {
            x[0] = r.gen_range(-9..=9) as f64;
        }
        prop_assert_eq!(eval_stl(&f, &Signal::new(samples).unwrap(), k).unwrap(), base);
    }

    #[test]
    fn until_implies_eventually(seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let (a, b) = { let a = r.gen_range(0..4); (a, r.gen_range(a..5)) };
        let left = common::random_formula(&mut r, 2, 1, 2);
        let right = common::random_formula(&mut r, 2, 1, 2);
        let u = StlFormula::until(a, b, left, right.clone());
        let ev = StlFormula::eventually(a, b, right);
        let s = random_signal(&mut r, horizon(&u) + 1, 1);
        if eval_stl(&u, &s, 0).unwrap() {
            prop_assert!(eval_stl(&ev, &s, 0).unwrap());
        }
    }
}
