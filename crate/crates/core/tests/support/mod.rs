//! Randomized properties checked against exact rational arithmetic.
//!
//! Shared by the `properties` and `acceptance` test targets; every check
//! returns the shrunk counterexample as an error instead of panicking.

#![allow(dead_code)]

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use proptest::prelude::*;
use proptest::test_runner::{TestCaseError, TestRunner};

use robustpave::approxset::{split_rule, ApproximateSet};
use robustpave::constraint::{parse_inequality, CacheId};
use robustpave::expr::{self, Expr, VecExpr};
use robustpave::{Constraint, DiscreteSystem, Interval, IntervalBox, Solver, SolverConfig, Stages, Truth};

/// Runs `test` on `cases` random inputs.
pub fn check<S>(cases: u32, strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<(), String>
where
    S: Strategy,
    S::Value: std::fmt::Debug,
{
    let config = ProptestConfig {
        cases,
        failure_persistence: None,
        ..ProptestConfig::default()
    };
    TestRunner::new(config).run(&strategy, test).map_err(|e| e.to_string())
}

fn q(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite")
}

fn in_interval(x: &BigRational, i: Interval) -> bool {
    q(i.lo()) <= *x && *x <= q(i.hi())
}

/// Exact value of a decimal literal such as `-12.5e-3`.
fn decimal(text: &str) -> BigRational {
    let (neg, body) = match text.strip_prefix('-') {
        Some(r) => (true, r),
        None => (false, text),
    };
    let (mant, exp) = match body.split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse::<i64>().unwrap()),
        None => (body, 0),
    };
    let (int, frac) = mant.split_once('.').unwrap_or((mant, ""));
    let digits: BigInt = format!("{int}{frac}").parse().unwrap();
    let scale = exp - frac.len() as i64;
    let ten = BigRational::from_integer(BigInt::from(10));
    let mut v = BigRational::from_integer(digits);
    for _ in 0..scale.unsigned_abs() {
        if scale > 0 {
            v *= &ten;
        } else {
            v /= &ten;
        }
    }
    if neg {
        -v
    } else {
        v
    }
}

fn exact_eval(e: &Expr, env: &HashMap<&str, BigRational>) -> BigRational {
    match e {
        Expr::Const(c) => decimal(c.text()),
        Expr::Var(v) => env[v.as_str()].clone(),
        Expr::Add(a, b) => exact_eval(a, env) + exact_eval(b, env),
        Expr::Sub(a, b) => exact_eval(a, env) - exact_eval(b, env),
        Expr::Mul(a, b) => exact_eval(a, env) * exact_eval(b, env),
        Expr::Neg(a) => -exact_eval(a, env),
    }
}

/// A finite double of varied magnitude.
fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![
        -4.0..4.0f64,
        (-1e6..1e6f64),
        (-1e-6..1e-6f64),
        (any::<i32>(), -40i32..40).prop_map(|(m, e)| m as f64 * 2f64.powi(e)),
        Just(0.0),
        Just(0.1),
        Just(-0.1),
    ]
}

fn interval() -> impl Strategy<Value = Interval> {
    (finite(), finite()).prop_map(|(a, b)| Interval::new(a.min(b), a.max(b)))
}

/// A rational point of `i`: lo + t * (hi - lo) with t in [0, 1].
fn point_in(i: Interval, num: u32, den: u32) -> BigRational {
    let t = BigRational::new(BigInt::from(num.min(den)), BigInt::from(den.max(1)));
    q(i.lo()) + t * (q(i.hi()) - q(i.lo()))
}

fn sub_interval(i: Interval, a: f64, b: f64) -> Interval {
    let at = |t: f64| (i.lo() + t * (i.hi() - i.lo())).clamp(i.lo(), i.hi());
    let (x, y) = (at(a.min(b)), at(a.max(b)));
    Interval::new(x, y)
}

pub fn arithmetic_contains_exact_results(cases: u32) -> Result<(), String> {
    check(cases, (interval(), interval(), 0u32..=1000, 0u32..=1000), |(a, b, na, nb)| {
        let x = point_in(a, na, 1000);
        let y = point_in(b, nb, 1000);
        prop_assert!(in_interval(&(&x + &y), a + b), "{a} + {b}");
        prop_assert!(in_interval(&(&x - &y), a - b), "{a} - {b}");
        prop_assert!(in_interval(&(&x * &y), a * b), "{a} * {b}");
        prop_assert!(in_interval(&-x.clone(), -a));
        Ok(())
    })
}

pub fn arithmetic_is_inclusion_monotone(cases: u32) -> Result<(), String> {
    check(cases, (interval(), interval(), (0.0..1.0f64, 0.0..1.0f64), (0.0..1.0f64, 0.0..1.0f64)), |(a, b, s, t)| {
        let a2 = sub_interval(a, s.0, s.1);
        let b2 = sub_interval(b, t.0, t.1);
        prop_assert!((a2 + b2).is_subset(&(a + b)));
        prop_assert!((a2 - b2).is_subset(&(a - b)));
        prop_assert!((a2 * b2).is_subset(&(a * b)));
        Ok(())
    })
}

pub fn bisection_partitions_the_box(cases: u32) -> Result<(), String> {
    check(cases, (prop::collection::vec(interval(), 1..4), 0usize..4), |(sides, axis_pick)| {
        let b = IntervalBox::new(sides);
        let axis = axis_pick % b.dim();
        match b.bisect(axis) {
            Ok((l, r)) => {
                let mid = l.side(axis).hi();
                prop_assert_eq!(mid, r.side(axis).lo());
                prop_assert!(b.side(axis).lo() < mid && mid < b.side(axis).hi());
                prop_assert_eq!(l.hull(&r).unwrap(), b.clone());
                for k in 0..b.dim() {
                    if k != axis {
                        prop_assert_eq!(l.side(k), b.side(k));
                        prop_assert_eq!(r.side(k), b.side(k));
                    }
                }
                let exact = |x: &IntervalBox| x.sides().iter().fold(BigRational::one(), |acc, s| acc * (q(s.hi()) - q(s.lo())));
                prop_assert_eq!(exact(&l) + exact(&r), exact(&b));
                let (vl, vr, v) = (l.volume(), r.volume(), b.volume());
                if v.is_finite() && v > 0.0 {
                    prop_assert!(((vl + vr) - v).abs() <= v * 4.0 * b.dim() as f64 * f64::EPSILON);
                }
            }
            Err(_) => prop_assert!(b.side(axis).split_point().is_none()),
        }
        Ok(())
    })
}

/// Random expression text over `x` and `y` with short decimal constants.
fn expr_text() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        Just("x".to_string()),
        Just("y".to_string()),
        (-50i32..50, 0u32..3).prop_map(|(m, k)| {
            let v = m.unsigned_abs();
            let p = 10u32.pow(k);
            let sign = if m < 0 { "-" } else { "" };
            if k == 0 { format!("{sign}{v}") } else { format!("{sign}{}.{:0width$}", v / p, v % p, width = k as usize) }
        }),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}) + ({b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}) - ({b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a})*({b})")),
            inner.prop_map(|a| format!("-({a})")),
        ]
    })
}

pub fn interval_evaluation_encloses_exact_values(cases: u32) -> Result<(), String> {
    check(cases, (expr_text(), interval(), interval(), prop::collection::vec((0u32..=64, 0u32..=64), 2)), |(text, bx, by, pts)| {
        let e = expr::parse(&text, &["x", "y"]).unwrap();
        let env = [("x", bx), ("y", by)];
        let range = e.eval_interval(&env).unwrap();
        for (px, py) in pts {
            let point = HashMap::from([("x", point_in(bx, px, 64)), ("y", point_in(by, py, 64))]);
            let v = exact_eval(&e, &point);
            prop_assert!(in_interval(&v, range), "{} at {:?} not in {}", e, point, range);
        }
        Ok(())
    })
}

pub fn interval_evaluation_is_inclusion_monotone(cases: u32) -> Result<(), String> {
    check(cases, (expr_text(), interval(), interval(), (0.0..1.0f64, 0.0..1.0f64), (0.0..1.0f64, 0.0..1.0f64)), |(text, bx, by, s, t)| {
        let e = expr::parse(&text, &["x", "y"]).unwrap();
        let outer = e.eval_interval(&[("x", bx), ("y", by)]).unwrap();
        let inner = e
            .eval_interval(&[("x", sub_interval(bx, s.0, s.1)), ("y", sub_interval(by, t.0, t.1))])
            .unwrap();
        prop_assert!(inner.is_subset(&outer));
        Ok(())
    })
}

pub fn printing_then_parsing_is_identity(cases: u32) -> Result<(), String> {
    check(cases, expr_text(), |text| {
        let e = expr::parse(&text, &["x", "y"]).unwrap();
        let printed = e.to_string();
        prop_assert_eq!(expr::parse(&printed, &["x", "y"]).unwrap(), e);
        Ok(())
    })
}

pub fn decimal_literals_are_enclosed(cases: u32) -> Result<(), String> {
    check(cases, (any::<i64>(), 0u32..25, -30i32..30), |(m, k, e)| {
        let digits = m.unsigned_abs().to_string();
        let k = (k as usize).min(digits.len());
        let (int, frac) = digits.split_at(digits.len() - k);
        let int = if int.is_empty() { "0" } else { int };
        let sign = if m < 0 { "-" } else { "" };
        let text = if frac.is_empty() { format!("{sign}{int}e{e}") } else { format!("{sign}{int}.{frac}e{e}") };
        let c: expr::Constant = text.parse().unwrap();
        let exact = decimal(&text);
        prop_assert!(in_interval(&exact, c.enclosure()), "{}", text);
        let i = c.enclosure();
        prop_assert!(i.hi() == i.lo() || i.lo().next_up() == i.hi());
        Ok(())
    })
}

fn square() -> IntervalBox {
    IntervalBox::from_bounds(&[(-1.0, 1.0), (-1.0, 1.0)])
}

/// Dyadic sub-box of `root` reached by following `path` (false = lower half).
fn dyadic(root: &IntervalBox, path: &[bool]) -> IntervalBox {
    let mut b = root.clone();
    for &upper in path {
        let Some((axis, _)) = split_rule(&b) else { break };
        let (l, r) = b.bisect(axis).unwrap();
        b = if upper { r } else { l };
    }
    b
}

fn truth() -> impl Strategy<Value = Truth> {
    prop_oneof![Just(Truth::True), Just(Truth::False), Just(Truth::Unknown)]
}

fn sample_points() -> Vec<[f64; 2]> {
    let mut pts = Vec::new();
    for i in 0..=16 {
        for j in 0..=16 {
            pts.push([-1.0 + i as f64 / 8.0, -1.0 + j as f64 / 8.0]);
        }
    }
    pts
}

pub fn approximate_sets_stay_partitioned(cases: u32) -> Result<(), String> {
    check(cases, prop::collection::vec((prop::collection::vec(any::<bool>(), 0..7), truth()), 1..25), |updates| {
        let mut s = ApproximateSet::new_unknown(square()).unwrap();
        for (path, t) in &updates {
            s.set_region(dyadic(&square(), path), *t).unwrap();
            prop_assert_eq!(s.check_invariants(), Ok(()));
        }
        let last = updates.last().unwrap();
        let region = dyadic(&square(), &last.0);
        prop_assert_eq!(s.value_at(&region.center()).unwrap(), last.1);
        Ok(())
    })
}

pub fn refining_unknown_leaves_never_raises_err(cases: u32) -> Result<(), String> {
    check(cases, (prop::collection::vec((prop::collection::vec(any::<bool>(), 0..4), prop::collection::vec(truth(), 1..9)), 1..20), prop::collection::vec(any::<bool>(), 0..4)), |(steps, within)| {
        let within = dyadic(&square(), &within);
        let mut s = ApproximateSet::new_unknown(square()).unwrap();
        let mut err = s.err(&within);
        for (path, values) in steps {
            let Some(leaf) = s.choose(&dyadic(&square(), &path)) else { continue };
            let mut next = values.into_iter().cycle();
            let refined = ApproximateSet::grow(leaf, |_, depth| {
                if depth < 3 { robustpave::approxset::Grow::Split } else { robustpave::approxset::Grow::Leaf(next.next().unwrap()) }
            }).unwrap();
            s.embed(&refined).unwrap();
            let now = s.err(&within);
            prop_assert!(now <= err, "{} > {}", now, err);
            err = now;
            prop_assert_eq!(s.check_invariants(), Ok(()));
        }
        Ok(())
    })
}

pub fn disjoint_embeds_commute(cases: u32) -> Result<(), String> {
    check(cases, (prop::collection::vec(any::<bool>(), 1..6), truth(), prop::collection::vec(any::<bool>(), 1..6), truth()), |(a, ta, b, tb)| {
        let (ra, rb) = (dyadic(&square(), &a), dyadic(&square(), &b));
        let overlap = ra.intersect(&rb).unwrap();
        prop_assume!(overlap.is_empty() || overlap.sides().iter().any(|s| s.is_degenerate()));
        let mut ab = ApproximateSet::new_unknown(square()).unwrap();
        ab.set_region(ra.clone(), ta).unwrap();
        ab.set_region(rb.clone(), tb).unwrap();
        let mut ba = ApproximateSet::new_unknown(square()).unwrap();
        ba.set_region(rb, tb).unwrap();
        ba.set_region(ra, ta).unwrap();
        for p in sample_points() {
            let (x, y) = (p[0] + 1.0 / 64.0, p[1] + 1.0 / 64.0);
            if x <= 1.0 && y <= 1.0 {
                prop_assert_eq!(ab.value_at(&[x, y]).unwrap(), ba.value_at(&[x, y]).unwrap());
            }
        }
        Ok(())
    })
}

pub fn kleene_laws() -> Result<(), String> {
    let all = [Truth::True, Truth::False, Truth::Unknown];
    let law = |ok: bool, what: &str, a: Truth, b: Truth| {
        if ok {
            Ok(())
        } else {
            Err(format!("{what} fails for {a}, {b}"))
        }
    };
    for a in all {
        for b in all {
            law(a & b == b & a, "commutative and", a, b)?;
            law(a | b == b | a, "commutative or", a, b)?;
            for c in all {
                law((a & b) & c == a & (b & c), "associative and", a, b)?;
                law((a | b) | c == a | (b | c), "associative or", a, b)?;
            }
            // refining an argument from U can only refine the result
            for a2 in all.into_iter().filter(|x| x.refines(a)) {
                law((a2 & b).refines(a & b), "monotone and", a2, b)?;
                law((a2 | b).refines(a | b), "monotone or", a2, b)?;
            }
        }
    }
    Ok(())
}

/// Random small systems: up to 3 states, 2 controls, 2 perturbations.
fn small_system() -> impl Strategy<Value = DiscreteSystem> {
    (1usize..4, 0usize..3, 0usize..3, 0usize..4)
        .prop_flat_map(|(a, u, w, n)| {
            let comps = prop::collection::vec((0usize..8, 0usize..8, -3i32..4), a);
            let atoms = prop::collection::vec((0usize..a, any::<bool>(), 1i32..3), 1..4);
            (Just((a, u, w, n)), comps, atoms)
        })
        .prop_map(|((a, u, w, n), comps, atoms)| {
            let states: Vec<String> = (0..a).map(|i| format!("s{i}")).collect();
            let controls: Vec<String> = (0..u).map(|i| format!("c{i}")).collect();
            let perturbations: Vec<String> = (0..w).map(|i| format!("p{i}")).collect();
            let all: Vec<String> = states.iter().chain(&controls).chain(&perturbations).cloned().collect();
            let declared: Vec<&str> = all.iter().map(String::as_str).collect();
            let texts: Vec<String> = comps
                .iter()
                .map(|(i, j, k)| format!("{k}*{}*{} + {}", all[i % all.len()], all[j % all.len()], all[(i + j) % all.len()]))
                .collect();
            let transition = VecExpr::parse(states.clone(), &texts, &declared).unwrap();
            let state_refs: Vec<&str> = states.iter().map(String::as_str).collect();
            let allowed: Vec<Constraint> = atoms
                .iter()
                .flat_map(|(i, upper, b)| {
                    let text = if *upper { format!("{} <= {b}", states[*i]) } else { format!("-{b} <= {}", states[*i]) };
                    parse_inequality(&text, &state_refs).unwrap()
                })
                .collect();
            let unit = |d: usize| (d > 0).then(|| IntervalBox::from_bounds(&vec![(-0.5, 0.5); d]));
            DiscreteSystem {
                state_vars: states,
                control_vars: controls,
                perturbation_vars: perturbations,
                horizon: n,
                transition,
                allowed: Stages::Constant(allowed),
                control_domain: Stages::Constant(unit(u)),
                perturbation_domain: Stages::Constant(unit(w)),
                initial_box: IntervalBox::from_bounds(&vec![(-1.0, 1.0); a]),
            }
        })
}

pub fn unrollings_are_well_formed(cases: u32) -> Result<(), String> {
    check(cases, small_system(), |sys| {
        sys.validate().unwrap();
        let composed = sys.unroll_composed().unwrap();
        prop_assert_eq!(composed.well_formed(), Ok(()));
        prop_assert_eq!(composed.cache_ids(), (1..=sys.horizon as u32).map(CacheId).collect::<Vec<_>>());
        let naive = sys.unroll_naive().unwrap();
        prop_assert_eq!(naive.well_formed(), Ok(()));
        for c in [&composed, &naive] {
            prop_assert!(c.free_vars().iter().all(|v| sys.state_vars.contains(v)));
        }
        Ok(())
    })
}

/// T boxes satisfy the constraint everywhere and F boxes nowhere; checked
/// at the corners and centre with exact arithmetic.
pub fn pavings_are_sound(cases: u32) -> Result<(), String> {
    check(cases, (expr_text(), -3i32..4), |(lhs, bound)| {
        let c = Constraint::le(expr::parse(&lhs, &["x", "y"]).unwrap(), Expr::constant(bound as f64));
        let domain = IntervalBox::from_bounds(&[(-2.0, 2.0), (-2.0, 2.0)]);
        let cfg = SolverConfig { target_err: 0.5, ..SolverConfig::for_domain(&domain) };
        let names = vec!["x".to_string(), "y".to_string()];
        let mut solver = Solver::new(&c, &names, &domain, cfg).unwrap();
        let (paving, _) = solver.pave();
        let Constraint::Le(l, _) = &c else { unreachable!() };
        let b = BigRational::from_integer(BigInt::from(bound));
        for (bx, t) in &paving.boxes {
            if *t == Truth::Unknown {
                continue;
            }
            let (sx, sy) = (bx.side(0), bx.side(1));
            let mid = |i: Interval| (q(i.lo()) + q(i.hi())) / BigRational::from_integer(BigInt::from(2));
            for (px, py) in [(q(sx.lo()), q(sy.lo())), (q(sx.hi()), q(sy.hi())), (q(sx.lo()), q(sy.hi())), (mid(sx), mid(sy))] {
                let v = exact_eval(l, &HashMap::from([("x", px), ("y", py)]));
                let holds = !(v - &b).is_positive();
                prop_assert_eq!(holds, *t == Truth::True, "{} on {}", c, bx);
            }
        }
        let total = paving.boxes.iter().fold(BigRational::zero(), |acc, (bx, _)| {
            acc + (q(bx.side(0).hi()) - q(bx.side(0).lo())) * (q(bx.side(1).hi()) - q(bx.side(1).lo()))
        });
        prop_assert_eq!(total, BigRational::from_integer(BigInt::from(16)));
        Ok(())
    })
}

