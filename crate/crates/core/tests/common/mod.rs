//! Polyhedron generators and property checks shared by the property suites
//! and the acceptance target.

#![allow(dead_code)]

pub mod models;

use std::collections::BTreeSet;

use num_traits::{Signed, Zero};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

use tarepair::polyhedra::{ConvexPolyhedron, LinExpr, LinearInequality, Point, Rel, Var};
use tarepair::rational::{int, ratio, Rational};

pub const CASES: u32 = 500;

/// Variable sets of the generated polyhedra.
pub fn one_clock_two_params() -> Vec<Var> {
    vec![Var::clock("x"), Var::param("p"), Var::param("q")]
}

pub fn two_clocks_one_param() -> Vec<Var> {
    vec![Var::clock("x"), Var::clock("y"), Var::param("p")]
}

fn rel() -> impl Strategy<Value = Rel> {
    prop_oneof![4 => Just(Rel::Le), 4 => Just(Rel::Lt), 1 => Just(Rel::Eq)]
}

/// `Σ cᵢ·vᵢ + k ⋈ 0` with `cᵢ ∈ [-5, 5]` and `k ∈ [-10, 10]`.
fn atom(vars: Vec<Var>) -> impl Strategy<Value = LinearInequality> {
    (proptest::collection::vec(-5i64..=5, vars.len()), -10i64..=10, rel()).prop_map(move |(cs, k, rel)| {
        let mut e = LinExpr::constant(int(k));
        for (v, c) in vars.iter().zip(cs) {
            if c != 0 {
                e.add_term(int(c), v.clone());
            }
        }
        LinearInequality::from_expr(e, rel)
    })
}

/// A generated polyhedron with the atoms it was built from, which checks
/// evaluate directly instead of trusting the normalized form.
#[derive(Debug, Clone)]
pub struct Case {
    pub atoms: Vec<LinearInequality>,
    pub poly: ConvexPolyhedron,
}

pub fn polyhedron(vars: Vec<Var>) -> impl Strategy<Value = Case> {
    let space: BTreeSet<Var> = vars.iter().cloned().collect();
    proptest::collection::vec(atom(vars), 1..=4).prop_map(move |atoms| Case {
        poly: ConvexPolyhedron::new(space.clone(), atoms.clone()).expect("atoms stay in the space"),
        atoms,
    })
}

/// Every point of `[-lim, lim]^n` on the grid of step `1/den`.
pub fn grid(vars: &[Var], lim: i64, den: i64) -> Vec<Point> {
    let axis: Vec<Rational> = (-lim * den..=lim * den).map(|k| ratio(k, den)).collect();
    let mut out = vec![Point::new()];
    for v in vars {
        out = out
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |x| {
                    let mut q = p.clone();
                    q.insert(v.clone(), x.clone());
                    q
                })
            })
            .collect();
    }
    out
}

/// Atom truth computed term by term, independently of the library.
pub fn direct_holds(a: &LinearInequality, point: &Point) -> bool {
    let mut lhs = a.constant.clone();
    for (v, c) in &a.coeffs {
        lhs += c * &point[v];
    }
    match a.rel {
        Rel::Lt => lhs.is_negative(),
        Rel::Le => !lhs.is_positive(),
        Rel::Eq => lhs.is_zero(),
    }
}

fn fail(msg: String) -> Result<(), TestCaseError> {
    Err(TestCaseError::fail(msg))
}

fn sat(p: &ConvexPolyhedron) -> Result<bool, TestCaseError> {
    p.is_satisfiable().map_err(|e| TestCaseError::fail(e.to_string()))
}

/// Random rational points agree with term-by-term evaluation.
pub fn check_sampling(c: &Case, points: &[Point]) -> Result<(), TestCaseError> {
    let p = &c.poly;
    for pt in points {
        let direct = c.atoms.iter().all(|a| direct_holds(a, pt));
        if p.contains_point(pt) != direct {
            return fail(format!("{p} disagrees with evaluation at {pt:?}"));
        }
    }
    Ok(())
}

/// Whether some value of `x` satisfies every atom once `params` is fixed,
/// decided by intersecting the one-dimensional bounds directly.
fn extends(atoms: &[LinearInequality], x: &Var, params: &Point) -> bool {
    let mut lo: Option<(Rational, bool)> = None;
    let mut hi: Option<(Rational, bool)> = None;
    let mut eq: Option<Rational> = None;
    for a in atoms {
        let mut rest = a.constant.clone();
        for (v, c) in &a.coeffs {
            if v != x {
                rest += c * &params[v];
            }
        }
        let c = a.coeff(x);
        if c.is_zero() {
            let ok = match a.rel {
                Rel::Lt => rest.is_negative(),
                Rel::Le => !rest.is_positive(),
                Rel::Eq => rest.is_zero(),
            };
            if !ok {
                return false;
            }
            continue;
        }
        // c·x + rest ⋈ 0, so x ⋈' -rest / c
        let bound = -(&rest / &c);
        let strict = a.rel == Rel::Lt;
        match a.rel {
            Rel::Eq => {
                if eq.as_ref().is_some_and(|e| *e != bound) {
                    return false;
                }
                eq = Some(bound);
            }
            _ if c.is_positive() => {
                if hi.as_ref().is_none_or(|(h, hs)| bound < *h || (bound == *h && strict && !hs)) {
                    hi = Some((bound, strict));
                }
            }
            _ => {
                if lo.as_ref().is_none_or(|(l, ls)| bound > *l || (bound == *l && strict && !ls)) {
                    lo = Some((bound, strict));
                }
            }
        }
    }
    let above = |v: &Rational| lo.as_ref().is_none_or(|(l, s)| if *s { v > l } else { v >= l });
    let below = |v: &Rational| hi.as_ref().is_none_or(|(h, s)| if *s { v < h } else { v <= h });
    match eq {
        Some(e) => above(&e) && below(&e),
        None => match (&lo, &hi) {
            (Some((l, ls)), Some((h, hs))) => l < h || (l == h && !ls && !hs),
            _ => true,
        },
    }
}

/// A parameter point lies in the projection iff the clock can be chosen,
/// over the grid `[-2, 2]²` at step 1/4.
pub fn check_projection(c: &Case) -> Result<(), TestCaseError> {
    let p = &c.poly;
    let vars = one_clock_two_params();
    let x = &vars[0];
    let proj = p.project_onto_params().map_err(|e| TestCaseError::fail(e.to_string()))?;
    for params in grid(&vars[1..], 2, 4) {
        let witness = extends(&c.atoms, x, &params);
        if proj.contains_point(&params) != witness {
            return fail(format!("projection of {p} is {proj}; wrong at {params:?} (witness {witness})"));
        }
    }
    Ok(())
}

/// Delays of clock points of `p` stay inside the time elapse.
pub fn check_time_elapse(c: &Case) -> Result<(), TestCaseError> {
    let p = &c.poly;
    let vars = two_clocks_one_param();
    let up = p.time_elapse().map_err(|e| TestCaseError::fail(e.to_string()))?;
    let delays = [int(0), ratio(1, 3), int(2), int(10)];
    for w in grid(&vars, 3, 2).into_iter().filter(|w| c.atoms.iter().all(|a| direct_holds(a, w))) {
        for d in &delays {
            let mut moved = w.clone();
            for v in vars.iter().filter(|v| v.is_clock()) {
                moved.insert(v.clone(), &w[v] + d);
            }
            if !up.contains_point(&moved) {
                return fail(format!("{w:?} + {d} escapes the time elapse {up} of {p}"));
            }
        }
    }
    Ok(())
}

/// Each sampled point lies in exactly one of `p` and its negation.
pub fn check_negate(c: &Case) -> Result<(), TestCaseError> {
    let p = &c.poly;
    let vars = two_clocks_one_param();
    let neg = p.negate().map_err(|e| TestCaseError::fail(e.to_string()))?;
    for pt in grid(&vars, 3, 2) {
        let inside = c.atoms.iter().all(|a| direct_holds(a, &pt));
        if p.contains_point(&pt) != inside || neg.contains_point(&pt) == inside {
            return fail(format!("{pt:?} is in both or neither of {p} and {neg}"));
        }
    }
    Ok(())
}

fn with(p: &ConvexPolyhedron, atoms: Vec<LinearInequality>) -> ConvexPolyhedron {
    p.constrain_all(atoms).expect("variables are in the space")
}

/// Closed endpoints are attained, open ones approached within 1/1000,
/// unbounded sides reach past one million, and grid points stay inside.
pub fn check_bounds(c: &Case) -> Result<(), TestCaseError> {
    let p = &c.poly;
    let vars = two_clocks_one_param();
    if !sat(p)? {
        return Ok(());
    }
    let eps = ratio(1, 1000);
    let far = int(1_000_000);
    for v in &vars {
        let iv = p.variable_bounds(v).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let at = |b: &Rational| LinExpr::var(v.clone()).eq(LinExpr::constant(b.clone()));
        let gt = |b: &Rational| LinExpr::var(v.clone()).gt(LinExpr::constant(b.clone()));
        let lt = |b: &Rational| LinExpr::var(v.clone()).lt(LinExpr::constant(b.clone()));
        match &iv.lower {
            Some(lo) if iv.lower_closed => {
                if !sat(&with(p, vec![at(lo)]))? {
                    return fail(format!("lower bound {lo} of {v} is not attained in {p}"));
                }
            }
            Some(lo) => {
                if sat(&with(p, vec![at(lo)]))? || !sat(&with(p, vec![gt(lo), lt(&(lo + &eps))]))? {
                    return fail(format!("open lower bound {lo} of {v} is not tight in {p}"));
                }
            }
            None => {
                if !sat(&with(p, vec![lt(&-far.clone())]))? {
                    return fail(format!("{v} is bounded below in {p} but reported unbounded"));
                }
            }
        }
        match &iv.upper {
            Some(hi) if iv.upper_closed => {
                if !sat(&with(p, vec![at(hi)]))? {
                    return fail(format!("upper bound {hi} of {v} is not attained in {p}"));
                }
            }
            Some(hi) => {
                if sat(&with(p, vec![at(hi)]))? || !sat(&with(p, vec![lt(hi), gt(&(hi - &eps))]))? {
                    return fail(format!("open upper bound {hi} of {v} is not tight in {p}"));
                }
            }
            None => {
                if !sat(&with(p, vec![gt(&far)]))? {
                    return fail(format!("{v} is bounded above in {p} but reported unbounded"));
                }
            }
        }
        for pt in grid(&vars, 3, 2).into_iter().filter(|pt| c.atoms.iter().all(|a| direct_holds(a, pt))) {
            if !iv.contains(&pt[v]) {
                return fail(format!("{pt:?} of {p} lies outside the bounds {iv} of {v}"));
            }
        }
    }
    Ok(())
}

/// Random rational points of `[-3, 3]^3` with denominators up to 6.
pub fn points(vars: Vec<Var>, n: usize) -> impl Strategy<Value = Vec<Point>> {
    let coord = (-18i64..=18, 1i64..=6).prop_map(|(n, d)| ratio(n, d));
    proptest::collection::vec(proptest::collection::vec(coord, vars.len()), n)
        .prop_map(move |rows| rows.into_iter().map(|r| vars.iter().cloned().zip(r).collect()).collect())
}

/// Runs `check` on `cases` generated values with a fixed seed.
pub fn run_cases<S: Strategy>(
    cases: u32,
    strategy: S,
    check: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<u32, String> {
    let mut runner = TestRunner::new_with_rng(
        Config {
            cases,
            failure_persistence: None,
            ..Config::default()
        },
        proptest::test_runner::TestRng::deterministic_rng(proptest::test_runner::RngAlgorithm::ChaCha),
    );
    runner.run(&strategy, check).map(|()| cases).map_err(|e| e.to_string())
}
