mod common;

use std::collections::BTreeSet;

use common::models::*;
use proptest::prelude::*;

use tarepair::eval::syntactic_distance;
use tarepair::model::{ParamValuation, TimedWord};
use tarepair::oracle::{filter_tests, Test};
use tarepair::polyhedra::{ConvexPolyhedron, LinExpr, LinearInequality, PolyUnion, Rel, Var};
use tarepair::rational::{int, ratio, Rational};
use tarepair::repair::{instantiate, l1_distance, Domain, RepairConfig, RepairError};
use tarepair::semantics::{accepts, build_epzg, AcceptOptions, EpzgConfig};
use tarepair::synthesis::replay_tw;
use tarepair::testgen::{generate_test_data, Policy, TestgenConfig};

const PARAMS: &[&str] = &["p2", "p3", "p4"];

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

fn test_case() -> impl Strategy<Value = Test> {
    (word(vec!["a", "b"], 3), any::<bool>()).prop_map(|(word, verdict)| Test { word, verdict })
}

fn is_extension(long: &TimedWord, short: &TimedWord) -> bool {
    short.is_proper_prefix_of(long)
}

/// One disjunct over `p`, `q` with small integer coefficients.
fn disjunct() -> impl Strategy<Value = Vec<LinearInequality>> {
    let atom = (-3i64..=3, -3i64..=3, -12i64..=12, prop_oneof![Just(Rel::Le), Just(Rel::Lt), Just(Rel::Eq)]).prop_map(
        |(a, b, k, rel)| {
            let mut e = LinExpr::constant(int(k));
            e.add_term(int(a), Var::param("p"));
            e.add_term(int(b), Var::param("q"));
            LinearInequality::from_expr(e, rel)
        },
    );
    proptest::collection::vec(atom, 1..=3)
}

proptest! {
    #![proptest_config(config(256))]

    #[test]
    fn syntactic_distance_is_a_metric(
        a in valuation(PARAMS, 10),
        b in valuation(PARAMS, 10),
        c in valuation(PARAMS, 10),
    ) {
        let d = |x: &ParamValuation, y: &ParamValuation| syntactic_distance(x, y).unwrap();
        prop_assert_eq!(d(&a, &a), int(0));
        prop_assert_eq!(d(&a, &b), d(&b, &a));
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c));
    }

    #[test]
    fn filtering_keeps_witnesses_and_is_idempotent(tests in proptest::collection::vec(test_case(), 0..12)) {
        let kept = filter_tests(tests.clone());
        for t in &tests {
            if kept.tests.contains(t) {
                continue;
            }
            let witness = kept.tests.iter().any(|k| {
                k.verdict == t.verdict
                    && if t.verdict { is_extension(&k.word, &t.word) } else { is_extension(&t.word, &k.word) }
            });
            prop_assert!(witness, "{} removed without a kept witness", t.word);
        }
        prop_assert_eq!(filter_tests(kept.tests.clone()), kept);
    }

    #[test]
    fn repair_is_feasible_and_nearest(
        disjuncts in proptest::collection::vec(disjunct(), 1..=2),
        start in (0i64..=6, 0i64..=6),
        granularity in 1u32..=2,
    ) {
        let space: BTreeSet<Var> = [Var::param("p"), Var::param("q")].into_iter().collect();
        let polys = disjuncts
            .into_iter()
            .map(|atoms| ConvexPolyhedron::new(space.clone(), atoms).unwrap())
            .collect();
        let phi = PolyUnion::from_disjuncts(space, polys).unwrap();
        let v_init = ParamValuation::new(
            [("p".to_string(), int(start.0)), ("q".to_string(), int(start.1))].into_iter().collect(),
        )
        .unwrap();
        let cfg = RepairConfig {
            domain: if granularity == 1 { Domain::Integer } else { Domain::Rational { granularity } },
            ..RepairConfig::default()
        };
        // default box [0, 2 * max + 10], enumerated in lexicographic order
        let top = 2 * start.0.max(start.1) + 10;
        let g = i64::from(granularity);
        let mut best: Option<(Rational, ParamValuation)> = None;
        for i in 0..=top * g {
            for j in 0..=top * g {
                let v = ParamValuation::new(
                    [("p".to_string(), ratio(i, g)), ("q".to_string(), ratio(j, g))].into_iter().collect(),
                )
                .unwrap();
                if phi.contains_point(&v.to_point()) {
                    let d = l1_distance(v.as_map(), v_init.as_map());
                    if best.as_ref().is_none_or(|(b, _)| d < *b) {
                        best = Some((d, v));
                    }
                }
            }
        }
        match (instantiate(&phi, &v_init, &cfg), best) {
            (Ok(v_rep), Some((d, v_best))) => {
                prop_assert!(phi.contains_point(&v_rep.to_point()));
                prop_assert_eq!(l1_distance(v_rep.as_map(), v_init.as_map()), d);
                prop_assert_eq!(&v_rep, &v_best);
                if phi.contains_point(&v_init.to_point()) {
                    prop_assert_eq!(&v_rep, &v_init);
                }
            }
            (Err(RepairError::EmptyConstraint | RepairError::NothingInBox), None) => {}
            (got, want) => prop_assert!(false, "repair gave {:?}, enumeration {:?}", got, want),
        }
    }
}

proptest! {
    #![proptest_config(config(200))]

    #[test]
    fn replay_agrees_with_simulation(v in valuation(PARAMS, 8), w in running_word()) {
        let p = pta("running_example.pta.json");
        replay_agrees(&p, &v, &w).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn replay_of_a_timed_automaton_is_acceptance(w in word(vec!["a", "b", "c", "d"], 3), which in 0usize..3) {
        let name = ["running_example.ta.json", "re_oracle.ta.json", "alt_oracle.ta.json"][which];
        let t = ta(name);
        let phi = replay_tw(t.as_pta(), &w).unwrap();
        let accepted = accepts(&t, &w, AcceptOptions::default()).unwrap_or(false);
        prop_assert_eq!(!phi.is_empty().unwrap(), accepted, "{} on {}", name, w);
    }
}

fn running_data(policy: Policy, depth: usize) -> Vec<TimedWord> {
    let p = pta("running_example.pta.json");
    let g = build_epzg(&p, EpzgConfig { depth, merge: true }).unwrap();
    let mut cfg = TestgenConfig::new(policy, depth);
    cfg.cap = None;
    generate_test_data(&p, &g, &cfg).unwrap().words().cloned().collect()
}

proptest! {
    #![proptest_config(config(16))]

    #[test]
    fn generation_is_deterministic_and_monotone(seed in any::<u64>(), depth in 1usize..=3) {
        let policy = Policy::Random { seed, samples_per_state: 3 };
        let p = pta("running_example.pta.json");
        let g = build_epzg(&p, EpzgConfig { depth, merge: true }).unwrap();
        let cfg = TestgenConfig::new(policy, depth);
        let a = generate_test_data(&p, &g, &cfg).unwrap();
        let b = generate_test_data(&p, &g, &cfg).unwrap();
        prop_assert_eq!(a.to_jsonl(), b.to_jsonl());
        for w in a.words() {
            prop_assert!(w.steps().windows(2).all(|s| s[0].1 <= s[1].1), "{} decreases", w);
        }
    }
}

#[test]
fn policies_are_nested() {
    for depth in 1..=3 {
        let pm1: BTreeSet<TimedWord> = running_data(Policy::MinMaxPm1, depth).into_iter().collect();
        let two: BTreeSet<TimedWord> = running_data(Policy::MinMax2, depth).into_iter().collect();
        let four: BTreeSet<TimedWord> = running_data(Policy::MinMax4, depth).into_iter().collect();
        assert!(pm1.is_subset(&two), "depth {depth}: {:?}", pm1.difference(&two).next());
        assert!(two.is_subset(&four), "depth {depth}: {:?}", two.difference(&four).next());
    }
}

#[test]
fn shipped_models_round_trip_exactly() {
    for name in ["running_example.ta.json", "re_oracle.ta.json", "alt_oracle.ta.json", "running_example.pta.json"] {
        let text = read(name);
        assert_eq!(pta(name).to_json(), text, "{name}");
    }
}
