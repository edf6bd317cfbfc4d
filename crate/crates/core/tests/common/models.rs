//! Shipped models and generators of words and valuations over them.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::OnceLock;

use proptest::prelude::*;

use tarepair::model::{ParamValuation, Pta, Ta, TimedWord};
use tarepair::rational::{ratio, Rational};
use tarepair::semantics::{accepts, build_epzg, AcceptOptions, EpzgConfig};
use tarepair::synthesis::replay_tw;
use tarepair::testgen::{generate_test_data, Policy, TestgenConfig};

pub fn read(name: &str) -> String {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../models").join(name);
    std::fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

pub fn ta(name: &str) -> Ta {
    Ta::from_json(&read(name)).unwrap()
}

pub fn pta(name: &str) -> Pta {
    Pta::from_json(&read(name)).unwrap()
}

/// Words generated from the parametric running example, so that a good
/// share is accepted under some valuation.
pub fn running_words() -> &'static [TimedWord] {
    static WORDS: OnceLock<Vec<TimedWord>> = OnceLock::new();
    WORDS.get_or_init(|| {
        let p = pta("running_example.pta.json");
        let g = build_epzg(&p, EpzgConfig { depth: 3, merge: true }).unwrap();
        let mut cfg = TestgenConfig::new(Policy::MinMax4, 3);
        cfg.cap = None;
        generate_test_data(&p, &g, &cfg).unwrap().words().cloned().collect()
    })
}

/// Up to `len` steps over `alphabet`, each delayed by a multiple of 1/2 in
/// `[0, 3]`.
pub fn word(alphabet: Vec<&'static str>, len: usize) -> impl Strategy<Value = TimedWord> {
    let n = alphabet.len();
    proptest::collection::vec((0..n, 0i64..=6), 0..=len).prop_map(move |steps| {
        let mut t = Rational::from_integer(0.into());
        let steps = steps
            .into_iter()
            .map(|(a, d)| {
                t += ratio(d, 2);
                (alphabet[a].to_string(), t.clone())
            })
            .collect();
        TimedWord::new(steps).unwrap()
    })
}

/// Generated running-example words mixed with random ones.
pub fn running_word() -> impl Strategy<Value = TimedWord> {
    let pool = running_words().len();
    prop_oneof![
        3 => (0..pool).prop_map(|i| running_words()[i].clone()),
        1 => word(vec!["a", "b", "c"], 3),
    ]
}

/// Multiples of 1/2 in `[0, max]` for every name.
pub fn valuation(names: &'static [&'static str], max: i64) -> impl Strategy<Value = ParamValuation> {
    proptest::collection::vec(0..=2 * max, names.len()).prop_map(move |ks| {
        let m: BTreeMap<String, Rational> = names.iter().map(|n| n.to_string()).zip(ks.into_iter().map(|k| ratio(k, 2))).collect();
        ParamValuation::new(m).unwrap()
    })
}

/// Membership in the replay constraint agrees with simulation of the
/// instantiated automaton.
pub fn replay_agrees(p: &Pta, v: &ParamValuation, w: &TimedWord) -> Result<(), String> {
    let phi = replay_tw(p, w).map_err(|e| e.to_string())?;
    let ta = p.apply_valuation(v).map_err(|e| e.to_string())?;
    let simulated = accepts(&ta, w, AcceptOptions::default()).map_err(|e| e.to_string())?;
    let symbolic = phi.contains_point(&v.to_point());
    if simulated != symbolic {
        return Err(format!("{w} under {v}: simulation says {simulated}, replay constraint {phi} says {symbolic}"));
    }
    Ok(())
}
