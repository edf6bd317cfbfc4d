//! Frozen conformance words of the running example and its oracle.

use std::path::Path;

use tarepair::eval::{gen_sc_testdata, semantic_conformance, words_from_jsonl, words_to_jsonl, ScConfig};
use tarepair::model::{Pta, Ta};
use tarepair::rational;
use tarepair::synthesis::replay_tw;

const GOLDEN_SC_INIT: &str = "95.00";

fn read(name: &str) -> String {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../models").join(name);
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn sampling_reproduces_the_frozen_set() {
    let ta = Ta::from_json(&read("running_example.ta.json")).unwrap();
    let oracle = Ta::from_json(&read("re_oracle.ta.json")).unwrap();
    let golden = read("re_sc_golden.jsonl");
    let cfg = ScConfig {
        seed: 0,
        budget: 200,
        ..ScConfig::default()
    };
    let words = gen_sc_testdata(&ta, &oracle, &cfg).unwrap();
    assert_eq!(words_to_jsonl(&words), golden);
}

#[test]
fn frozen_conformance_of_the_initial_model() {
    let ta = Ta::from_json(&read("running_example.ta.json")).unwrap();
    let oracle = Ta::from_json(&read("re_oracle.ta.json")).unwrap();
    let words = words_from_jsonl(&read("re_sc_golden.jsonl")).unwrap();
    assert_eq!(words.len(), 400);
    let sc = semantic_conformance(&ta, &oracle, &words).unwrap();
    assert_eq!(rational::format_fixed2(&sc), GOLDEN_SC_INIT);
    assert_eq!(semantic_conformance(&oracle, &oracle, &words).unwrap(), rational::int(100));
}

/// Recomputes the frozen percentage through parameter synthesis instead of
/// simulation: a word is accepted under a valuation iff the valuation lies
/// in the word's replay constraint.
#[test]
fn frozen_conformance_agrees_with_replay() {
    let pta = Pta::from_json(&read("running_example.pta.json")).unwrap();
    let ta = Ta::from_json(&read("running_example.ta.json")).unwrap();
    let oracle = Ta::from_json(&read("re_oracle.ta.json")).unwrap();
    let v_init = pta.match_valuation(ta.as_pta()).unwrap().to_point();
    let v_oracle = pta.match_valuation(oracle.as_pta()).unwrap().to_point();
    let words = words_from_jsonl(&read("re_sc_golden.jsonl")).unwrap();
    let agree = words
        .iter()
        .filter(|w| {
            let phi = replay_tw(&pta, w).unwrap();
            phi.contains_point(&v_init) == phi.contains_point(&v_oracle)
        })
        .count();
    let sc = rational::ratio(agree as i64 * 100, words.len() as i64);
    assert_eq!(rational::format_fixed2(&sc), GOLDEN_SC_INIT);
}
