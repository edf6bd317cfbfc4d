//! Repair quality metrics and the end-to-end experiment harness.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::time::Instant;

use num_traits::Zero;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{abstract_guards, AbstractionStrategy, ModelError, ParamValuation, Pta, Ta, TimedWord};
use crate::oracle::{failing_tests, label_tests, Oracle, Test, TestSuite};
use crate::polyhedra::PolyUnion;
use crate::rational::{self, int, Rational};
use crate::repair::{instantiate, l1_distance, RepairConfig};
use crate::semantics::{accepts, build_epzg, AcceptOptions, Epzg, EpzgConfig};
use crate::synthesis::{synthesize, Mode, SynthesisError};
use crate::testgen::{generate_test_data, Policy, TestData, TestgenConfig};

pub const DEFAULT_SC_BUDGET: usize = 200;
pub const DEFAULT_SC_DEPTH: usize = 4;
/// Upper end of the sampling window after an unbounded arrival time.
const SC_OPEN_WINDOW: i64 = 10;
/// Delays tried when extending a positive word into a negative one.
const SC_NEGATIVE_DELAYS: [(i64, i64); 7] = [(0, 1), (1, 2), (1, 1), (2, 1), (3, 1), (5, 1), (10, 1)];

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("valuations range over different parameters: {left:?} vs {right:?}")]
    ParameterMismatch { left: Vec<String>, right: Vec<String> },
    #[error("semantic conformance needs at least one word")]
    EmptyTestData,
    #[error(transparent)]
    Semantics(#[from] crate::semantics::SemanticsError),
}

/// Sum of absolute parameter differences.
pub fn syntactic_distance(v: &ParamValuation, v_o: &ParamValuation) -> Result<Rational, EvalError> {
    let left: Vec<String> = v.names().cloned().collect();
    let right: Vec<String> = v_o.names().cloned().collect();
    if left != right {
        return Err(EvalError::ParameterMismatch { left, right });
    }
    Ok(l1_distance(v.as_map(), v_o.as_map()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScConfig {
    pub seed: u64,
    /// Positive words sampled, split between the two automata.
    pub budget: usize,
    /// Longest sampled run.
    pub depth: usize,
}

impl Default for ScConfig {
    fn default() -> Self {
        ScConfig {
            seed: 0,
            budget: DEFAULT_SC_BUDGET,
            depth: DEFAULT_SC_DEPTH,
        }
    }
}

fn on_grid<R: Rng>(rng: &mut R, lo: &Rational, hi: &Rational) -> Rational {
    let a = (lo * int(100)).ceil().to_integer();
    let b = (hi * int(100)).floor().to_integer();
    if a > b {
        return lo.clone();
    }
    use num_bigint::RandBigInt;
    let k = rng.gen_bigint_range(&a, &(b + 1));
    Rational::new(k, 100.into())
}

/// One random walk through the zone graph, timestamps drawn from each
/// visited node's arrival interval.
fn random_run<R: Rng>(pta: &Pta, g: &Epzg, depth: usize, rng: &mut R) -> Option<TimedWord> {
    let len = rng.gen_range(1..=depth);
    let mut node = g.root;
    let mut prev = Rational::zero();
    let mut steps = Vec::new();
    for _ in 0..len {
        let children: Vec<_> = g.children(node).collect();
        let Some(e) = children.choose(rng) else {
            break;
        };
        let iv = &g.node(e.target).arrival;
        let lo = iv.lower.clone().unwrap_or_else(Rational::zero).max(prev.clone());
        let hi = iv.upper.clone().unwrap_or_else(|| &lo + int(SC_OPEN_WINDOW)).max(lo.clone());
        let t = match rng.gen_range(0..3) {
            0 => lo,
            1 => hi,
            _ => on_grid(rng, &lo, &hi),
        };
        prev = t.clone();
        steps.push((pta.edge(e.edge)?.action.clone(), t));
        node = e.target;
    }
    if steps.is_empty() {
        return None;
    }
    TimedWord::new(steps).ok()
}

fn sample_from<R: Rng>(src: &Ta, count: usize, depth: usize, rng: &mut R, out: &mut Vec<TimedWord>, seen: &mut BTreeSet<TimedWord>) -> Result<(), EvalError> {
    if count == 0 {
        return Ok(());
    }
    let g = build_epzg(src.as_pta(), EpzgConfig { depth, merge: true })?;
    let mut positives = Vec::new();
    for _ in 0..count * 100 {
        if positives.len() == count {
            break;
        }
        let Some(w) = random_run(src.as_pta(), &g, depth, rng) else {
            continue;
        };
        if !seen.contains(&w) && accepts(src, &w, AcceptOptions::default())? {
            seen.insert(w.clone());
            positives.push(w);
        }
    }
    let alphabet = &src.as_pta().alphabet;
    for w in positives {
        out.push(w.clone());
        let last = w.steps().last().map(|(_, t)| t.clone()).unwrap_or_else(Rational::zero);
        for _ in 0..20 {
            let Some(a) = alphabet.choose(rng) else {
                break;
            };
            let (n, d) = SC_NEGATIVE_DELAYS[rng.gen_range(0..SC_NEGATIVE_DELAYS.len())];
            let Ok(neg) = w.extended(a, &last + rational::ratio(n, d)) else {
                continue;
            };
            if !seen.contains(&neg) && !accepts(src, &neg, AcceptOptions::default())? {
                seen.insert(neg.clone());
                out.push(neg);
                break;
            }
        }
    }
    Ok(())
}

/// Words sampled from runs of both automata, each followed by an extension
/// its source automaton rejects when one is found.
pub fn gen_sc_testdata(ta: &Ta, ta_o: &Ta, cfg: &ScConfig) -> Result<Vec<TimedWord>, EvalError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    let first = cfg.budget.div_ceil(2);
    sample_from(ta, first, cfg.depth, &mut rng, &mut out, &mut seen)?;
    sample_from(ta_o, cfg.budget - first, cfg.depth, &mut rng, &mut out, &mut seen)?;
    Ok(out)
}

/// Percentage of `td` on which both automata agree.
pub fn semantic_conformance(ta: &Ta, ta_o: &Ta, td: &[TimedWord]) -> Result<Rational, EvalError> {
    if td.is_empty() {
        return Err(EvalError::EmptyTestData);
    }
    let opts = AcceptOptions::default();
    let mut agree = 0i64;
    for w in td {
        let a = crate::semantics::accepts_lenient(ta, w, opts);
        let b = crate::semantics::accepts_lenient(ta_o, w, opts);
        if a == b {
            agree += 1;
        }
    }
    Ok(Rational::new((agree * 100).into(), (td.len() as i64).into()))
}

pub fn words_to_jsonl(words: &[TimedWord]) -> String {
    words
        .iter()
        .map(|w| serde_json::to_string(w).expect("serializable") + "\n")
        .collect()
}

pub fn words_from_jsonl(text: &str) -> Result<Vec<TimedWord>, serde_json::Error> {
    text.lines().filter(|l| !l.trim().is_empty()).map(serde_json::from_str).collect()
}

/// A model to repair and what is known about its oracle.
#[derive(Debug, Clone)]
pub struct Benchmark {
    pub id: String,
    pub ta_init: Ta,
    pub abstraction: AbstractionStrategy,
    /// The oracle's automaton when known; enables distance and conformance.
    pub oracle_ta: Option<Ta>,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub testgen: TestgenConfig,
    pub merge: bool,
    pub mode: Mode,
    pub repair: RepairConfig,
    pub sc: ScConfig,
    /// A frozen conformance set; sampled from `sc` when absent.
    pub sc_words: Option<Vec<TimedWord>>,
}

impl ExperimentConfig {
    pub fn new(policy: Policy, depth: usize) -> Self {
        ExperimentConfig {
            testgen: TestgenConfig::new(policy, depth),
            merge: true,
            mode: Mode::Strict,
            repair: RepairConfig::default(),
            sc: ScConfig::default(),
            sc_words: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    Validation,
    AbstractionInsufficient,
    Oracle,
    Internal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub stage: String,
    pub kind: FailureKind,
    pub message: String,
}

/// Wall-clock seconds per pipeline step.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    /// Abstraction, zone graph and word generation.
    pub generate: f64,
    pub label: f64,
    pub synth: f64,
    pub repair: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub benchmark: String,
    pub policy: Policy,
    pub depth: usize,
    pub mode: Mode,
    pub parameters: usize,
    pub timings: Timings,
    pub generated_words: usize,
    pub tests: usize,
    pub failing: usize,
    /// No test failed, so the initial model was kept.
    pub considered_correct: bool,
    pub v_init: ParamValuation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_oracle: Option<ParamValuation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_rep: Option<ParamValuation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "opt_rational")]
    pub sd_init: Option<Rational>,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "opt_rational")]
    pub sd_rep: Option<Rational>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sc_init: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sc_rep: Option<String>,
    pub sc_words: usize,
    pub discarded: Vec<Test>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<Failure>,
}

mod opt_rational {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::rational::Rational;

    pub fn serialize<S: Serializer>(q: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
        match q {
            Some(q) => crate::rational::serialize(q, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rational>, D::Error> {
        #[derive(Deserialize)]
        struct Wrapped(#[serde(with = "crate::rational")] Rational);
        Ok(Option::<Wrapped>::deserialize(d)?.map(|w| w.0))
    }
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("serializable");
        s.push('\n');
        s
    }

    /// The report with every timing zeroed, for reproducibility checks.
    pub fn without_timings(&self) -> EvalReport {
        EvalReport {
            timings: Timings::default(),
            ..self.clone()
        }
    }

    pub fn to_text(&self) -> String {
        table(std::slice::from_ref(self))
    }
}

fn opt<T: ToString>(x: &Option<T>) -> String {
    x.as_ref().map(T::to_string).unwrap_or_else(|| "N/A".into())
}

/// Aligned table, one row per report.
pub fn table(reports: &[EvalReport]) -> String {
    let header = [
        "benchmark", "policy", "K", "mode", "t gen (s)", "t label (s)", "t synth (s)", "t repair (s)", "failed/tests",
        "SD init", "SD rep", "SC init", "SC rep", "discards", "status",
    ];
    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            let status = match &r.failure {
                Some(f) => format!("failed at {}: {:?}", f.stage, f.kind),
                None if r.considered_correct => "considered correct".into(),
                None => "repaired".into(),
            };
            vec![
                r.benchmark.clone(),
                r.policy.name().into(),
                r.depth.to_string(),
                format!("{:?}", r.mode).to_lowercase(),
                format!("{:.3}", r.timings.generate),
                format!("{:.3}", r.timings.label),
                format!("{:.3}", r.timings.synth),
                format!("{:.3}", r.timings.repair),
                format!("{}/{}", r.failing, r.tests),
                opt(&r.sd_init.as_ref().map(rational::format)),
                opt(&r.sd_rep.as_ref().map(rational::format)),
                opt(&r.sc_init),
                opt(&r.sc_rep),
                r.discarded.len().to_string(),
                status,
            ]
        })
        .collect();
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for r in &rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let mut out = String::new();
    let mut line = |cells: Vec<String>| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c}{}", " ".repeat(w - c.chars().count())))
            .collect();
        let _ = writeln!(out, "{}", padded.join(" | ").trim_end());
    };
    line(header.iter().map(|h| h.to_string()).collect());
    line(widths.iter().map(|w| "-".repeat(*w)).collect());
    for r in rows {
        line(r);
    }
    out
}

/// Everything a run produced, for persisting and inspection.
#[derive(Debug, Clone, Default)]
pub struct Artifacts {
    pub pta: Option<Pta>,
    pub epzg: Option<Epzg>,
    pub test_data: Option<TestData>,
    pub suite: Option<TestSuite>,
    pub phi: Option<PolyUnion>,
    pub ta_rep: Option<Ta>,
    pub sc_words: Option<Vec<TimedWord>>,
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub report: EvalReport,
    pub artifacts: Artifacts,
}

fn fail(stage: &str, kind: FailureKind, e: impl ToString) -> Failure {
    Failure {
        stage: stage.into(),
        kind,
        message: e.to_string(),
    }
}

fn model_failure(stage: &str, e: ModelError) -> Failure {
    fail(stage, FailureKind::Validation, e)
}

/// Runs abstraction, generation, labeling, synthesis and repair, then
/// measures the result. Step errors end the run and are recorded in the
/// report with their stage.
pub fn run_experiment(bench: &Benchmark, oracle: &mut Oracle, cfg: &ExperimentConfig) -> Experiment {
    let mut artifacts = Artifacts::default();
    let mut report = EvalReport {
        benchmark: bench.id.clone(),
        policy: cfg.testgen.policy,
        depth: cfg.testgen.depth,
        mode: cfg.mode,
        parameters: 0,
        timings: Timings::default(),
        generated_words: 0,
        tests: 0,
        failing: 0,
        considered_correct: false,
        v_init: ParamValuation::default(),
        v_oracle: None,
        v_rep: None,
        phi: None,
        sd_init: None,
        sd_rep: None,
        sc_init: None,
        sc_rep: None,
        sc_words: 0,
        discarded: vec![],
        failure: None,
    };
    if let Err(f) = run_steps(bench, oracle, cfg, &mut report, &mut artifacts) {
        log::info!("{} failed at {}: {}", bench.id, f.stage, f.message);
        report.failure = Some(f);
    }
    Experiment { report, artifacts }
}

fn run_steps(
    bench: &Benchmark,
    oracle: &mut Oracle,
    cfg: &ExperimentConfig,
    report: &mut EvalReport,
    artifacts: &mut Artifacts,
) -> Result<(), Failure> {
    let clock = Instant::now();
    let (pta, v_init) = abstract_guards(&bench.ta_init, &bench.abstraction).map_err(|e| model_failure("abstract", e))?;
    report.parameters = pta.parameters.len();
    report.v_init = v_init.clone();
    artifacts.pta = Some(pta.clone());
    let epzg = build_epzg(
        &pta,
        EpzgConfig {
            depth: cfg.testgen.depth,
            merge: cfg.merge,
        },
    )
    .map_err(|e| fail("epzg", FailureKind::Internal, e))?;
    if let Some(d) = &epzg.diagnostic {
        log::warn!("zone graph is partial: {d}");
    }
    let td = generate_test_data(&pta, &epzg, &cfg.testgen).map_err(|e| fail("gen-tests", FailureKind::Internal, e))?;
    artifacts.epzg = Some(epzg);
    report.generated_words = td.len();
    report.timings.generate = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let suite = label_tests(&td, oracle).map_err(|e| fail("label", FailureKind::Oracle, e))?;
    artifacts.test_data = Some(td);
    report.tests = suite.len();
    let failing = failing_tests(&suite, &bench.ta_init);
    report.failing = failing.len();
    report.timings.label = clock.elapsed().as_secs_f64();
    artifacts.suite = Some(suite.clone());

    if let Some(o) = &bench.oracle_ta {
        report.v_oracle = pta.match_valuation(o.as_pta());
    }
    if let Some(v_o) = &report.v_oracle {
        report.sd_init = syntactic_distance(&v_init, v_o).ok();
    }

    let (v_rep, ta_rep) = if failing.is_empty() {
        log::info!("no failing test: the model is considered correct");
        report.considered_correct = true;
        (v_init.clone(), bench.ta_init.clone())
    } else {
        let clock = Instant::now();
        let (phi, discarded) = synthesize(&pta, &suite, cfg.mode).map_err(|e| match e {
            SynthesisError::Unsatisfiable => fail("synth", FailureKind::AbstractionInsufficient, e),
            other => fail("synth", FailureKind::Internal, other),
        })?;
        report.discarded = discarded;
        report.phi = Some(phi.to_string());
        report.timings.synth = clock.elapsed().as_secs_f64();
        artifacts.phi = Some(phi.clone());

        let clock = Instant::now();
        let v_rep = instantiate(&phi, &v_init, &cfg.repair).map_err(|e| fail("repair", FailureKind::Internal, e))?;
        let ta_rep = pta.apply_valuation(&v_rep).map_err(|e| model_failure("repair", e))?;
        report.timings.repair = clock.elapsed().as_secs_f64();
        (v_rep, ta_rep)
    };
    if let Some(v_o) = &report.v_oracle {
        report.sd_rep = syntactic_distance(&v_rep, v_o).ok();
    }
    report.v_rep = Some(v_rep);
    artifacts.ta_rep = Some(ta_rep.clone());

    if let Some(o) = &bench.oracle_ta {
        let words = match &cfg.sc_words {
            Some(w) => w.clone(),
            None => gen_sc_testdata(&bench.ta_init, o, &cfg.sc).map_err(|e| fail("sc", FailureKind::Internal, e))?,
        };
        report.sc_words = words.len();
        if !words.is_empty() {
            let sc = |ta: &Ta| semantic_conformance(ta, o, &words).map(|q| rational::format_fixed2(&q));
            report.sc_init = Some(sc(&bench.ta_init).map_err(|e| fail("sc", FailureKind::Internal, e))?);
            report.sc_rep = Some(sc(&ta_rep).map_err(|e| fail("sc", FailureKind::Internal, e))?);
        }
        artifacts.sc_words = Some(words);
    }
    Ok(())
}
