//! Timed-word generation from the annotated zone graph.
//!
//! Each path of the graph yields words whose i-th timestamp is drawn from the
//! candidate times of the i-th visited node's arrival interval.

use std::collections::BTreeSet;

use indexmap::IndexMap;
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{ModelError, Pta, TimedWord};
use crate::polyhedra::RationalInterval;
use crate::rational::{self, int, ratio, Rational};
use crate::semantics::Epzg;

pub const DEFAULT_HORIZON: i64 = 100;
pub const DEFAULT_CAP: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Policy {
    MinMaxPm1,
    MinMax2,
    MinMax4,
    Random { seed: u64, samples_per_state: usize },
}

impl Policy {
    pub fn name(&self) -> &'static str {
        match self {
            Policy::MinMaxPm1 => "MinMaxPm1",
            Policy::MinMax2 => "MinMax2",
            Policy::MinMax4 => "MinMax4",
            Policy::Random { .. } => "Random",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TestgenError {
    #[error("empty arrival interval {0}")]
    EmptyInterval(RationalInterval),
    #[error("zone graph edge {0} is not an edge of the automaton")]
    UnknownEdge(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestgenConfig {
    pub policy: Policy,
    /// Longest path, in transitions.
    pub depth: usize,
    /// Words kept per path; `None` keeps all.
    pub cap: Option<usize>,
    /// Surrogate length for unbounded arrival intervals.
    pub horizon: Rational,
    pub include_empty: bool,
}

impl TestgenConfig {
    pub fn new(policy: Policy, depth: usize) -> Self {
        TestgenConfig {
            policy,
            depth,
            cap: Some(DEFAULT_CAP),
            horizon: int(DEFAULT_HORIZON),
            include_empty: false,
        }
    }
}

/// Finite bounds `(m, M)` of `iv` with the horizon standing in for infinity.
fn finite_bounds(iv: &RationalInterval, horizon: &Rational) -> (Rational, Rational) {
    let lo = iv.lower.clone().unwrap_or_else(Rational::zero);
    let hi = match &iv.upper {
        Some(u) => u.clone(),
        None => {
            let capped = horizon.clone().min(&lo + horizon);
            // a surrogate maximum must not fall below the minimum
            if capped < lo {
                &lo + horizon
            } else {
                capped
            }
        }
    };
    (lo, hi)
}

/// Candidate timestamps for one arrival interval, ascending and deduplicated.
///
/// Candidates outside the interval are kept on purpose; negative ones are
/// dropped.
pub fn candidate_times_with<R: Rng>(
    iv: &RationalInterval,
    policy: &Policy,
    horizon: &Rational,
    rng: &mut R,
) -> Result<Vec<Rational>, TestgenError> {
    if iv.is_empty() {
        return Err(TestgenError::EmptyInterval(iv.clone()));
    }
    let (m, big_m) = finite_bounds(iv, horizon);
    let one = int(1);
    let width = &big_m - &m;
    let mut out: BTreeSet<Rational> = BTreeSet::new();
    match policy {
        Policy::MinMaxPm1 | Policy::MinMax2 | Policy::MinMax4 => {
            for b in [&m, &big_m] {
                out.extend([b - &one, b.clone(), b + &one]);
            }
            if !matches!(policy, Policy::MinMaxPm1) {
                out.insert(&m + &width / int(2));
            }
            if matches!(policy, Policy::MinMax4) {
                out.insert(&m + &width / int(4));
                out.insert(&m + &width * ratio(3, 4));
            }
        }
        Policy::Random { samples_per_state, .. } => {
            let lo = (&m * int(100)).ceil().to_integer();
            let hi = (&big_m * int(100)).floor().to_integer();
            for _ in 0..*samples_per_state {
                if lo > hi {
                    // no grid point inside: fall back to the minimum
                    out.insert(m.clone());
                    continue;
                }
                let span = &hi - &lo;
                let offset = random_below(rng, &(span + 1));
                out.insert(Rational::new(&lo + offset, 100.into()));
            }
        }
    }
    Ok(out.into_iter().filter(|t| !t.is_negative()).collect())
}

fn random_below<R: Rng>(rng: &mut R, bound: &num_bigint::BigInt) -> num_bigint::BigInt {
    use num_bigint::RandBigInt;
    rng.gen_bigint_range(&num_bigint::BigInt::zero(), bound)
}

/// [`candidate_times_with`] with the random policy seeded from its own seed.
pub fn candidate_times(
    iv: &RationalInterval,
    policy: &Policy,
    horizon: &Rational,
) -> Result<Vec<Rational>, TestgenError> {
    let seed = match policy {
        Policy::Random { seed, .. } => *seed,
        _ => 0,
    };
    candidate_times_with(iv, policy, horizon, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Where a generated word came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    /// Zone graph node ids, root first.
    pub path: Vec<usize>,
    /// Index into each non-root node's candidate list.
    pub choice: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct Line {
    word: TimedWord,
    #[serde(flatten)]
    provenance: Provenance,
}

/// Generated words in generation order, without duplicates.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TestData {
    entries: IndexMap<TimedWord, Provenance>,
}

impl TestData {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn words(&self) -> impl Iterator<Item = &TimedWord> {
        self.entries.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&TimedWord, &Provenance)> {
        self.entries.iter()
    }

    pub fn contains(&self, w: &TimedWord) -> bool {
        self.entries.contains_key(w)
    }

    /// Keeps the first provenance of a repeated word.
    pub fn insert(&mut self, w: TimedWord, p: Provenance) -> bool {
        if self.entries.contains_key(&w) {
            return false;
        }
        self.entries.insert(w, p);
        true
    }

    /// One JSON object per line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for (w, p) in &self.entries {
            let line = Line {
                word: w.clone(),
                provenance: p.clone(),
            };
            out.push_str(&serde_json::to_string(&line).expect("serializable"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self, serde_json::Error> {
        let mut td = TestData::default();
        for l in text.lines().filter(|l| !l.trim().is_empty()) {
            let line: Line = serde_json::from_str(l)?;
            td.insert(line.word, line.provenance);
        }
        Ok(td)
    }
}

impl FromIterator<(TimedWord, Provenance)> for TestData {
    fn from_iter<I: IntoIterator<Item = (TimedWord, Provenance)>>(iter: I) -> Self {
        let mut td = TestData::default();
        for (w, p) in iter {
            td.insert(w, p);
        }
        td
    }
}

/// Every root path of length 1..=depth, in depth-first edge order.
fn paths(epzg: &Epzg, depth: usize) -> Vec<Vec<(usize, usize)>> {
    let mut out = Vec::new();
    let mut stack: Vec<(usize, usize)> = Vec::new();
    fn walk(g: &Epzg, node: usize, depth: usize, stack: &mut Vec<(usize, usize)>, out: &mut Vec<Vec<(usize, usize)>>) {
        if stack.len() == depth {
            return;
        }
        for e in g.children(node) {
            stack.push((e.edge, e.target));
            out.push(stack.clone());
            walk(g, e.target, depth, stack, out);
            stack.pop();
        }
    }
    walk(epzg, epzg.root, depth, &mut stack, &mut out);
    out
}

/// Nondecreasing index tuples in lexicographic order, at most `cap`.
fn monotone_choices(cands: &[Vec<Rational>], cap: Option<usize>) -> Vec<Vec<usize>> {
    fn go(
        cands: &[Vec<Rational>],
        prev: Option<&Rational>,
        cur: &mut Vec<usize>,
        cap: Option<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if cap.is_some_and(|c| out.len() >= c) {
            return;
        }
        let i = cur.len();
        if i == cands.len() {
            out.push(cur.clone());
            return;
        }
        for (j, t) in cands[i].iter().enumerate() {
            if prev.is_some_and(|p| t < p) {
                continue;
            }
            cur.push(j);
            go(cands, Some(t), cur, cap, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(cands, None, &mut Vec::new(), cap, &mut out);
    out
}

/// Instantiates every path of the zone graph up to `cfg.depth` transitions.
pub fn generate_test_data(pta: &Pta, epzg: &Epzg, cfg: &TestgenConfig) -> Result<TestData, TestgenError> {
    let mut td = TestData::default();
    if cfg.include_empty {
        td.insert(
            TimedWord::empty(),
            Provenance {
                path: vec![epzg.root],
                choice: vec![],
            },
        );
    }
    // candidates are computed once per node so random draws are shared by
    // every path through it
    let mut per_node: Vec<Vec<Rational>> = Vec::with_capacity(epzg.nodes.len());
    for n in &epzg.nodes {
        let node_seed = match cfg.policy {
            Policy::Random { seed, .. } => seed.wrapping_add(n.id as u64),
            _ => 0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(node_seed);
        per_node.push(candidate_times_with(&n.arrival, &cfg.policy, &cfg.horizon, &mut rng)?);
    }
    for path in paths(epzg, cfg.depth) {
        let actions = path
            .iter()
            .map(|(e, _)| pta.edge(*e).map(|e| e.action.clone()).ok_or(TestgenError::UnknownEdge(*e)))
            .collect::<Result<Vec<_>, _>>()?;
        let cands: Vec<Vec<Rational>> = path.iter().map(|(_, n)| per_node[*n].clone()).collect();
        let node_ids: Vec<usize> = std::iter::once(epzg.root).chain(path.iter().map(|(_, n)| *n)).collect();
        for choice in monotone_choices(&cands, cfg.cap) {
            let steps = actions
                .iter()
                .zip(&choice)
                .zip(&cands)
                .map(|((a, j), c)| (a.clone(), c[*j].clone()))
                .collect();
            td.insert(
                TimedWord::new(steps)?,
                Provenance {
                    path: node_ids.clone(),
                    choice,
                },
            );
        }
    }
    log::debug!("generated {} words under {}", td.len(), cfg.policy.name());
    Ok(td)
}

/// Renders a candidate list as `{0, 1, 7/2}`.
pub fn format_times(ts: &[Rational]) -> String {
    let parts: Vec<String> = ts.iter().map(rational::format).collect();
    format!("{{{}}}", parts.join(", "))
}
