//! Parameter synthesis: which valuations make a location reachable, and
//! which make a given word a run of the automaton.

mod product;

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::model::{Pta, TimedWord};
use crate::oracle::{Test, TestSuite};
use crate::polyhedra::{ConvexPolyhedron, PolyError, PolyUnion};
use crate::semantics::{initial_state, successor, SemanticsError, SymbolicState};

pub use product::{pair_name, sync_product, trans_word, word_location, ProductPta};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SynthesisError {
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
    #[error("clock `{0}` occurs in both automata")]
    ClockClash(String),
    #[error("unknown target location `{0}`")]
    UnknownTarget(String),
    #[error("the tests admit no valuation: abstraction insufficient; rerun with --greedy or widen the abstraction")]
    Unsatisfiable,
}

impl From<PolyError> for SynthesisError {
    fn from(e: PolyError) -> Self {
        SynthesisError::Semantics(SemanticsError::Poly(e))
    }
}

/// Outcome of a bounded reachability synthesis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Synthesized {
    /// Valuations reaching a target within the explored part.
    pub constraint: PolyUnion,
    /// Some state at the depth bound still had successors.
    pub incomplete: bool,
    /// Deepest state explored, in transitions.
    pub max_depth: usize,
}

/// Parameter valuations under which some target location is reachable,
/// exploring breadth-first up to `depth_bound` transitions.
///
/// States whose zone is included in an explored zone of the same location
/// are skipped; their successors are covered already.
pub fn ef_synth(pta: &Pta, targets: &BTreeSet<String>, depth_bound: usize) -> Result<Synthesized, SynthesisError> {
    if let Some(t) = targets.iter().find(|t| pta.location(t).is_none()) {
        return Err(SynthesisError::UnknownTarget(t.clone()));
    }
    let mut result = PolyUnion::bottom(pta.param_vars());
    let mut incomplete = false;
    let mut max_depth = 0;
    let mut seen: BTreeMap<String, Vec<ConvexPolyhedron>> = BTreeMap::new();
    let root = initial_state(pta)?.state;
    let mut queue: VecDeque<(SymbolicState, usize)> = VecDeque::new();
    visit(root, 0, targets, &mut seen, &mut result, &mut queue)?;
    while let Some((state, depth)) = queue.pop_front() {
        max_depth = max_depth.max(depth);
        for edge in pta.edges_from(&state.location) {
            let Some(next) = successor(pta, &state, edge)? else {
                continue;
            };
            if depth == depth_bound {
                incomplete = true;
                break;
            }
            visit(next.state, depth + 1, targets, &mut seen, &mut result, &mut queue)?;
        }
    }
    Ok(Synthesized {
        constraint: result,
        incomplete,
        max_depth,
    })
}

fn visit(
    state: SymbolicState,
    depth: usize,
    targets: &BTreeSet<String>,
    seen: &mut BTreeMap<String, Vec<ConvexPolyhedron>>,
    result: &mut PolyUnion,
    queue: &mut VecDeque<(SymbolicState, usize)>,
) -> Result<(), PolyError> {
    let zones = seen.entry(state.location.clone()).or_default();
    for z in zones.iter() {
        if state.zone.is_subset_of(z)? {
            return Ok(());
        }
    }
    zones.push(state.zone.clone());
    if targets.contains(&state.location) {
        let params = PolyUnion::from_poly(state.zone.project_onto_params()?);
        *result = result.union(&params)?;
    }
    queue.push_back((state, depth));
    Ok(())
}

/// Valuations `v` for which `w` is a timed word of `pta[v]`.
pub fn replay_tw(pta: &Pta, w: &TimedWord) -> Result<PolyUnion, SynthesisError> {
    let word = trans_word(w);
    let sync: BTreeSet<String> = pta.alphabet.iter().chain(&word.as_pta().alphabet).cloned().collect();
    let product = sync_product(pta, word.as_pta(), &sync)?;
    let last = word_location(w.len());
    let targets: BTreeSet<String> = product
        .components
        .iter()
        .zip(&product.pta.locations)
        .filter(|((_, wl), _)| *wl == last)
        .map(|(_, l)| l.name.clone())
        .collect();
    // every product edge advances the word, so the product is acyclic
    let out = ef_synth(&product.pta, &targets, w.len() + 1)?;
    debug_assert!(!out.incomplete && out.max_depth <= w.len());
    Ok(out.constraint)
}

fn orthant(pta: &Pta) -> ConvexPolyhedron {
    pta.nonnegative_params(&pta.param_vars())
}

/// Valuations rejecting `w`, within the nonnegative orthant.
fn rejecting(pta: &Pta, w: &TimedWord) -> Result<PolyUnion, SynthesisError> {
    Ok(replay_tw(pta, w)?.negate()?.conjoin_poly(&orthant(pta))?)
}

fn test_constraint(pta: &Pta, t: &Test) -> Result<PolyUnion, SynthesisError> {
    if t.verdict {
        replay_tw(pta, &t.word)
    } else {
        rejecting(pta, &t.word)
    }
}

/// Conjunction of the replay constraints of accepted tests and the negated
/// replay constraints of rejected ones.
pub fn gen_constraints(pta: &Pta, ts: &TestSuite) -> Result<PolyUnion, SynthesisError> {
    let mut acc = PolyUnion::from_poly(orthant(pta));
    for t in ts.mba().chain(ts.mbr()) {
        acc = acc.conjoin(&test_constraint(pta, t)?)?;
        if acc.is_empty()? {
            return Err(SynthesisError::Unsatisfiable);
        }
    }
    Ok(acc)
}

/// Default greedy order: accepted before rejected, each by length then word.
pub fn greedy_order(ts: &TestSuite) -> Vec<Test> {
    let mut order: Vec<Test> = ts.tests.clone();
    order.sort_by(|a, b| {
        (!a.verdict, a.word.len(), &a.word).cmp(&(!b.verdict, b.word.len(), &b.word))
    });
    order
}

/// Conjoins the tests one by one in `order`, skipping any test whose
/// constraint would empty the accumulator. The result is never empty.
pub fn gen_constraints_greedy(pta: &Pta, order: &[Test]) -> Result<(PolyUnion, Vec<Test>), SynthesisError> {
    let mut acc = PolyUnion::from_poly(orthant(pta));
    let mut discarded = Vec::new();
    for t in order {
        let next = acc.conjoin(&test_constraint(pta, t)?)?;
        if next.is_empty()? {
            log::info!("discarding test {} ({})", t.word, if t.verdict { "accept" } else { "reject" });
            discarded.push(t.clone());
        } else {
            acc = next;
        }
    }
    Ok((acc, discarded))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Strict,
    Greedy,
}

/// The simplified constraint of `ts` and, in greedy mode, the discarded
/// tests in default order.
pub fn synthesize(pta: &Pta, ts: &TestSuite, mode: Mode) -> Result<(PolyUnion, Vec<Test>), SynthesisError> {
    let (phi, discarded) = match mode {
        Mode::Strict => (gen_constraints(pta, ts)?, vec![]),
        Mode::Greedy => gen_constraints_greedy(pta, &greedy_order(ts))?,
    };
    Ok((phi.simplify()?, discarded))
}
