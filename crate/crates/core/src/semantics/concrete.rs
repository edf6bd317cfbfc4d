use std::collections::{BTreeMap, BTreeSet};

use num_traits::Zero;

use super::SemanticsError;
use crate::model::{Guard, Pta, Ta, TimedWord};
use crate::polyhedra::ABS_CLOCK_NAME;
use crate::rational::Rational;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AcceptOptions {
    /// Also require the run to end in an accepting location.
    pub require_accepting: bool,
}

type Clocks = BTreeMap<String, Rational>;

fn satisfied(guard: &Guard, clocks: &Clocks) -> bool {
    guard.atoms.iter().all(|a| {
        let value = clocks.get(&a.clock).expect("validated clock");
        a.rel.holds(value, &a.constant)
    })
}

/// Locations in which some run of `ta` reading exactly `w` ends.
///
/// Every delay is fixed by the timestamps, so the set of reachable
/// configurations stays finite; invariants are convex, so checking them at
/// both ends of a delay is exact.
pub fn final_locations(ta: &Ta, w: &TimedWord) -> Result<BTreeSet<String>, SemanticsError> {
    let pta: &Pta = ta.as_pta();
    for (a, _) in w.steps() {
        if !pta.alphabet.contains(a) {
            return Err(SemanticsError::UnknownAction(a.clone()));
        }
    }
    let zero: Clocks = pta
        .clocks
        .iter()
        .map(String::as_str)
        .chain([ABS_CLOCK_NAME])
        .map(|c| (c.to_string(), Rational::zero()))
        .collect();
    let mut configs: BTreeSet<(String, Clocks)> = BTreeSet::new();
    let init_inv = pta
        .invariant(&pta.initial)
        .ok_or_else(|| SemanticsError::UnknownLocation(pta.initial.clone()))?;
    if satisfied(init_inv, &zero) {
        configs.insert((pta.initial.clone(), zero));
    }
    let mut now = Rational::zero();
    for (action, t) in w.steps() {
        let delay = t - &now;
        now = t.clone();
        let mut next = BTreeSet::new();
        for (loc, clocks) in &configs {
            let later: Clocks = clocks.iter().map(|(c, v)| (c.clone(), v + &delay)).collect();
            if !satisfied(pta.invariant(loc).expect("known location"), &later) {
                continue;
            }
            for e in pta.edges_from(loc).filter(|e| e.action == *action) {
                if !satisfied(&e.guard, &later) {
                    continue;
                }
                let mut after = later.clone();
                for r in &e.resets {
                    after.insert(r.clone(), Rational::zero());
                }
                let inv = pta
                    .invariant(&e.target)
                    .ok_or_else(|| SemanticsError::UnknownLocation(e.target.clone()))?;
                if satisfied(inv, &after) {
                    next.insert((e.target.clone(), after));
                }
            }
        }
        configs = next;
        if configs.is_empty() {
            break;
        }
    }
    Ok(configs.into_iter().map(|(l, _)| l).collect())
}

/// Is `w` realizable by some run of `ta`?
pub fn accepts(ta: &Ta, w: &TimedWord, opts: AcceptOptions) -> Result<bool, SemanticsError> {
    let ends = final_locations(ta, w)?;
    Ok(if opts.require_accepting {
        ends.iter()
            .any(|l| ta.location(l).is_some_and(|loc| loc.accepting))
    } else {
        !ends.is_empty()
    })
}

/// As [`accepts`], treating actions outside the alphabet as rejection.
pub fn accepts_lenient(ta: &Ta, w: &TimedWord, opts: AcceptOptions) -> bool {
    match accepts(ta, w, opts) {
        Ok(b) => b,
        Err(SemanticsError::UnknownAction(_)) => false,
        Err(e) => panic!("validated automaton failed to run: {e}"),
    }
}
