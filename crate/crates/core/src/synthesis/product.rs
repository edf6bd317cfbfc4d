use std::collections::BTreeSet;

use super::SynthesisError;
use crate::model::{AtomicGuard, CmpOp, Edge, Guard, Location, Pta, Ta, TimedWord};
use crate::polyhedra::ABS_CLOCK_NAME;

pub fn word_location(i: usize) -> String {
    format!("w{i}")
}

/// The word as a line of locations `w0 … wn`; edge `i` reads the i-th
/// action exactly when `x_abs` equals its timestamp. Only `wn` is accepting.
pub fn trans_word(w: &TimedWord) -> Ta {
    let n = w.len();
    let mut alphabet: Vec<String> = Vec::new();
    for (a, _) in w.steps() {
        if !alphabet.contains(a) {
            alphabet.push(a.clone());
        }
    }
    let locations = (0..=n)
        .map(|i| Location {
            name: word_location(i),
            invariant: Guard::default(),
            accepting: i == n,
        })
        .collect();
    let edges = w
        .steps()
        .iter()
        .enumerate()
        .map(|(i, (a, d))| Edge {
            id: i,
            source: word_location(i),
            target: word_location(i + 1),
            action: a.clone(),
            guard: Guard::new(vec![AtomicGuard::constant(ABS_CLOCK_NAME, CmpOp::Eq, d.clone())]),
            resets: vec![],
        })
        .collect();
    let pta = Pta {
        alphabet,
        clocks: vec![],
        parameters: vec![],
        locations,
        initial: word_location(0),
        edges,
    };
    Ta::new(pta).expect("a word automaton is well formed")
}

/// A product automaton with the component locations of each product
/// location, indexed like `pta.locations`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProductPta {
    pub pta: Pta,
    pub components: Vec<(String, String)>,
}

pub fn pair_name(a: &str, b: &str) -> String {
    format!("({a}, {b})")
}

fn union_keep_order(a: &[String], b: &[String]) -> Vec<String> {
    let mut out = a.to_vec();
    for x in b {
        if !out.contains(x) {
            out.push(x.clone());
        }
    }
    out
}

/// Synchronized product: actions in `sync` move both components together,
/// the others interleave.
pub fn sync_product(a: &Pta, b: &Pta, sync: &BTreeSet<String>) -> Result<ProductPta, SynthesisError> {
    if let Some(c) = a.clocks.iter().find(|c| b.clocks.contains(c)) {
        return Err(SynthesisError::ClockClash(c.clone()));
    }
    let mut components = Vec::new();
    let mut locations = Vec::new();
    for la in &a.locations {
        for lb in &b.locations {
            components.push((la.name.clone(), lb.name.clone()));
            let mut atoms = la.invariant.atoms.clone();
            atoms.extend(lb.invariant.atoms.iter().cloned());
            locations.push(Location {
                name: pair_name(&la.name, &lb.name),
                invariant: Guard::new(atoms),
                accepting: la.accepting && lb.accepting,
            });
        }
    }
    let mut edges = Vec::new();
    let mut push = |source: String, target: String, action: &str, guard: Vec<AtomicGuard>, resets: Vec<String>| {
        let id = edges.len();
        edges.push(Edge {
            id,
            source,
            target,
            action: action.to_string(),
            guard: Guard::new(guard),
            resets,
        });
    };
    for ea in &a.edges {
        if sync.contains(&ea.action) {
            for eb in b.edges.iter().filter(|eb| eb.action == ea.action) {
                let mut guard = ea.guard.atoms.clone();
                guard.extend(eb.guard.atoms.iter().cloned());
                push(
                    pair_name(&ea.source, &eb.source),
                    pair_name(&ea.target, &eb.target),
                    &ea.action,
                    guard,
                    union_keep_order(&ea.resets, &eb.resets),
                );
            }
        } else {
            for lb in &b.locations {
                push(
                    pair_name(&ea.source, &lb.name),
                    pair_name(&ea.target, &lb.name),
                    &ea.action,
                    ea.guard.atoms.clone(),
                    ea.resets.clone(),
                );
            }
        }
    }
    for eb in b.edges.iter().filter(|eb| !sync.contains(&eb.action)) {
        for la in &a.locations {
            push(
                pair_name(&la.name, &eb.source),
                pair_name(&la.name, &eb.target),
                &eb.action,
                eb.guard.atoms.clone(),
                eb.resets.clone(),
            );
        }
    }
    let pta = Pta {
        alphabet: union_keep_order(&a.alphabet, &b.alphabet),
        clocks: union_keep_order(&a.clocks, &b.clocks),
        parameters: union_keep_order(&a.parameters, &b.parameters),
        locations,
        initial: pair_name(&a.initial, &b.initial),
        edges,
    };
    Ok(ProductPta { pta, components })
}
