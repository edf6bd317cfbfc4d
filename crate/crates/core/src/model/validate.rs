use std::collections::BTreeSet;
use std::fmt;

use num_traits::{Signed, Zero};

use super::{is_reserved_name, CmpOp, Guard, Pta};
use crate::rational::Rational;

/// One broken model invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    MissingInitialLocation(String),
    Duplicate { kind: &'static str, name: String },
    ReservedName(String),
    UnknownClock { context: String, clock: String },
    UnknownParameter { context: String, param: String },
    UnknownLocation { edge: usize, location: String },
    UnknownAction { edge: usize, action: String },
    SilentAction { edge: usize },
    SilentInAlphabet,
    NegativeBound { context: String, atom: String },
    InitialInvariantExcludesZero { location: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MissingInitialLocation(l) if l.is_empty() => f.write_str("missing initial location"),
            Violation::MissingInitialLocation(l) => write!(f, "missing initial location `{l}`"),
            Violation::Duplicate { kind, name } => write!(f, "duplicate {kind} `{name}`"),
            Violation::ReservedName(n) => write!(f, "`{n}` is reserved for the absolute-time clock"),
            Violation::UnknownClock { context, clock } => write!(f, "unknown clock `{clock}` in {context}"),
            Violation::UnknownParameter { context, param } => {
                write!(f, "unknown parameter `{param}` in {context}")
            }
            Violation::UnknownLocation { edge, location } => {
                write!(f, "unknown location `{location}` on edge {edge}")
            }
            Violation::UnknownAction { edge, action } => {
                write!(f, "action `{action}` of edge {edge} is not in the alphabet")
            }
            Violation::SilentAction { edge } => write!(f, "edge {edge} has an empty (silent) action"),
            Violation::SilentInAlphabet => f.write_str("alphabet contains the empty (silent) action"),
            Violation::NegativeBound { context, atom } => {
                write!(f, "unsatisfiable negative bound `{atom}` in {context}")
            }
            Violation::InitialInvariantExcludesZero { location } => {
                write!(f, "invariant of initial location `{location}` excludes time zero")
            }
        }
    }
}

fn duplicates<'a>(kind: &'static str, names: impl IntoIterator<Item = &'a String>, out: &mut Vec<Violation>) {
    let mut seen = BTreeSet::new();
    for n in names {
        if !seen.insert(n) {
            out.push(Violation::Duplicate { kind, name: n.clone() });
        }
    }
}

fn check_guard(pta: &Pta, guard: &Guard, context: &str, out: &mut Vec<Violation>) {
    for atom in &guard.atoms {
        // the absolute clock may be guarded but is never declared
        if !pta.clocks.contains(&atom.clock) && !is_reserved_name(&atom.clock) {
            out.push(Violation::UnknownClock {
                context: context.to_string(),
                clock: atom.clock.clone(),
            });
        }
        for p in atom.coeffs.keys() {
            if !pta.parameters.contains(p) {
                out.push(Violation::UnknownParameter {
                    context: context.to_string(),
                    param: p.clone(),
                });
            }
        }
        // clock values are nonnegative
        let hopeless = atom.is_constant()
            && match atom.rel {
                CmpOp::Lt => !atom.constant.is_positive(),
                CmpOp::Le | CmpOp::Eq => atom.constant.is_negative(),
                CmpOp::Ge | CmpOp::Gt => false,
            };
        if hopeless {
            out.push(Violation::NegativeBound {
                context: context.to_string(),
                atom: atom.to_string(),
            });
        }
    }
}

/// Every invariant violation of `pta`; empty means valid.
pub fn validate(pta: &Pta) -> Vec<Violation> {
    let mut out = Vec::new();
    if pta.location(&pta.initial).is_none() {
        out.push(Violation::MissingInitialLocation(pta.initial.clone()));
    }
    duplicates("location", pta.locations.iter().map(|l| &l.name), &mut out);
    duplicates("clock", &pta.clocks, &mut out);
    duplicates("parameter", &pta.parameters, &mut out);
    duplicates("action", &pta.alphabet, &mut out);
    let ids: Vec<String> = pta.edges.iter().map(|e| e.id.to_string()).collect();
    duplicates("edge id", &ids, &mut out);
    for n in pta.clocks.iter().chain(&pta.parameters) {
        if is_reserved_name(n) {
            out.push(Violation::ReservedName(n.clone()));
        }
    }
    let clock_params: BTreeSet<&String> = pta.clocks.iter().collect();
    for p in &pta.parameters {
        if clock_params.contains(p) {
            out.push(Violation::Duplicate {
                kind: "clock/parameter name",
                name: p.clone(),
            });
        }
    }
    for a in &pta.alphabet {
        if a.is_empty() {
            out.push(Violation::SilentInAlphabet);
        }
    }
    for l in &pta.locations {
        check_guard(pta, &l.invariant, &format!("invariant of `{}`", l.name), &mut out);
    }
    for e in &pta.edges {
        for loc in [&e.source, &e.target] {
            if pta.location(loc).is_none() {
                out.push(Violation::UnknownLocation {
                    edge: e.id,
                    location: loc.clone(),
                });
            }
        }
        if e.action.is_empty() {
            out.push(Violation::SilentAction { edge: e.id });
        } else if !pta.alphabet.contains(&e.action) {
            out.push(Violation::UnknownAction {
                edge: e.id,
                action: e.action.clone(),
            });
        }
        check_guard(pta, &e.guard, &format!("guard of edge {}", e.id), &mut out);
        for r in &e.resets {
            if !pta.clocks.contains(r) {
                out.push(Violation::UnknownClock {
                    context: format!("resets of edge {}", e.id),
                    clock: r.clone(),
                });
            }
        }
    }
    if let Some(init) = pta.location(&pta.initial) {
        let zero = Rational::zero();
        let excluded = init
            .invariant
            .atoms
            .iter()
            .any(|a| a.is_constant() && !a.rel.holds(&zero, &a.constant));
        if excluded {
            out.push(Violation::InitialInvariantExcludesZero {
                location: init.name.clone(),
            });
        }
    }
    out
}
