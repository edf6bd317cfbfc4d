//! Repair of clock guards in timed automata.
//!
//! A timed automaton under suspicion is abstracted into a parametric timed
//! automaton, test words are generated from its symbolic state space and
//! labelled by a membership oracle, and the labels are turned into a
//! constraint on the parameters. The repaired automaton instantiates the
//! parameters with the valuation nearest to the original constants.

pub mod eval;
pub mod model;
pub mod oracle;
pub mod polyhedra;
pub mod rational;
pub mod repair;
pub mod semantics;
pub mod synthesis;
pub mod testgen;
