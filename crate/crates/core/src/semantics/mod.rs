//! Concrete and symbolic semantics.
//!
//! Symbolic states pair a location with a zone over clocks, the absolute
//! clock `x_abs` and the parameters. A successor is computed as
//! `((C ∧ g)[R] ∧ I(l′))↗ ∧ I(l′)`. The zone before time elapsing is kept as
//! the *entry zone*: the bounds of `x_abs` over it are the arrival times of
//! the state.

mod concrete;
mod epzg;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::model::{Edge, Pta};
use crate::polyhedra::{ConvexPolyhedron, LinExpr, PolyError, Var};

pub use concrete::{accepts, accepts_lenient, final_locations, AcceptOptions};
pub use epzg::{build_epzg, Epzg, EpzgConfig, EpzgEdge, EpzgNode, DEFAULT_DEPTH};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SemanticsError {
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("initial zone is empty: the invariant of `{0}` excludes the initial clock valuation")]
    InitialZoneEmpty(String),
    #[error("action `{0}` is not in the automaton's alphabet")]
    UnknownAction(String),
    #[error("unknown location `{0}`")]
    UnknownLocation(String),
}

/// A location with a zone over clocks, `x_abs` and parameters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolicState {
    pub location: String,
    pub zone: ConvexPolyhedron,
}

/// A state together with the zone it was entered with.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reached {
    pub state: SymbolicState,
    pub entry: ConvexPolyhedron,
}

fn invariant_of(pta: &Pta, location: &str, space: &BTreeSet<Var>) -> Result<ConvexPolyhedron, SemanticsError> {
    let inv = pta
        .invariant(location)
        .ok_or_else(|| SemanticsError::UnknownLocation(location.to_string()))?;
    Ok(pta.guard_polyhedron(inv, space))
}

/// Every clock, `x_abs` included, at zero; parameters nonnegative; the
/// initial invariant applied before and after time elapsing.
pub fn initial_state(pta: &Pta) -> Result<Reached, SemanticsError> {
    let space = pta.space();
    let zeroes = space
        .iter()
        .filter(|v| v.is_clock())
        .map(|c| LinExpr::var(c.clone()).eq(0.into()));
    let inv = invariant_of(pta, &pta.initial, &space)?;
    let entry = pta
        .nonnegative_params(&space)
        .constrain_all(zeroes)?
        .intersect(&inv)?;
    if !entry.is_satisfiable()? {
        return Err(SemanticsError::InitialZoneEmpty(pta.initial.clone()));
    }
    let zone = entry.time_elapse()?.intersect(&inv)?.simplify()?;
    Ok(Reached {
        state: SymbolicState {
            location: pta.initial.clone(),
            zone,
        },
        entry: entry.simplify()?,
    })
}

/// Successor along `edge`; `None` when the resulting zone is empty.
pub fn successor(pta: &Pta, state: &SymbolicState, edge: &Edge) -> Result<Option<Reached>, SemanticsError> {
    debug_assert_eq!(edge.source, state.location);
    let space = state.zone.space().clone();
    let guard = pta.guard_polyhedron(&edge.guard, &space);
    let guarded = state.zone.intersect(&guard)?;
    if !guarded.is_satisfiable()? {
        return Ok(None);
    }
    let resets: Vec<Var> = edge.resets.iter().map(|c| Var::clock(c)).collect();
    let inv = invariant_of(pta, &edge.target, &space)?;
    let entry = guarded.reset(&resets)?.intersect(&inv)?;
    if !entry.is_satisfiable()? {
        return Ok(None);
    }
    let zone = entry.time_elapse()?.intersect(&inv)?;
    Ok(Some(Reached {
        state: SymbolicState {
            location: edge.target.clone(),
            zone: zone.simplify()?,
        },
        entry: entry.simplify()?,
    }))
}
