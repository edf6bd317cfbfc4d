use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{ConvexPolyhedron, LinearInequality, Point, PolyError, Var};

/// A finite union of convex polyhedra over one variable space. The empty
/// union is ⊥.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolyUnion {
    space: BTreeSet<Var>,
    disjuncts: Vec<ConvexPolyhedron>,
}

impl PolyUnion {
    pub fn bottom(space: BTreeSet<Var>) -> Self {
        PolyUnion {
            space,
            disjuncts: Vec::new(),
        }
    }

    pub fn universe(space: BTreeSet<Var>) -> Self {
        PolyUnion {
            disjuncts: vec![ConvexPolyhedron::universe(space.clone())],
            space,
        }
    }

    pub fn from_poly(p: ConvexPolyhedron) -> Self {
        let space = p.space().clone();
        let disjuncts = if p.is_trivially_empty() { vec![] } else { vec![p] };
        PolyUnion { space, disjuncts }
    }

    pub fn from_disjuncts(
        space: BTreeSet<Var>,
        disjuncts: Vec<ConvexPolyhedron>,
    ) -> Result<Self, PolyError> {
        if disjuncts.iter().any(|d| *d.space() != space) {
            return Err(PolyError::SpaceMismatch);
        }
        Ok(Self::from_disjuncts_unchecked(space, disjuncts))
    }

    pub(crate) fn from_disjuncts_unchecked(space: BTreeSet<Var>, disjuncts: Vec<ConvexPolyhedron>) -> Self {
        PolyUnion {
            space,
            disjuncts: disjuncts
                .into_iter()
                .filter(|d| !d.is_trivially_empty())
                .collect(),
        }
    }

    pub fn space(&self) -> &BTreeSet<Var> {
        &self.space
    }

    pub fn disjuncts(&self) -> &[ConvexPolyhedron] {
        &self.disjuncts
    }

    fn check_space(&self, other: &PolyUnion) -> Result<(), PolyError> {
        if self.space != other.space {
            Err(PolyError::SpaceMismatch)
        } else {
            Ok(())
        }
    }

    /// Intersection, distributed over disjuncts; empty products are dropped.
    pub fn conjoin(&self, other: &PolyUnion) -> Result<PolyUnion, PolyError> {
        self.check_space(other)?;
        let mut out = Vec::new();
        for a in &self.disjuncts {
            for b in &other.disjuncts {
                let ab = a.intersect(b)?;
                if ab.is_satisfiable()? {
                    out.push(ab);
                }
            }
        }
        PolyUnion {
            space: self.space.clone(),
            disjuncts: out,
        }
        .pruned()
    }

    pub fn conjoin_poly(&self, p: &ConvexPolyhedron) -> Result<PolyUnion, PolyError> {
        self.conjoin(&PolyUnion::from_poly(p.clone()))
    }

    pub fn union(&self, other: &PolyUnion) -> Result<PolyUnion, PolyError> {
        self.check_space(other)?;
        let mut disjuncts = self.disjuncts.clone();
        disjuncts.extend(other.disjuncts.iter().cloned());
        PolyUnion {
            space: self.space.clone(),
            disjuncts,
        }
        .pruned()
    }

    /// Complement: De Morgan over the disjuncts, conjoining one negated
    /// disjunct at a time so that empty products are pruned early.
    pub fn negate(&self) -> Result<PolyUnion, PolyError> {
        let mut acc = PolyUnion::universe(self.space.clone());
        for d in &self.disjuncts {
            acc = acc.conjoin(&d.negate()?)?;
            if acc.disjuncts.is_empty() {
                break;
            }
        }
        Ok(acc)
    }

    pub fn is_empty(&self) -> Result<bool, PolyError> {
        for d in &self.disjuncts {
            if d.is_satisfiable()? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn contains_point(&self, point: &Point) -> bool {
        self.disjuncts.iter().any(|d| d.contains_point(point))
    }

    /// Exact inclusion: each disjunct of `self` minus `other` must be empty.
    pub fn is_subset_of(&self, other: &PolyUnion) -> Result<bool, PolyError> {
        self.check_space(other)?;
        let mut complement: Option<PolyUnion> = None;
        for a in &self.disjuncts {
            let mut covered = false;
            for b in &other.disjuncts {
                if a.is_subset_of(b)? {
                    covered = true;
                    break;
                }
            }
            if covered {
                continue;
            }
            if complement.is_none() {
                complement = Some(other.negate()?);
            }
            let rest = PolyUnion::from_poly(a.clone()).conjoin(complement.as_ref().unwrap())?;
            if !rest.is_empty()? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn equivalent(&self, other: &PolyUnion) -> Result<bool, PolyError> {
        Ok(self.is_subset_of(other)? && other.is_subset_of(self)?)
    }

    /// Drops unsatisfiable disjuncts and those contained in another one.
    pub fn pruned(self) -> Result<PolyUnion, PolyError> {
        let mut kept: Vec<ConvexPolyhedron> = Vec::with_capacity(self.disjuncts.len());
        for d in self.disjuncts {
            if !d.is_satisfiable()? {
                continue;
            }
            let mut subsumed = false;
            for k in &kept {
                if d.is_subset_of(k)? {
                    subsumed = true;
                    break;
                }
            }
            if subsumed {
                continue;
            }
            let mut remaining = Vec::with_capacity(kept.len() + 1);
            for k in kept {
                if !k.is_subset_of(&d)? {
                    remaining.push(k);
                }
            }
            remaining.push(d);
            kept = remaining;
        }
        Ok(PolyUnion {
            space: self.space,
            disjuncts: kept,
        })
    }

    /// Redundancy-free atoms in every disjunct.
    pub fn simplify(&self) -> Result<PolyUnion, PolyError> {
        let disjuncts = self
            .disjuncts
            .iter()
            .map(|d| d.simplify())
            .collect::<Result<Vec<_>, _>>()?;
        PolyUnion {
            space: self.space.clone(),
            disjuncts,
        }
        .pruned()
    }

    pub fn to_json(&self) -> UnionJson {
        UnionJson {
            space: self.space.iter().cloned().collect(),
            disjuncts: self.disjuncts.iter().map(|d| d.atoms().to_vec()).collect(),
        }
    }

    pub fn from_json(json: UnionJson) -> Result<PolyUnion, PolyError> {
        let space: BTreeSet<Var> = json.space.into_iter().collect();
        let disjuncts = json
            .disjuncts
            .into_iter()
            .map(|atoms| ConvexPolyhedron::new(space.clone(), atoms))
            .collect::<Result<Vec<_>, _>>()?;
        PolyUnion::from_disjuncts(space, disjuncts)
    }
}

/// Machine-readable form of a union.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnionJson {
    pub space: Vec<Var>,
    pub disjuncts: Vec<Vec<LinearInequality>>,
}

impl fmt::Display for PolyUnion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&super::text::format_union(self))
    }
}
