use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{
    atom_cap, space_of, LinearInequality, Point, PolyError, PolyUnion, RationalInterval, Rel, Var,
};
use crate::rational::Rational;

/// A conjunction of linear atoms over a declared variable space.
///
/// Atoms are kept normalized: per direction (coefficient vector up to a
/// positive factor) only the tightest lower and upper bound survive, and a
/// matching pair of closed bounds collapses into an equality.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ConvexPolyhedron {
    space: BTreeSet<Var>,
    atoms: Vec<LinearInequality>,
    infeasible: bool,
}

#[derive(Default)]
struct Bounds {
    lower: Option<(Rational, bool)>,
    upper: Option<(Rational, bool)>,
}

impl Bounds {
    fn tighten_upper(&mut self, value: Rational, strict: bool) {
        match &self.upper {
            Some((u, s)) if *u < value || (*u == value && (*s || !strict)) => {}
            _ => self.upper = Some((value, strict)),
        }
    }

    fn tighten_lower(&mut self, value: Rational, strict: bool) {
        match &self.lower {
            Some((l, s)) if *l > value || (*l == value && (*s || !strict)) => {}
            _ => self.lower = Some((value, strict)),
        }
    }
}

/// Normalizes a list of atoms. Returns `None` when a syntactic contradiction
/// is found.
fn normalize(atoms: Vec<LinearInequality>) -> Option<Vec<LinearInequality>> {
    let mut rows: BTreeMap<BTreeMap<Var, Rational>, Bounds> = BTreeMap::new();
    for atom in atoms {
        if let Some(truth) = atom.constant_truth() {
            if truth {
                continue;
            }
            return None;
        }
        let lead = atom.coeffs.values().next().cloned().expect("nonconstant atom");
        let dir: BTreeMap<Var, Rational> = atom
            .coeffs
            .iter()
            .map(|(v, c)| (v.clone(), c / &lead))
            .collect();
        // dir·v + constant/lead ⋈' 0, flipped when lead < 0
        let bound = -(&atom.constant / &lead);
        let row = rows.entry(dir).or_default();
        match atom.rel {
            Rel::Eq => {
                row.tighten_upper(bound.clone(), false);
                row.tighten_lower(bound, false);
            }
            rel => {
                let strict = rel == Rel::Lt;
                if lead.is_positive() {
                    row.tighten_upper(bound, strict);
                } else {
                    row.tighten_lower(bound, strict);
                }
            }
        }
    }
    let mut out = Vec::with_capacity(rows.len());
    for (dir, b) in rows {
        let expr = |k: &Rational, sign: &Rational| {
            let coeffs = dir.iter().map(|(v, c)| (v.clone(), c * sign)).collect();
            (coeffs, -(k * sign))
        };
        match (&b.lower, &b.upper) {
            (Some((l, ls)), Some((u, us))) if l > u || (l == u && (*ls || *us)) => return None,
            (Some((l, _)), Some((u, _))) if l == u => {
                let (coeffs, constant) = expr(l, &Rational::one());
                out.push(LinearInequality {
                    coeffs,
                    constant,
                    rel: Rel::Eq,
                });
                continue;
            }
            _ => {}
        }
        if let Some((l, strict)) = &b.lower {
            let (coeffs, constant) = expr(l, &-Rational::one());
            out.push(LinearInequality {
                coeffs,
                constant,
                rel: if *strict { Rel::Lt } else { Rel::Le },
            });
        }
        if let Some((u, strict)) = &b.upper {
            let (coeffs, constant) = expr(u, &Rational::one());
            out.push(LinearInequality {
                coeffs,
                constant,
                rel: if *strict { Rel::Lt } else { Rel::Le },
            });
        }
    }
    Some(out)
}

/// `a + k·b` for atoms.
fn add_multiple(a: &LinearInequality, k: &Rational, b: &LinearInequality) -> LinearInequality {
    let mut coeffs = a.coeffs.clone();
    for (v, c) in &b.coeffs {
        let entry = coeffs.entry(v.clone()).or_insert_with(Rational::zero);
        *entry += k * c;
    }
    coeffs.retain(|_, c| !c.is_zero());
    LinearInequality {
        coeffs,
        constant: &a.constant + k * &b.constant,
        rel: a.rel,
    }
}

/// One Fourier–Motzkin step eliminating `var` from `atoms`.
fn eliminate_var(
    atoms: Vec<LinearInequality>,
    var: &Var,
) -> Result<Option<Vec<LinearInequality>>, PolyError> {
    if let Some(pos) = atoms
        .iter()
        .position(|a| a.rel == Rel::Eq && a.coeffs.contains_key(var))
    {
        let mut atoms = atoms;
        let eq = atoms.swap_remove(pos);
        let c = eq.coeff(var);
        let substituted = atoms
            .into_iter()
            .map(|a| {
                let ca = a.coeff(var);
                if ca.is_zero() {
                    a
                } else {
                    add_multiple(&a, &(-(ca / &c)), &eq)
                }
            })
            .collect();
        return Ok(normalize(substituted));
    }
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    let mut rest = Vec::new();
    for a in atoms {
        let c = a.coeff(var);
        if c.is_positive() {
            upper.push(a);
        } else if c.is_negative() {
            lower.push(a);
        } else {
            rest.push(a);
        }
    }
    let produced = rest.len() + lower.len() * upper.len();
    let cap = atom_cap();
    if produced > cap {
        return Err(PolyError::AtomCapExceeded {
            var: var.clone(),
            atoms: produced,
            cap,
        });
    }
    for u in &upper {
        let cu = u.coeff(var);
        for l in &lower {
            let cl = -l.coeff(var);
            // cl·u + cu·l cancels var; both factors are positive.
            let mut combined = add_multiple(&u.scale(&cl), &cu, l);
            combined.rel = u.rel.combine(l.rel);
            rest.push(combined);
        }
    }
    Ok(normalize(rest))
}

impl LinearInequality {
    fn scale(&self, k: &Rational) -> LinearInequality {
        LinearInequality {
            coeffs: self.coeffs.iter().map(|(v, c)| (v.clone(), c * k)).collect(),
            constant: &self.constant * k,
            rel: self.rel,
        }
    }
}

impl ConvexPolyhedron {
    pub fn universe(space: BTreeSet<Var>) -> Self {
        ConvexPolyhedron {
            space,
            atoms: Vec::new(),
            infeasible: false,
        }
    }

    pub fn empty(space: BTreeSet<Var>) -> Self {
        ConvexPolyhedron {
            space,
            atoms: Vec::new(),
            infeasible: true,
        }
    }

    /// Builds a polyhedron; every atom variable must belong to `space`.
    pub fn new(space: BTreeSet<Var>, atoms: Vec<LinearInequality>) -> Result<Self, PolyError> {
        if let Some(v) = space_of(&atoms).into_iter().find(|v| !space.contains(v)) {
            return Err(PolyError::UnknownVariable(v));
        }
        Ok(Self::from_parts(space, atoms))
    }

    /// Polyhedron whose space is exactly the set of variables its atoms use.
    pub fn from_atoms(atoms: Vec<LinearInequality>) -> Self {
        let space = space_of(&atoms);
        Self::from_parts(space, atoms)
    }

    fn from_parts(space: BTreeSet<Var>, atoms: Vec<LinearInequality>) -> Self {
        match normalize(atoms) {
            Some(atoms) => ConvexPolyhedron {
                space,
                atoms,
                infeasible: false,
            },
            None => Self::empty(space),
        }
    }

    pub fn space(&self) -> &BTreeSet<Var> {
        &self.space
    }

    pub fn atoms(&self) -> &[LinearInequality] {
        &self.atoms
    }

    /// True when normalization already detected a contradiction. A `false`
    /// result does not imply satisfiability.
    pub fn is_trivially_empty(&self) -> bool {
        self.infeasible
    }

    pub fn is_universe(&self) -> bool {
        !self.infeasible && self.atoms.is_empty()
    }

    /// Same polyhedron viewed in a larger space.
    pub fn extend_space(&self, extra: impl IntoIterator<Item = Var>) -> Self {
        let mut out = self.clone();
        out.space.extend(extra);
        out
    }

    pub fn constrain(&self, atom: LinearInequality) -> Result<Self, PolyError> {
        self.constrain_all(std::iter::once(atom))
    }

    pub fn constrain_all(
        &self,
        atoms: impl IntoIterator<Item = LinearInequality>,
    ) -> Result<Self, PolyError> {
        if self.infeasible {
            return Ok(self.clone());
        }
        let mut all = self.atoms.clone();
        for a in atoms {
            if let Some(v) = a.vars().find(|v| !self.space.contains(v)) {
                return Err(PolyError::UnknownVariable(v.clone()));
            }
            all.push(a);
        }
        Ok(Self::from_parts(self.space.clone(), all))
    }

    pub fn intersect(&self, other: &ConvexPolyhedron) -> Result<Self, PolyError> {
        if self.space != other.space {
            return Err(PolyError::SpaceMismatch);
        }
        if self.infeasible || other.infeasible {
            return Ok(Self::empty(self.space.clone()));
        }
        let mut all = self.atoms.clone();
        all.extend(other.atoms.iter().cloned());
        Ok(Self::from_parts(self.space.clone(), all))
    }

    /// Existentially quantifies `vars` away; they leave the space.
    pub fn eliminate<'a>(&self, vars: impl IntoIterator<Item = &'a Var>) -> Result<Self, PolyError> {
        let mut todo: BTreeSet<Var> = vars.into_iter().cloned().collect();
        let space: BTreeSet<Var> = self.space.difference(&todo).cloned().collect();
        if self.infeasible {
            return Ok(Self::empty(space));
        }
        let mut atoms = self.atoms.clone();
        loop {
            // Drop variables no atom mentions.
            todo.retain(|v| atoms.iter().any(|a| a.coeffs.contains_key(v)));
            let Some(var) = pick_next(&atoms, &todo) else {
                break;
            };
            todo.remove(&var);
            match eliminate_var(atoms, &var)? {
                Some(next) => atoms = next,
                None => return Ok(Self::empty(space)),
            }
        }
        Ok(ConvexPolyhedron {
            space,
            atoms,
            infeasible: false,
        })
    }

    /// Exact rational satisfiability, strict atoms included.
    pub fn is_satisfiable(&self) -> Result<bool, PolyError> {
        if self.infeasible {
            return Ok(false);
        }
        let all: Vec<Var> = self.space.iter().cloned().collect();
        Ok(!self.eliminate(&all)?.infeasible)
    }

    /// `{w + d·u | w ∈ self, d ≥ 0}` with `u` one on every clock.
    pub fn time_elapse(&self) -> Result<Self, PolyError> {
        if self.infeasible {
            return Ok(self.clone());
        }
        let mut atoms: Vec<LinearInequality> = self
            .atoms
            .iter()
            .map(|a| {
                let slope: Rational = a
                    .coeffs
                    .iter()
                    .filter(|(v, _)| v.is_clock())
                    .map(|(_, c)| c.clone())
                    .sum();
                let mut a = a.clone();
                if !slope.is_zero() {
                    a.coeffs.insert(Var::Delay, -slope);
                }
                a
            })
            .collect();
        atoms.push(LinearInequality {
            coeffs: [(Var::Delay, -Rational::one())].into_iter().collect(),
            constant: Rational::zero(),
            rel: Rel::Le,
        });
        let lifted = ConvexPolyhedron {
            space: self.space.iter().cloned().chain([Var::Delay]).collect(),
            atoms,
            infeasible: false,
        };
        lifted.eliminate(&[Var::Delay])
    }

    /// Sets every clock in `clocks` to zero, keeping the others.
    pub fn reset(&self, clocks: &[Var]) -> Result<Self, PolyError> {
        for c in clocks {
            if !c.is_clock() {
                return Err(PolyError::NotAClock(c.clone()));
            }
            if !self.space.contains(c) {
                return Err(PolyError::UnknownVariable(c.clone()));
            }
        }
        if clocks.is_empty() {
            return Ok(self.clone());
        }
        let projected = self.eliminate(clocks)?;
        let zeroes = clocks.iter().map(|c| LinearInequality {
            coeffs: [(c.clone(), Rational::one())].into_iter().collect(),
            constant: Rational::zero(),
            rel: Rel::Eq,
        });
        projected.extend_space(clocks.iter().cloned()).constrain_all(zeroes)
    }

    /// Eliminates every non-parameter variable.
    pub fn project_onto_params(&self) -> Result<Self, PolyError> {
        let others: Vec<Var> = self.space.iter().filter(|v| !v.is_param()).cloned().collect();
        self.eliminate(&others)
    }

    /// Tightest interval containing the values `v` takes over the polyhedron.
    pub fn variable_bounds(&self, v: &Var) -> Result<RationalInterval, PolyError> {
        if !self.space.contains(v) {
            return Err(PolyError::UnknownVariable(v.clone()));
        }
        let others: Vec<Var> = self.space.iter().filter(|o| *o != v).cloned().collect();
        let only = self.eliminate(&others)?;
        if only.infeasible {
            return Err(PolyError::Empty);
        }
        let mut iv = RationalInterval::unbounded();
        for a in &only.atoms {
            let c = a.coeff(v);
            let bound = -(&a.constant / &c);
            match a.rel {
                Rel::Eq => return Ok(RationalInterval::point(bound)),
                rel => {
                    let closed = rel == Rel::Le;
                    if c.is_positive() {
                        iv.upper = Some(bound);
                        iv.upper_closed = closed;
                    } else {
                        iv.lower = Some(bound);
                        iv.lower_closed = closed;
                    }
                }
            }
        }
        Ok(iv)
    }

    pub fn contains_point(&self, point: &Point) -> bool {
        !self.infeasible && self.atoms.iter().all(|a| a.holds(point).unwrap_or(false))
    }

    /// Complement as a union: one flipped atom per disjunct.
    pub fn negate(&self) -> Result<PolyUnion, PolyError> {
        if !self.is_satisfiable()? {
            return Ok(PolyUnion::universe(self.space.clone()));
        }
        let disjuncts = self
            .atoms
            .iter()
            .flat_map(|a| a.complement())
            .map(|a| Self::from_parts(self.space.clone(), vec![a]))
            .collect();
        Ok(PolyUnion::from_disjuncts_unchecked(self.space.clone(), disjuncts))
    }

    /// Does every point of `self` satisfy `atom`?
    pub fn entails(&self, atom: &LinearInequality) -> Result<bool, PolyError> {
        for flipped in atom.complement() {
            let probe = Self::from_parts(
                self.space.clone(),
                self.atoms.iter().cloned().chain([flipped]).collect(),
            );
            if probe.is_satisfiable()? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn is_subset_of(&self, other: &ConvexPolyhedron) -> Result<bool, PolyError> {
        if self.space != other.space {
            return Err(PolyError::SpaceMismatch);
        }
        if !self.is_satisfiable()? {
            return Ok(true);
        }
        if other.infeasible {
            return Ok(false);
        }
        for a in &other.atoms {
            if !self.atoms.contains(a) && !self.entails(a)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn equivalent(&self, other: &ConvexPolyhedron) -> Result<bool, PolyError> {
        Ok(self.is_subset_of(other)? && other.is_subset_of(self)?)
    }

    /// Removes every atom implied by the remaining ones; unsatisfiable input
    /// becomes the canonical empty polyhedron.
    pub fn simplify(&self) -> Result<Self, PolyError> {
        if !self.is_satisfiable()? {
            return Ok(Self::empty(self.space.clone()));
        }
        let mut atoms = self.atoms.clone();
        let mut i = 0;
        while i < atoms.len() {
            let mut rest = atoms.clone();
            let candidate = rest.remove(i);
            let without = ConvexPolyhedron {
                space: self.space.clone(),
                atoms: rest.clone(),
                infeasible: false,
            };
            if without.entails(&candidate)? {
                atoms = rest;
            } else {
                i += 1;
            }
        }
        Ok(ConvexPolyhedron {
            space: self.space.clone(),
            atoms,
            infeasible: false,
        })
    }
}

/// Equalities first, then the variable with the fewest generated atoms.
fn pick_next(atoms: &[LinearInequality], todo: &BTreeSet<Var>) -> Option<Var> {
    if let Some(v) = todo.iter().find(|v| {
        atoms
            .iter()
            .any(|a| a.rel == Rel::Eq && a.coeffs.contains_key(*v))
    }) {
        return Some(v.clone());
    }
    todo.iter()
        .min_by_key(|v| {
            let (mut pos, mut neg) = (0usize, 0usize);
            for a in atoms {
                match a.coeffs.get(*v) {
                    Some(c) if c.is_positive() => pos += 1,
                    Some(_) => neg += 1,
                    None => {}
                }
            }
            pos * neg
        })
        .cloned()
}

#[derive(Serialize, Deserialize)]
struct PolyJson {
    space: Vec<Var>,
    atoms: Vec<LinearInequality>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    empty: bool,
}

impl Serialize for ConvexPolyhedron {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        PolyJson {
            space: self.space.iter().cloned().collect(),
            atoms: self.atoms.clone(),
            empty: self.infeasible,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ConvexPolyhedron {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = PolyJson::deserialize(d)?;
        let space: BTreeSet<Var> = raw.space.into_iter().collect();
        if raw.empty {
            return Ok(ConvexPolyhedron::empty(space));
        }
        ConvexPolyhedron::new(space, raw.atoms).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for ConvexPolyhedron {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&super::text::format_poly(self))
    }
}
