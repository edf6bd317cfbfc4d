//! Timed and parametric timed automata.
//!
//! A [`Pta`] has locations with invariants, edges with guards and resets,
//! clocks, and parameters. A [`Ta`] is a `Pta` without parameters. Guards
//! are conjunctions of atoms `clock ⋈ Σ cᵢ·pᵢ + k`.

mod abstraction;
mod validate;
mod word;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::Deref;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::polyhedra::{ConvexPolyhedron, LinExpr, LinearInequality, Var, ABS_CLOCK_NAME};
use crate::rational::{self, Rational};

pub use abstraction::{
    abstract_guards, AbstractionStrategy, InvariantMode, ManualMap, ManualMapEntry, Occurrence,
};
pub use validate::{validate, Violation};
pub use word::{ParamValuation, TimedWord};

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("malformed model JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid model: {}", join_violations(.0))]
    Invalid(Vec<Violation>),
    #[error("valuation misses parameter `{0}`")]
    MissingParameter(String),
    #[error("valuation assigns unknown parameter `{0}`")]
    UnknownParameter(String),
    #[error("parameter `{0}` has negative value {1}")]
    NegativeParameter(String, Rational),
    #[error("automaton declares parameters {0:?}; a parameter-free automaton is required")]
    NotParameterFree(Vec<String>),
    #[error("timestamps must be nonnegative and nondecreasing (step {step})")]
    BadTimestamp { step: usize },
    #[error("manual map references nonexistent occurrence {0}")]
    UnknownOccurrence(Occurrence),
    #[error("manual map gives parameter `{param}` the conflicting constants {first} and {second}")]
    ConflictingConstants {
        param: String,
        first: Rational,
        second: Rational,
    },
    #[error("occurrence {0} has a negative constant and cannot become a parameter")]
    NegativeOccurrence(Occurrence),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// Comparison of a clock against its right-hand side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CmpOp {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = ">")]
    Gt,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Eq => "=",
            CmpOp::Ge => ">=",
            CmpOp::Gt => ">",
        }
    }

    pub fn holds(self, lhs: &Rational, rhs: &Rational) -> bool {
        match self {
            CmpOp::Lt => lhs < rhs,
            CmpOp::Le => lhs <= rhs,
            CmpOp::Eq => lhs == rhs,
            CmpOp::Ge => lhs >= rhs,
            CmpOp::Gt => lhs > rhs,
        }
    }
}

/// `clock ⋈ Σ coeffs[p]·p + constant`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomicGuard {
    pub clock: String,
    pub rel: CmpOp,
    #[serde(default, with = "rational::map", skip_serializing_if = "BTreeMap::is_empty")]
    pub coeffs: BTreeMap<String, Rational>,
    #[serde(rename = "const", with = "rational")]
    pub constant: Rational,
}

impl AtomicGuard {
    pub fn constant(clock: &str, rel: CmpOp, k: Rational) -> Self {
        AtomicGuard {
            clock: clock.to_string(),
            rel,
            coeffs: BTreeMap::new(),
            constant: k,
        }
    }

    pub fn param(clock: &str, rel: CmpOp, param: &str) -> Self {
        AtomicGuard {
            clock: clock.to_string(),
            rel,
            coeffs: [(param.to_string(), Rational::one())].into_iter().collect(),
            constant: Rational::zero(),
        }
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    fn drop_zero_coeffs(&mut self) {
        self.coeffs.retain(|_, c| !c.is_zero());
    }

    /// The atom as a linear constraint over clocks and parameters.
    pub fn to_inequality(&self) -> LinearInequality {
        let lhs = LinExpr::var(Var::clock(&self.clock));
        let mut rhs = LinExpr::constant(self.constant.clone());
        for (p, c) in &self.coeffs {
            rhs.add_term(c.clone(), Var::param(p));
        }
        match self.rel {
            CmpOp::Lt => lhs.lt(rhs),
            CmpOp::Le => lhs.le(rhs),
            CmpOp::Eq => lhs.eq(rhs),
            CmpOp::Ge => lhs.ge(rhs),
            CmpOp::Gt => lhs.gt(rhs),
        }
    }

    /// Right-hand side under a valuation; `None` if a parameter is missing.
    pub fn rhs_value(&self, v: &BTreeMap<String, Rational>) -> Option<Rational> {
        let mut acc = self.constant.clone();
        for (p, c) in &self.coeffs {
            acc += c * v.get(p)?;
        }
        Some(acc)
    }
}

impl fmt::Display for AtomicGuard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} ", self.clock, self.rel.symbol())?;
        let mut first = true;
        for (p, c) in &self.coeffs {
            if !first {
                f.write_str(" + ")?;
            }
            first = false;
            if c.is_one() {
                write!(f, "{p}")?;
            } else {
                write!(f, "{c}*{p}")?;
            }
        }
        if first {
            write!(f, "{}", self.constant)
        } else if self.constant.is_zero() {
            Ok(())
        } else {
            write!(f, " + {}", self.constant)
        }
    }
}

/// A conjunction of atoms; the empty guard is `true`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Guard {
    pub atoms: Vec<AtomicGuard>,
}

impl Guard {
    pub fn new(atoms: Vec<AtomicGuard>) -> Self {
        Guard { atoms }
    }

    pub fn is_true(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn inequalities(&self) -> impl Iterator<Item = LinearInequality> + '_ {
        self.atoms.iter().map(AtomicGuard::to_inequality)
    }
}

impl fmt::Display for Guard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.atoms.is_empty() {
            return f.write_str("true");
        }
        let parts: Vec<String> = self.atoms.iter().map(ToString::to_string).collect();
        f.write_str(&parts.join(" & "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Location {
    pub name: String,
    #[serde(default)]
    pub invariant: Guard,
    #[serde(default)]
    pub accepting: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Edge {
    pub id: usize,
    pub source: String,
    pub target: String,
    pub action: String,
    #[serde(default)]
    pub guard: Guard,
    #[serde(default)]
    pub resets: Vec<String>,
}

/// A parametric timed automaton.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pta {
    pub alphabet: Vec<String>,
    pub clocks: Vec<String>,
    #[serde(default)]
    pub parameters: Vec<String>,
    pub locations: Vec<Location>,
    pub initial: String,
    pub edges: Vec<Edge>,
}

impl Pta {
    /// Parses and validates a model.
    pub fn from_json(text: &str) -> Result<Pta, ModelError> {
        let pta = Self::from_json_unchecked(text)?;
        let violations = validate(&pta);
        if violations.is_empty() {
            Ok(pta)
        } else {
            Err(ModelError::Invalid(violations))
        }
    }

    pub fn from_json_unchecked(text: &str) -> Result<Pta, ModelError> {
        let mut pta: Pta = serde_json::from_str(text)?;
        pta.normalize();
        Ok(pta)
    }

    /// Pretty JSON with a trailing newline; stable field order.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model serializes");
        s.push('\n');
        s
    }

    fn normalize(&mut self) {
        for l in &mut self.locations {
            l.invariant.atoms.iter_mut().for_each(AtomicGuard::drop_zero_coeffs);
        }
        for e in &mut self.edges {
            e.guard.atoms.iter_mut().for_each(AtomicGuard::drop_zero_coeffs);
        }
    }

    pub fn location(&self, name: &str) -> Option<&Location> {
        self.locations.iter().find(|l| l.name == name)
    }

    pub fn edge(&self, id: usize) -> Option<&Edge> {
        self.edges.iter().find(|e| e.id == id)
    }

    pub fn edges_from<'a>(&'a self, location: &'a str) -> impl Iterator<Item = &'a Edge> + 'a {
        self.edges.iter().filter(move |e| e.source == location)
    }

    pub fn invariant(&self, location: &str) -> Option<&Guard> {
        self.location(location).map(|l| &l.invariant)
    }

    pub fn is_parameter_free(&self) -> bool {
        self.parameters.is_empty()
    }

    pub fn param_vars(&self) -> BTreeSet<Var> {
        self.parameters.iter().map(|p| Var::param(p)).collect()
    }

    /// Clocks, the absolute clock and the parameters.
    pub fn space(&self) -> BTreeSet<Var> {
        self.clocks
            .iter()
            .map(|c| Var::clock(c))
            .chain([Var::AbsClock])
            .chain(self.param_vars())
            .collect()
    }

    /// Guard as a polyhedron over `space`.
    pub fn guard_polyhedron(&self, guard: &Guard, space: &BTreeSet<Var>) -> ConvexPolyhedron {
        ConvexPolyhedron::new(space.clone(), guard.inequalities().collect())
            .expect("validated guards only mention declared variables")
    }

    /// `p ≥ 0` for every parameter, over `space`.
    pub fn nonnegative_params(&self, space: &BTreeSet<Var>) -> ConvexPolyhedron {
        let atoms = self
            .param_vars()
            .into_iter()
            .map(|p| LinExpr::var(p).ge(0.into()))
            .collect();
        ConvexPolyhedron::new(space.clone(), atoms).expect("parameters are in the space")
    }

    /// `A[v]`: every parameter replaced by its value.
    pub fn apply_valuation(&self, v: &ParamValuation) -> Result<Ta, ModelError> {
        for p in &self.parameters {
            if v.get(p).is_none() {
                return Err(ModelError::MissingParameter(p.clone()));
            }
        }
        if let Some(extra) = v.names().find(|p| !self.parameters.contains(p)) {
            return Err(ModelError::UnknownParameter(extra.clone()));
        }
        let instantiate = |g: &Guard| Guard {
            atoms: g
                .atoms
                .iter()
                .map(|a| AtomicGuard {
                    clock: a.clock.clone(),
                    rel: a.rel,
                    coeffs: BTreeMap::new(),
                    constant: a.rhs_value(v.as_map()).expect("valuation is total"),
                })
                .collect(),
        };
        let mut out = self.clone();
        out.parameters.clear();
        for l in &mut out.locations {
            l.invariant = instantiate(&l.invariant);
        }
        for e in &mut out.edges {
            e.guard = instantiate(&e.guard);
        }
        Ok(Ta(out))
    }

    /// Recovers `v` with `apply_valuation(v) == ta`, if the automaton is an
    /// instance of `self`.
    pub fn match_valuation(&self, ta: &Pta) -> Option<ParamValuation> {
        if ta.locations.len() != self.locations.len() || ta.edges.len() != self.edges.len() {
            return None;
        }
        let mut values: BTreeMap<String, Rational> = BTreeMap::new();
        let pairs = self
            .locations
            .iter()
            .zip(&ta.locations)
            .map(|(a, b)| (&a.invariant, &b.invariant))
            .chain(self.edges.iter().zip(&ta.edges).map(|(a, b)| (&a.guard, &b.guard)));
        for (g, h) in pairs {
            if g.atoms.len() != h.atoms.len() {
                return None;
            }
            for (a, b) in g.atoms.iter().zip(&h.atoms) {
                if a.coeffs.len() == 1 && b.is_constant() {
                    let (p, c) = a.coeffs.iter().next().unwrap();
                    let value = (&b.constant - &a.constant) / c;
                    match values.get(p) {
                        Some(old) if *old != value => return None,
                        _ => {
                            values.insert(p.clone(), value);
                        }
                    }
                }
            }
        }
        for p in &self.parameters {
            values.entry(p.clone()).or_insert_with(Rational::zero);
        }
        let v = ParamValuation::new(values).ok()?;
        (self.apply_valuation(&v).ok()?.as_pta() == ta).then_some(v)
    }
}

/// A timed automaton: a [`Pta`] with no parameters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct Ta(Pta);

impl Ta {
    pub fn new(pta: Pta) -> Result<Ta, ModelError> {
        if pta.is_parameter_free() && pta.edges.iter().all(|e| e.guard.atoms.iter().all(AtomicGuard::is_constant))
            && pta.locations.iter().all(|l| l.invariant.atoms.iter().all(AtomicGuard::is_constant))
        {
            Ok(Ta(pta))
        } else {
            Err(ModelError::NotParameterFree(pta.parameters.clone()))
        }
    }

    pub fn from_json(text: &str) -> Result<Ta, ModelError> {
        Ta::new(Pta::from_json(text)?)
    }

    pub fn as_pta(&self) -> &Pta {
        &self.0
    }

    pub fn into_pta(self) -> Pta {
        self.0
    }

    /// Multiplies every constant by the lcm of their denominators so that
    /// all constants become integers. Returns the scaling factor.
    pub fn rescaled_to_integers(&self) -> (Ta, Rational) {
        let constants = self
            .0
            .locations
            .iter()
            .flat_map(|l| &l.invariant.atoms)
            .chain(self.0.edges.iter().flat_map(|e| &e.guard.atoms))
            .map(|a| &a.constant);
        let factor = Rational::from_integer(rational::lcm_of_denominators(constants));
        let mut out = self.0.clone();
        let scale = |g: &mut Guard| g.atoms.iter_mut().for_each(|a| a.constant *= &factor);
        out.locations.iter_mut().for_each(|l| scale(&mut l.invariant));
        out.edges.iter_mut().for_each(|e| scale(&mut e.guard));
        (Ta(out), factor)
    }
}

impl Deref for Ta {
    type Target = Pta;

    fn deref(&self) -> &Pta {
        &self.0
    }
}

impl<'de> Deserialize<'de> for Ta {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let mut pta = Pta::deserialize(d)?;
        pta.normalize();
        Ta::new(pta).map_err(serde::de::Error::custom)
    }
}

/// True when `name` may not be declared by a model.
pub fn is_reserved_name(name: &str) -> bool {
    name == ABS_CLOCK_NAME
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;
    use crate::rational::int;

    fn loc(name: &str, inv: Vec<AtomicGuard>) -> Location {
        Location {
            name: name.into(),
            invariant: Guard::new(inv),
            accepting: false,
        }
    }

    fn edge(id: usize, s: &str, t: &str, a: &str, g: Vec<AtomicGuard>, r: &[&str]) -> Edge {
        Edge {
            id,
            source: s.into(),
            target: t.into(),
            action: a.into(),
            guard: Guard::new(g),
            resets: r.iter().map(|c| c.to_string()).collect(),
        }
    }

    fn c(clock: &str, rel: CmpOp, k: i64) -> AtomicGuard {
        AtomicGuard::constant(clock, rel, int(k))
    }

    fn p(clock: &str, rel: CmpOp, name: &str) -> AtomicGuard {
        AtomicGuard::param(clock, rel, name)
    }

    /// The running example TA.
    pub fn running_ta() -> Ta {
        use CmpOp::*;
        Ta::new(Pta {
            alphabet: vec!["a".into(), "b".into(), "c".into()],
            clocks: vec!["x".into(), "y".into()],
            parameters: vec![],
            locations: vec![
                loc("l1", vec![c("x", Le, 4)]),
                loc("l2", vec![c("x", Le, 3)]),
                loc("l3", vec![]),
                loc("l4", vec![c("x", Le, 6)]),
                loc("l5", vec![]),
            ],
            initial: "l1".into(),
            edges: vec![
                edge(0, "l1", "l2", "a", vec![c("x", Le, 3)], &[]),
                edge(1, "l2", "l3", "b", vec![c("x", Eq, 3), c("y", Ge, 4)], &[]),
                edge(2, "l1", "l4", "a", vec![c("x", Gt, 2)], &["y"]),
                edge(3, "l4", "l5", "c", vec![c("y", Gt, 1), c("x", Gt, 4)], &[]),
            ],
        })
        .unwrap()
    }

    /// The running example PTA with parameters p2, p3, p4.
    pub fn running_pta() -> Pta {
        use CmpOp::*;
        Pta {
            alphabet: vec!["a".into(), "b".into(), "c".into()],
            clocks: vec!["x".into(), "y".into()],
            parameters: vec!["p2".into(), "p3".into(), "p4".into()],
            locations: vec![
                loc("l1", vec![c("x", Le, 4)]),
                loc("l2", vec![p("x", Le, "p3")]),
                loc("l3", vec![]),
                loc("l4", vec![c("x", Le, 6)]),
                loc("l5", vec![]),
            ],
            initial: "l1".into(),
            edges: vec![
                edge(0, "l1", "l2", "a", vec![p("x", Le, "p3")], &[]),
                edge(1, "l2", "l3", "b", vec![p("x", Eq, "p3"), c("y", Ge, 4)], &[]),
                edge(2, "l1", "l4", "a", vec![p("x", Gt, "p2")], &["y"]),
                edge(3, "l4", "l5", "c", vec![c("y", Gt, 1), p("x", Gt, "p4")], &[]),
            ],
        }
    }

    /// Manual map turning the running example TA into its PTA.
    pub fn running_map() -> ManualMap {
        let e = |edge, atom, p: &str| ManualMapEntry {
            occurrence: Occurrence::Edge { edge, atom },
            param: p.into(),
        };
        ManualMap {
            occurrences: vec![
                e(2, 0, "p2"),
                e(0, 0, "p3"),
                e(1, 0, "p3"),
                ManualMapEntry {
                    occurrence: Occurrence::Invariant {
                        location: "l2".into(),
                        atom: 0,
                    },
                    param: "p3".into(),
                },
                e(3, 1, "p4"),
            ],
        }
    }

    pub fn valuation(pairs: &[(&str, Rational)]) -> ParamValuation {
        ParamValuation::new(pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use crate::rational::{int, ratio};

    #[test]
    fn valuation_of_running_pta_gives_running_ta() {
        let v = valuation(&[("p2", int(2)), ("p3", int(3)), ("p4", int(4))]);
        assert_eq!(running_pta().apply_valuation(&v).unwrap(), running_ta());
    }

    #[test]
    fn parameter_free_valuation_is_identity() {
        let ta = running_ta();
        let out = ta.as_pta().apply_valuation(&ParamValuation::default()).unwrap();
        assert_eq!(out, ta);
    }

    #[test]
    fn rational_values_are_kept_exact() {
        let v = valuation(&[("p2", ratio(1, 2)), ("p3", int(3)), ("p4", int(4))]);
        let ta = running_pta().apply_valuation(&v).unwrap();
        assert_eq!(ta.edges[2].guard.to_string(), "x > 1/2");
        let (scaled, factor) = ta.rescaled_to_integers();
        assert_eq!(factor, int(2));
        assert_eq!(scaled.edges[2].guard.to_string(), "x > 1");
        assert_eq!(scaled.locations[0].invariant.to_string(), "x <= 8");
    }

    #[test]
    fn missing_parameter_is_an_error() {
        let v = valuation(&[("p2", int(2))]);
        assert!(matches!(
            running_pta().apply_valuation(&v),
            Err(ModelError::MissingParameter(p)) if p == "p3"
        ));
    }

    #[test]
    fn json_round_trip_is_exact() {
        let pta = running_pta();
        let text = pta.to_json();
        let back = Pta::from_json(&text).unwrap();
        assert_eq!(back, pta);
        assert_eq!(back.to_json(), text);
        let ta_text = running_ta().to_json();
        assert_eq!(Ta::from_json(&ta_text).unwrap().to_json(), ta_text);
    }

    #[test]
    fn ta_rejects_parameters() {
        assert!(Ta::new(running_pta()).is_err());
        assert!(serde_json::from_str::<Ta>(&running_pta().to_json()).is_err());
    }

    #[test]
    fn recovers_instance_valuation() {
        let v = valuation(&[("p2", int(0)), ("p3", int(3)), ("p4", int(4))]);
        let ta = running_pta().apply_valuation(&v).unwrap();
        assert_eq!(running_pta().match_valuation(ta.as_pta()), Some(v));
    }
}
