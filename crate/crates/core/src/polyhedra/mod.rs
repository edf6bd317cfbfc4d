//! Exact convex polyhedra over clocks and parameters.
//!
//! A [`ConvexPolyhedron`] is a conjunction of linear atoms `Σ cᵢ·vᵢ + k ⋈ 0`
//! with `⋈ ∈ {<, ≤, =}` over rational coefficients. All operations are done
//! by Fourier–Motzkin elimination with strictness tracking, so results are
//! exact, including open boundaries. A [`PolyUnion`] is a finite disjunction
//! of polyhedra over one variable space.

mod convex;
mod interval;
mod text;
mod union;

use std::collections::{BTreeMap, BTreeSet};
use std::cell::Cell;
use std::fmt;
use std::sync::Arc;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::rational::{self, Rational};

pub use convex::ConvexPolyhedron;
pub use interval::RationalInterval;
pub use text::{parse_union, ParseError};
pub use union::{PolyUnion, UnionJson};

/// Name reserved for the never-reset clock measuring absolute time.
pub const ABS_CLOCK_NAME: &str = "x_abs";

pub const DEFAULT_ATOM_CAP: usize = 10_000;

thread_local! {
    static ATOM_CAP: Cell<usize> = const { Cell::new(DEFAULT_ATOM_CAP) };
}

/// Sets, for the calling thread, the maximum number of atoms a single
/// elimination step may produce.
pub fn set_atom_cap(cap: usize) {
    ATOM_CAP.with(|c| c.set(cap.max(1)));
}

pub fn atom_cap() -> usize {
    ATOM_CAP.with(Cell::get)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PolyError {
    #[error("variable-set mismatch between operands")]
    SpaceMismatch,
    #[error("variable `{0}` is not part of the polyhedron's space")]
    UnknownVariable(Var),
    #[error("`{0}` is not a clock")]
    NotAClock(Var),
    #[error("operation requires a nonempty polyhedron")]
    Empty,
    #[error("Fourier-Motzkin elimination of `{var}` would produce {atoms} atoms (cap {cap})")]
    AtomCapExceeded { var: Var, atoms: usize, cap: usize },
}

/// A variable of the constraint space.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    Clock(Arc<str>),
    /// The extra clock that is never reset and measures absolute time.
    AbsClock,
    Param(Arc<str>),
    /// Scratch variable used while computing time elapsing.
    Delay,
}

impl Var {
    pub fn clock(name: &str) -> Self {
        if name == ABS_CLOCK_NAME {
            Var::AbsClock
        } else {
            Var::Clock(Arc::from(name))
        }
    }

    pub fn param(name: &str) -> Self {
        Var::Param(Arc::from(name))
    }

    pub fn is_clock(&self) -> bool {
        matches!(self, Var::Clock(_) | Var::AbsClock)
    }

    pub fn is_param(&self) -> bool {
        matches!(self, Var::Param(_))
    }

    pub fn name(&self) -> &str {
        match self {
            Var::Clock(n) | Var::Param(n) => n,
            Var::AbsClock => ABS_CLOCK_NAME,
            Var::Delay => "_delay",
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for Var {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Var::Clock(n) => s.serialize_str(&format!("clock:{n}")),
            Var::Param(n) => s.serialize_str(&format!("param:{n}")),
            Var::AbsClock => s.serialize_str(ABS_CLOCK_NAME),
            Var::Delay => Err(serde::ser::Error::custom("scratch variable cannot be serialized")),
        }
    }
}

impl<'de> Deserialize<'de> for Var {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        if s == ABS_CLOCK_NAME {
            Ok(Var::AbsClock)
        } else if let Some(n) = s.strip_prefix("clock:") {
            Ok(Var::clock(n))
        } else if let Some(n) = s.strip_prefix("param:") {
            Ok(Var::param(n))
        } else {
            Err(serde::de::Error::custom(format!("bad variable tag `{s}`")))
        }
    }
}

/// Relation of an atom against zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rel {
    Lt,
    Le,
    Eq,
}

impl Rel {
    fn holds(self, value: &Rational) -> bool {
        match self {
            Rel::Lt => value.is_negative(),
            Rel::Le => !value.is_positive(),
            Rel::Eq => value.is_zero(),
        }
    }

    /// Relation of a combination of two inequalities.
    fn combine(self, other: Rel) -> Rel {
        if self == Rel::Lt || other == Rel::Lt {
            Rel::Lt
        } else {
            Rel::Le
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Rel::Lt => "<",
            Rel::Le => "<=",
            Rel::Eq => "=",
        }
    }
}

/// A linear expression `Σ cᵢ·vᵢ + k`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LinExpr {
    pub coeffs: BTreeMap<Var, Rational>,
    pub constant: Rational,
}

impl LinExpr {
    pub fn constant(k: Rational) -> Self {
        LinExpr {
            coeffs: BTreeMap::new(),
            constant: k,
        }
    }

    pub fn var(v: Var) -> Self {
        Self::term(Rational::one(), v)
    }

    pub fn term(c: Rational, v: Var) -> Self {
        let mut e = LinExpr::default();
        e.add_term(c, v);
        e
    }

    pub fn add_term(&mut self, c: Rational, v: Var) {
        let entry = self.coeffs.entry(v).or_insert_with(Rational::zero);
        *entry += c;
        if entry.is_zero() {
            self.coeffs.retain(|_, c| !c.is_zero());
        }
    }

    pub fn plus(mut self, other: &LinExpr) -> Self {
        for (v, c) in &other.coeffs {
            self.add_term(c.clone(), v.clone());
        }
        self.constant += &other.constant;
        self
    }

    pub fn minus(self, other: &LinExpr) -> Self {
        self.plus(&other.scaled(&-Rational::one()))
    }

    pub fn scaled(&self, k: &Rational) -> Self {
        if k.is_zero() {
            return LinExpr::default();
        }
        LinExpr {
            coeffs: self.coeffs.iter().map(|(v, c)| (v.clone(), c * k)).collect(),
            constant: &self.constant * k,
        }
    }

    pub fn lt(self, rhs: LinExpr) -> LinearInequality {
        LinearInequality::from_expr(self.minus(&rhs), Rel::Lt)
    }

    pub fn le(self, rhs: LinExpr) -> LinearInequality {
        LinearInequality::from_expr(self.minus(&rhs), Rel::Le)
    }

    pub fn eq(self, rhs: LinExpr) -> LinearInequality {
        LinearInequality::from_expr(self.minus(&rhs), Rel::Eq)
    }

    pub fn ge(self, rhs: LinExpr) -> LinearInequality {
        rhs.le(self)
    }

    pub fn gt(self, rhs: LinExpr) -> LinearInequality {
        rhs.lt(self)
    }

    pub fn eval(&self, point: &BTreeMap<Var, Rational>) -> Option<Rational> {
        let mut acc = self.constant.clone();
        for (v, c) in &self.coeffs {
            acc += c * point.get(v)?;
        }
        Some(acc)
    }
}

impl From<i64> for LinExpr {
    fn from(n: i64) -> Self {
        LinExpr::constant(rational::int(n))
    }
}

impl From<Var> for LinExpr {
    fn from(v: Var) -> Self {
        LinExpr::var(v)
    }
}

/// An atom `Σ cᵢ·vᵢ + constant ⋈ 0`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinearInequality {
    pub coeffs: BTreeMap<Var, Rational>,
    pub constant: Rational,
    pub rel: Rel,
}

impl LinearInequality {
    pub fn from_expr(e: LinExpr, rel: Rel) -> Self {
        LinearInequality {
            coeffs: e.coeffs,
            constant: e.constant,
            rel,
        }
    }

    pub fn coeff(&self, v: &Var) -> Rational {
        self.coeffs.get(v).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn vars(&self) -> impl Iterator<Item = &Var> {
        self.coeffs.keys()
    }

    pub fn lhs(&self) -> LinExpr {
        LinExpr {
            coeffs: self.coeffs.clone(),
            constant: self.constant.clone(),
        }
    }

    /// Truth value when the atom mentions no variable.
    pub fn constant_truth(&self) -> Option<bool> {
        self.coeffs
            .is_empty()
            .then(|| self.rel.holds(&self.constant))
    }

    /// Evaluates the atom; `None` if the point misses one of its variables.
    pub fn holds(&self, point: &BTreeMap<Var, Rational>) -> Option<bool> {
        Some(self.rel.holds(&self.lhs().eval(point)?))
    }

    /// The complement as a list of disjoint atoms.
    pub fn complement(&self) -> Vec<LinearInequality> {
        let neg = self.lhs().scaled(&-Rational::one());
        match self.rel {
            Rel::Le => vec![LinearInequality::from_expr(neg, Rel::Lt)],
            Rel::Lt => vec![LinearInequality::from_expr(neg, Rel::Le)],
            Rel::Eq => vec![
                LinearInequality::from_expr(self.lhs(), Rel::Lt),
                LinearInequality::from_expr(neg, Rel::Lt),
            ],
        }
    }
}

#[derive(Serialize, Deserialize)]
struct AtomJson {
    coeffs: BTreeMap<Var, String>,
    constant: String,
    rel: String,
}

impl Serialize for LinearInequality {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        AtomJson {
            coeffs: self
                .coeffs
                .iter()
                .map(|(v, c)| (v.clone(), rational::format(c)))
                .collect(),
            constant: rational::format(&self.constant),
            rel: self.rel.symbol().to_string(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for LinearInequality {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let raw = AtomJson::deserialize(d)?;
        let mut coeffs = BTreeMap::new();
        for (v, c) in raw.coeffs {
            let c = rational::parse(&c).map_err(D::Error::custom)?;
            if !c.is_zero() {
                coeffs.insert(v, c);
            }
        }
        let rel = match raw.rel.as_str() {
            "<" => Rel::Lt,
            "<=" => Rel::Le,
            "=" => Rel::Eq,
            other => return Err(D::Error::custom(format!("bad relation `{other}`"))),
        };
        Ok(LinearInequality {
            coeffs,
            constant: rational::parse(&raw.constant).map_err(D::Error::custom)?,
            rel,
        })
    }
}

pub type Point = BTreeMap<Var, Rational>;

pub(crate) fn space_of<'a>(atoms: impl IntoIterator<Item = &'a LinearInequality>) -> BTreeSet<Var> {
    atoms
        .into_iter()
        .flat_map(|a| a.coeffs.keys().cloned())
        .collect()
}
