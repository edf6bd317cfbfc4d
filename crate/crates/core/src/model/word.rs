use std::collections::BTreeMap;
use std::fmt;

use num_traits::Signed;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::ModelError;
use crate::polyhedra::{Point, Var};
use crate::rational::{self, Rational};

/// Nonnegative values for parameters, keyed by name.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ParamValuation(BTreeMap<String, Rational>);

impl ParamValuation {
    pub fn new(values: BTreeMap<String, Rational>) -> Result<Self, ModelError> {
        if let Some((p, v)) = values.iter().find(|(_, v)| v.is_negative()) {
            return Err(ModelError::NegativeParameter(p.clone(), v.clone()));
        }
        Ok(ParamValuation(values))
    }

    pub fn get(&self, p: &str) -> Option<&Rational> {
        self.0.get(p)
    }

    pub fn names(&self) -> impl Iterator<Item = &String> {
        self.0.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Rational)> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_map(&self) -> &BTreeMap<String, Rational> {
        &self.0
    }

    /// The valuation as a point of the parameter space.
    pub fn to_point(&self) -> Point {
        self.0.iter().map(|(k, v)| (Var::param(k), v.clone())).collect()
    }

    /// Reads parameter coordinates back from a point.
    pub fn from_point(point: &Point) -> Result<Self, ModelError> {
        Self::new(
            point
                .iter()
                .filter(|(v, _)| v.is_param())
                .map(|(v, q)| (v.name().to_string(), q.clone()))
                .collect(),
        )
    }
}

impl fmt::Display for ParamValuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(k, v)| format!("{k}={v}")).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

impl Serialize for ParamValuation {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        rational::map::serialize(&self.0, s)
    }
}

impl<'de> Deserialize<'de> for ParamValuation {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let m = rational::map::deserialize(d)?;
        ParamValuation::new(m).map_err(serde::de::Error::custom)
    }
}

/// A finite sequence of actions with absolute, nondecreasing timestamps.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TimedWord(Vec<(String, Rational)>);

impl TimedWord {
    pub fn new(steps: Vec<(String, Rational)>) -> Result<Self, ModelError> {
        let mut last = Rational::from_integer(0.into());
        for (i, (_, t)) in steps.iter().enumerate() {
            if *t < last {
                return Err(ModelError::BadTimestamp { step: i });
            }
            last = t.clone();
        }
        Ok(TimedWord(steps))
    }

    pub fn empty() -> Self {
        TimedWord(Vec::new())
    }

    /// Convenience constructor from `(action, timestamp literal)` pairs.
    pub fn parse(steps: &[(&str, &str)]) -> Result<Self, ModelError> {
        let mut out = Vec::with_capacity(steps.len());
        for (i, (a, t)) in steps.iter().enumerate() {
            let t = rational::parse(t).map_err(|_| ModelError::BadTimestamp { step: i })?;
            out.push((a.to_string(), t));
        }
        Self::new(out)
    }

    pub fn steps(&self) -> &[(String, Rational)] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_proper_prefix_of(&self, other: &TimedWord) -> bool {
        self.0.len() < other.0.len() && other.0[..self.0.len()] == self.0[..]
    }

    pub fn prefix(&self, n: usize) -> TimedWord {
        TimedWord(self.0[..n.min(self.0.len())].to_vec())
    }

    /// Appends one step; fails if it would go back in time.
    pub fn extended(&self, action: &str, t: Rational) -> Result<TimedWord, ModelError> {
        let mut steps = self.0.clone();
        steps.push((action.to_string(), t));
        TimedWord::new(steps)
    }
}

impl fmt::Display for TimedWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("ε");
        }
        for (a, t) in &self.0 {
            write!(f, "({a}, {t})")?;
        }
        Ok(())
    }
}

impl Serialize for TimedWord {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.0.iter().map(|(a, t)| (a, rational::format(t))))
    }
}

impl<'de> Deserialize<'de> for TimedWord {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Step(String, #[serde(with = "rational")] Rational);
        let raw = Vec::<Step>::deserialize(d)?;
        TimedWord::new(raw.into_iter().map(|Step(a, t)| (a, t)).collect()).map_err(serde::de::Error::custom)
    }
}
