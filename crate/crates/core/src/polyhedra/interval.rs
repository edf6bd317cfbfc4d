use std::fmt;

use serde::{Deserialize, Serialize};

use crate::rational::{self, Rational};

/// A possibly unbounded interval of rationals with per-endpoint strictness.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RationalInterval {
    #[serde(with = "opt_rational")]
    pub lower: Option<Rational>,
    pub lower_closed: bool,
    #[serde(with = "opt_rational")]
    pub upper: Option<Rational>,
    pub upper_closed: bool,
}

impl RationalInterval {
    pub fn unbounded() -> Self {
        RationalInterval {
            lower: None,
            lower_closed: false,
            upper: None,
            upper_closed: false,
        }
    }

    pub fn point(v: Rational) -> Self {
        RationalInterval {
            lower: Some(v.clone()),
            lower_closed: true,
            upper: Some(v),
            upper_closed: true,
        }
    }

    pub fn new(lower: Option<Rational>, lower_closed: bool, upper: Option<Rational>, upper_closed: bool) -> Self {
        RationalInterval {
            lower_closed: lower_closed && lower.is_some(),
            upper_closed: upper_closed && upper.is_some(),
            lower,
            upper,
        }
    }

    pub fn closed(lo: Rational, hi: Rational) -> Self {
        Self::new(Some(lo), true, Some(hi), true)
    }

    pub fn is_empty(&self) -> bool {
        match (&self.lower, &self.upper) {
            (Some(l), Some(u)) => l > u || (l == u && !(self.lower_closed && self.upper_closed)),
            _ => false,
        }
    }

    pub fn contains(&self, v: &Rational) -> bool {
        let above = match &self.lower {
            None => true,
            Some(l) if self.lower_closed => v >= l,
            Some(l) => v > l,
        };
        let below = match &self.upper {
            None => true,
            Some(u) if self.upper_closed => v <= u,
            Some(u) => v < u,
        };
        above && below
    }
}

impl fmt::Display for RationalInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.lower {
            Some(l) => write!(f, "{}{}", if self.lower_closed { "[" } else { "(" }, l)?,
            None => write!(f, "(-inf")?,
        }
        match &self.upper {
            Some(u) => write!(f, ", {}{}", u, if self.upper_closed { "]" } else { ")" }),
            None => write!(f, ", inf)"),
        }
    }
}

mod opt_rational {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(q: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
        match q {
            Some(q) => s.serialize_some(&rational::format(q)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rational>, D::Error> {
        Option::<String>::deserialize(d)?
            .map(|t| rational::parse(&t).map_err(serde::de::Error::custom))
            .transpose()
    }
}
