//! Exact rational numbers and their textual form.
//!
//! Every quantity in the engine (guard constants, timestamps, parameter
//! values, polyhedron coefficients) is a [`Rational`]. On the wire a rational
//! is a string: `"3"`, `"-1/2"`. Decimal input such as `"2.5"` is accepted
//! and converted exactly.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{de, Deserialize, Deserializer, Serializer};

pub type Rational = num_rational::BigRational;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid rational literal `{0}`")]
pub struct ParseRationalError(pub String);

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Parses `n`, `n/d` or a decimal literal `n.ddd`.
pub fn parse(text: &str) -> Result<Rational, ParseRationalError> {
    let err = || ParseRationalError(text.to_string());
    let s = text.trim();
    if s.is_empty() {
        return Err(err());
    }
    if let Some((num, den)) = s.split_once('/') {
        let num: BigInt = num.trim().parse().map_err(|_| err())?;
        let den: BigInt = den.trim().parse().map_err(|_| err())?;
        if den.is_zero() {
            return Err(err());
        }
        return Ok(Rational::new(num, den));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err());
        }
        let negative = whole.trim_start().starts_with('-');
        let whole: BigInt = match whole {
            "" | "-" | "+" => BigInt::zero(),
            w => w.parse().map_err(|_| err())?,
        };
        let scale = num_traits::pow(BigInt::from(10), frac.len());
        let frac: BigInt = frac.parse().map_err(|_| err())?;
        let frac = Rational::new(frac, scale);
        let whole = Rational::from_integer(whole);
        return Ok(if negative { whole - frac } else { whole + frac });
    }
    let n: BigInt = s.parse().map_err(|_| err())?;
    Ok(Rational::from_integer(n))
}

/// Canonical text: `"3"` for integers, `"num/den"` otherwise.
pub fn format(q: &Rational) -> String {
    q.to_string()
}

/// Rounds to two decimals (half away from zero) for report output.
pub fn format_fixed2(q: &Rational) -> String {
    let scaled = q * int(100);
    let negative = scaled.is_negative();
    let abs = scaled.abs();
    let floor = abs.floor();
    let rounded = if &abs - &floor >= ratio(1, 2) {
        floor + Rational::one()
    } else {
        floor
    };
    let n = rounded.to_integer();
    let (whole, cents) = n.div_rem(&BigInt::from(100));
    let sign = if negative && !n.is_zero() { "-" } else { "" };
    format!("{sign}{whole}.{:02}", cents.to_string().parse::<u32>().unwrap_or(0))
}

pub fn lcm_of_denominators<'a>(values: impl IntoIterator<Item = &'a Rational>) -> BigInt {
    values
        .into_iter()
        .fold(BigInt::one(), |acc, q| acc.lcm(q.denom()))
}

pub fn to_f64(q: &Rational) -> f64 {
    use num_traits::ToPrimitive;
    q.to_f64().unwrap_or(f64::NAN)
}

pub fn serialize<S: Serializer>(q: &Rational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format(q))
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Text(String),
        Int(i64),
    }
    match Raw::deserialize(d)? {
        Raw::Text(t) => parse(&t).map_err(de::Error::custom),
        Raw::Int(n) => Ok(int(n)),
    }
}

/// Serde helpers for a map whose values are rationals.
pub mod map {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use super::Rational;

    #[derive(Serialize, Deserialize)]
    struct Wrapped(#[serde(with = "super")] Rational);

    pub fn serialize<S: Serializer>(m: &BTreeMap<String, Rational>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_map(m.iter().map(|(k, v)| (k, super::format(v))))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<String, Rational>, D::Error> {
        let raw = BTreeMap::<String, Wrapped>::deserialize(d)?;
        Ok(raw.into_iter().map(|(k, Wrapped(v))| (k, v)).collect())
    }
}
