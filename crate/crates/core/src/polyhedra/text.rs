//! Textual constraint syntax.
//!
//! ```text
//! union  := "true" | "false" | conj ("|" conj)*
//! conj   := chain ("&" chain)*
//! chain  := expr (rel expr)+          rel ∈ < <= = == >= >
//! expr   := ["-"] term (("+" | "-") term)*
//! term   := number ["*" ident] | ident | number ident
//! number := 3 | 1/2 | 2.5
//! ```
//!
//! `a < b <= c` means `a < b & b <= c`. The printer emits one atom per
//! conjunct with positive terms on the left.

use std::collections::BTreeSet;

use num_traits::{One, Signed, Zero};

use super::{ConvexPolyhedron, LinExpr, LinearInequality, PolyUnion, Rel, Var};
use crate::rational::{self, Rational};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("unexpected {found} at offset {offset}, expected {expected}")]
    Unexpected {
        offset: usize,
        found: String,
        expected: &'static str,
    },
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { offset: usize, name: String },
    #[error("invalid number `{text}` at offset {offset}")]
    BadNumber { offset: usize, text: String },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(String),
    Ident(String),
    Rel(RelTok),
    Plus,
    Minus,
    Star,
    And,
    Or,
    End,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum RelTok {
    Lt,
    Le,
    Eq,
    Ge,
    Gt,
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Num(n) => format!("number `{n}`"),
        Tok::Ident(i) => format!("identifier `{i}`"),
        Tok::Rel(_) => "comparison".into(),
        Tok::Plus => "`+`".into(),
        Tok::Minus => "`-`".into(),
        Tok::Star => "`*`".into(),
        Tok::And => "`&`".into(),
        Tok::Or => "`|`".into(),
        Tok::End => "end of input".into(),
    }
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let peek = |i: usize| chars.get(i).map(|(_, c)| *c);
    while i < chars.len() {
        let (off, c) = chars[i];
        let single = |t: Tok| (off, t);
        match c {
            c if c.is_whitespace() => i += 1,
            '0'..='9' | '.' => {
                let start = i;
                while matches!(peek(i), Some(c) if c.is_ascii_digit() || c == '.') {
                    i += 1;
                }
                // fraction literal: digits '/' digits
                if peek(i) == Some('/') && matches!(peek(i + 1), Some(c) if c.is_ascii_digit()) {
                    i += 1;
                    while matches!(peek(i), Some(c) if c.is_ascii_digit()) {
                        i += 1;
                    }
                }
                let s: String = chars[start..i].iter().map(|(_, c)| c).collect();
                out.push(single(Tok::Num(s)));
            }
            c if c.is_alphabetic() || c == '_' => {
                let start = i;
                while matches!(peek(i), Some(c) if c.is_alphanumeric() || c == '_') {
                    i += 1;
                }
                let s: String = chars[start..i].iter().map(|(_, c)| c).collect();
                out.push(single(Tok::Ident(s)));
            }
            '<' | '>' | '=' | '≤' | '≥' => {
                let next_eq = peek(i + 1) == Some('=');
                let (rel, len) = match (c, next_eq) {
                    ('<', true) => (RelTok::Le, 2),
                    ('<', false) => (RelTok::Lt, 1),
                    ('>', true) => (RelTok::Ge, 2),
                    ('>', false) => (RelTok::Gt, 1),
                    ('=', true) => (RelTok::Eq, 2),
                    ('=', false) => (RelTok::Eq, 1),
                    ('≤', _) => (RelTok::Le, 1),
                    _ => (RelTok::Ge, 1),
                };
                out.push(single(Tok::Rel(rel)));
                i += len;
            }
            '+' => {
                out.push(single(Tok::Plus));
                i += 1;
            }
            '-' => {
                out.push(single(Tok::Minus));
                i += 1;
            }
            '*' => {
                out.push(single(Tok::Star));
                i += 1;
            }
            '&' | '∧' => {
                out.push(single(Tok::And));
                i += if c == '&' && peek(i + 1) == Some('&') { 2 } else { 1 };
            }
            '|' | '∨' => {
                out.push(single(Tok::Or));
                i += if c == '|' && peek(i + 1) == Some('|') { 2 } else { 1 };
            }
            other => {
                return Err(ParseError::Unexpected {
                    offset: off,
                    found: format!("character `{other}`"),
                    expected: "a constraint",
                })
            }
        }
    }
    out.push((text.len(), Tok::End));
    Ok(out)
}

struct Parser<'a, F> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    resolve: &'a F,
}

impl<F: Fn(&str) -> Option<Var>> Parser<'_, F> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].1
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].1.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self, expected: &'static str) -> ParseError {
        ParseError::Unexpected {
            offset: self.offset(),
            found: describe(self.peek()),
            expected,
        }
    }

    fn number(&self, text: &str) -> Result<Rational, ParseError> {
        rational::parse(text).map_err(|_| ParseError::BadNumber {
            offset: self.offset(),
            text: text.to_string(),
        })
    }

    fn ident(&mut self) -> Result<Var, ParseError> {
        let offset = self.offset();
        match self.bump() {
            Tok::Ident(name) => (self.resolve)(&name).ok_or(ParseError::UnknownIdentifier { offset, name }),
            _ => {
                self.pos -= 1;
                Err(self.unexpected("an identifier"))
            }
        }
    }

    fn term(&mut self) -> Result<LinExpr, ParseError> {
        match self.peek().clone() {
            Tok::Num(n) => {
                let k = self.number(&n)?;
                self.bump();
                match self.peek() {
                    Tok::Star => {
                        self.bump();
                        Ok(LinExpr::term(k, self.ident()?))
                    }
                    Tok::Ident(_) => Ok(LinExpr::term(k, self.ident()?)),
                    _ => Ok(LinExpr::constant(k)),
                }
            }
            Tok::Ident(_) => Ok(LinExpr::var(self.ident()?)),
            _ => Err(self.unexpected("a number or identifier")),
        }
    }

    fn expr(&mut self) -> Result<LinExpr, ParseError> {
        let negate_first = if *self.peek() == Tok::Minus {
            self.bump();
            true
        } else {
            false
        };
        let first = self.term()?;
        let mut acc = if negate_first {
            first.scaled(&-Rational::one())
        } else {
            first
        };
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    acc = acc.plus(&self.term()?);
                }
                Tok::Minus => {
                    self.bump();
                    acc = acc.minus(&self.term()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn chain(&mut self, out: &mut Vec<LinearInequality>) -> Result<(), ParseError> {
        let mut left = self.expr()?;
        let mut seen = false;
        while let Tok::Rel(r) = *self.peek() {
            self.bump();
            let right = self.expr()?;
            out.push(match r {
                RelTok::Lt => left.lt(right.clone()),
                RelTok::Le => left.le(right.clone()),
                RelTok::Eq => left.eq(right.clone()),
                RelTok::Ge => left.ge(right.clone()),
                RelTok::Gt => left.gt(right.clone()),
            });
            left = right;
            seen = true;
        }
        if seen {
            Ok(())
        } else {
            Err(self.unexpected("a comparison"))
        }
    }

    fn conj(&mut self) -> Result<Option<Vec<LinearInequality>>, ParseError> {
        let mut atoms = Vec::new();
        let mut is_false = false;
        loop {
            match self.peek() {
                Tok::Ident(w) if w == "true" => {
                    self.bump();
                }
                Tok::Ident(w) if w == "false" => {
                    self.bump();
                    is_false = true;
                }
                _ => self.chain(&mut atoms)?,
            }
            if *self.peek() == Tok::And {
                self.bump();
            } else {
                return Ok((!is_false).then_some(atoms));
            }
        }
    }
}

/// Parses a constraint, resolving identifiers by name against `space`.
pub fn parse_union(text: &str, space: &BTreeSet<Var>) -> Result<PolyUnion, ParseError> {
    let resolve = |name: &str| space.iter().find(|v| v.name() == name).cloned();
    parse_union_with(text, space.clone(), &resolve)
}

/// Parses a constraint with a caller-supplied identifier resolver. Every
/// resolved variable must belong to `space`.
pub fn parse_union_with<F: Fn(&str) -> Option<Var>>(
    text: &str,
    space: BTreeSet<Var>,
    resolve: &F,
) -> Result<PolyUnion, ParseError> {
    let checked = |name: &str| resolve(name).filter(|v| space.contains(v));
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
        resolve: &checked,
    };
    let mut disjuncts = Vec::new();
    loop {
        if let Some(atoms) = p.conj()? {
            let poly = ConvexPolyhedron::new(space.clone(), atoms).expect("resolver stays inside the space");
            disjuncts.push(poly);
        }
        match p.peek() {
            Tok::Or => {
                p.bump();
            }
            Tok::End => break,
            _ => return Err(p.unexpected("`&`, `|` or end of input")),
        }
    }
    Ok(PolyUnion::from_disjuncts_unchecked(space, disjuncts))
}

fn format_terms(terms: &[(Var, Rational)]) -> String {
    let mut s = String::new();
    for (i, (v, c)) in terms.iter().enumerate() {
        if i > 0 {
            s.push_str(" + ");
        }
        if c.is_one() {
            s.push_str(v.name());
        } else {
            s.push_str(&format!("{c}*{v}"));
        }
    }
    s
}

fn format_side(terms: &[(Var, Rational)], constant: &Rational) -> String {
    if terms.is_empty() {
        return rational::format(constant);
    }
    let t = format_terms(terms);
    if constant.is_zero() {
        t
    } else if constant.is_positive() {
        format!("{t} + {constant}")
    } else {
        format!("{t} - {}", -constant)
    }
}

pub(crate) fn format_atom(a: &LinearInequality) -> String {
    let pos: Vec<(Var, Rational)> = a
        .coeffs
        .iter()
        .filter(|(_, c)| c.is_positive())
        .map(|(v, c)| (v.clone(), c.clone()))
        .collect();
    let neg: Vec<(Var, Rational)> = a
        .coeffs
        .iter()
        .filter(|(_, c)| c.is_negative())
        .map(|(v, c)| (v.clone(), -c))
        .collect();
    let k = -&a.constant;
    // Σpos ⋈ Σneg + k
    if pos.is_empty() {
        // 0 ⋈ Σneg + k  ⇔  Σneg ⋈' -k
        let rel = match a.rel {
            Rel::Lt => ">",
            Rel::Le => ">=",
            Rel::Eq => "=",
        };
        return format!("{} {rel} {}", format_terms(&neg), rational::format(&-k));
    }
    format!("{} {} {}", format_terms(&pos), a.rel.symbol(), format_side(&neg, &k))
}

pub(crate) fn format_poly(p: &ConvexPolyhedron) -> String {
    if p.is_trivially_empty() {
        return "false".into();
    }
    if p.atoms().is_empty() {
        return "true".into();
    }
    p.atoms().iter().map(format_atom).collect::<Vec<_>>().join(" & ")
}

pub(crate) fn format_union(u: &PolyUnion) -> String {
    if u.disjuncts().is_empty() {
        return "false".into();
    }
    if u.disjuncts().iter().any(|d| d.is_universe()) {
        return "true".into();
    }
    u.disjuncts().iter().map(format_poly).collect::<Vec<_>>().join(" | ")
}
