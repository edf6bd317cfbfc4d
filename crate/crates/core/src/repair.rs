//! Choosing the valuation of a constraint closest to the initial one.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, HashSet};

use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::model::{ModelError, ParamValuation, Pta, Ta};
use crate::polyhedra::{PolyError, PolyUnion, Var};
use crate::rational::{int, Rational};

pub const DEFAULT_MAX_ITERATIONS: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    #[default]
    Integer,
    /// Multiples of `1/granularity`.
    Rational { granularity: u32 },
}

impl Domain {
    fn granularity(self) -> i64 {
        match self {
            Domain::Integer => 1,
            Domain::Rational { granularity } => i64::from(granularity.max(1)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepairConfig {
    pub domain: Domain,
    /// Per-parameter closed search bounds; missing ones default to
    /// `[0, 2 * max(v_init) + 10]`.
    pub bounds: BTreeMap<String, (Rational, Rational)>,
    pub max_iterations: usize,
}

impl Default for RepairConfig {
    fn default() -> Self {
        RepairConfig {
            domain: Domain::Integer,
            bounds: BTreeMap::new(),
            max_iterations: DEFAULT_MAX_ITERATIONS,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RepairError {
    #[error("the constraint is empty: no valuation to repair with")]
    EmptyConstraint,
    #[error("no valuation of the constraint lies in the search box; widen search box")]
    NothingInBox,
    #[error("parameters of the constraint ({constraint:?}) and of the initial valuation ({initial:?}) differ")]
    ParameterMismatch {
        constraint: Vec<String>,
        initial: Vec<String>,
    },
    #[error("search box bounds of `{0}` do not fit the lattice")]
    BoxTooLarge(String),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// L1 distance between two valuations over the same names.
pub fn l1_distance(a: &BTreeMap<String, Rational>, b: &BTreeMap<String, Rational>) -> Rational {
    a.iter()
        .map(|(k, v)| (v - b.get(k).cloned().unwrap_or_else(Rational::zero)).abs())
        .fold(Rational::zero(), |acc, d| acc + d)
}

struct Lattice<'a> {
    names: Vec<String>,
    g: i64,
    lo: Vec<i64>,
    hi: Vec<i64>,
    target: Vec<Rational>,
    phi: &'a PolyUnion,
}

impl Lattice<'_> {
    fn value(&self, k: i64) -> Rational {
        Rational::new(k.into(), self.g.into())
    }

    fn distance(&self, p: &[i64]) -> Rational {
        p.iter()
            .zip(&self.target)
            .map(|(k, t)| (self.value(*k) - t).abs())
            .fold(Rational::zero(), |acc, d| acc + d)
    }

    fn feasible(&self, p: &[i64]) -> bool {
        let point = self
            .names
            .iter()
            .zip(p)
            .map(|(n, k)| (Var::param(n), self.value(*k)))
            .collect();
        self.phi.contains_point(&point)
    }

    fn valuation(&self, p: &[i64]) -> ParamValuation {
        let map = self.names.iter().cloned().zip(p.iter().map(|k| self.value(*k))).collect();
        ParamValuation::new(map).expect("the box is nonnegative")
    }

    /// Nearest lattice index to `t`, clamped into the box; ties round down.
    fn nearest(&self, i: usize) -> i64 {
        let scaled = &self.target[i] * int(self.g);
        let down = scaled.floor();
        let k = if &scaled - &down > Rational::new(1.into(), 2.into()) {
            down + int(1)
        } else {
            down
        };
        k.to_integer().to_i64().unwrap_or(i64::MAX).clamp(self.lo[i], self.hi[i])
    }

    fn best_first(&self, max_iterations: usize) -> Option<Option<Vec<i64>>> {
        let start: Vec<i64> = (0..self.names.len()).map(|i| self.nearest(i)).collect();
        let mut heap = BinaryHeap::new();
        let mut seen = HashSet::new();
        heap.push(Reverse((self.distance(&start), start.clone())));
        seen.insert(start);
        let mut found: Option<(Rational, Vec<i64>)> = None;
        let mut iterations = 0;
        while let Some(Reverse((d, p))) = heap.pop() {
            if let Some((best, _)) = &found {
                if d > *best {
                    break;
                }
            }
            iterations += 1;
            if iterations > max_iterations {
                return None;
            }
            // neighbors at equal distance are expanded too, so every point at
            // the best distance is compared
            if self.feasible(&p) && found.as_ref().is_none_or(|(_, q)| p < *q) {
                found = Some((d.clone(), p.clone()));
            }
            for i in 0..p.len() {
                for step in [-1, 1] {
                    let k = p[i] + step;
                    if k < self.lo[i] || k > self.hi[i] {
                        continue;
                    }
                    let mut q = p.clone();
                    q[i] = k;
                    if seen.insert(q.clone()) {
                        heap.push(Reverse((self.distance(&q), q)));
                    }
                }
            }
        }
        Some(found.map(|(_, p)| p))
    }

    fn sweep(&self) -> Option<Vec<i64>> {
        let mut best: Option<(Rational, Vec<i64>)> = None;
        let mut p = self.lo.clone();
        loop {
            if self.feasible(&p) {
                let d = self.distance(&p);
                if best.as_ref().is_none_or(|(b, _)| d < *b) {
                    best = Some((d, p.clone()));
                }
            }
            // lexicographic successor, last coordinate fastest
            let mut i = p.len();
            loop {
                if i == 0 {
                    return best.map(|(_, p)| p);
                }
                i -= 1;
                if p[i] < self.hi[i] {
                    p[i] += 1;
                    break;
                }
                p[i] = self.lo[i];
            }
        }
    }
}

fn build<'a>(phi: &'a PolyUnion, v: &ParamValuation, cfg: &RepairConfig) -> Result<Lattice<'a>, RepairError> {
    let names: Vec<String> = phi.space().iter().filter(|x| x.is_param()).map(|x| x.name().to_string()).collect();
    let initial: Vec<String> = v.names().cloned().collect();
    if names != initial {
        return Err(RepairError::ParameterMismatch {
            constraint: names,
            initial,
        });
    }
    let g = cfg.domain.granularity();
    let max = v.iter().map(|(_, x)| x.clone()).max().unwrap_or_else(Rational::zero);
    let default_hi = max * int(2) + int(10);
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    for n in &names {
        let (l, h) = cfg
            .bounds
            .get(n)
            .cloned()
            .unwrap_or_else(|| (Rational::zero(), default_hi.clone()));
        let l = l.max(Rational::zero());
        let to_i64 = |q: Rational| q.to_integer().to_i64().ok_or_else(|| RepairError::BoxTooLarge(n.clone()));
        lo.push(to_i64((l * int(g)).ceil())?);
        hi.push(to_i64((h * int(g)).floor())?);
    }
    let target = names.iter().map(|n| v.get(n).cloned().expect("same names")).collect();
    Ok(Lattice {
        names,
        g,
        lo,
        hi,
        target,
        phi,
    })
}

/// Nearest lattice point of `phi` to `v`, L1 distance, lexicographically
/// smallest among ties. Points on open boundaries of `phi` are infeasible.
pub fn nearest_on_strict_boundaries(phi: &PolyUnion, v: &ParamValuation, cfg: &RepairConfig) -> Option<ParamValuation> {
    let lattice = build(phi, v, cfg).ok()?;
    if lattice.lo.iter().zip(&lattice.hi).any(|(l, h)| l > h) {
        return None;
    }
    let point = match lattice.best_first(cfg.max_iterations) {
        Some(found) => found,
        None => {
            log::warn!("repair search exceeded {} iterations, sweeping the box", cfg.max_iterations);
            lattice.sweep()
        }
    };
    point.map(|p| lattice.valuation(&p))
}

/// The valuation of `phi` closest to `v_init`.
pub fn instantiate(phi: &PolyUnion, v_init: &ParamValuation, cfg: &RepairConfig) -> Result<ParamValuation, RepairError> {
    if phi.is_empty()? {
        return Err(RepairError::EmptyConstraint);
    }
    build(phi, v_init, cfg)?;
    let v = nearest_on_strict_boundaries(phi, v_init, cfg).ok_or(RepairError::NothingInBox)?;
    debug_assert!(phi.contains_point(&v.to_point()));
    Ok(v)
}

/// Repaired valuation and the automaton it instantiates.
pub fn repair(pta: &Pta, phi: &PolyUnion, v_init: &ParamValuation, cfg: &RepairConfig) -> Result<(ParamValuation, Ta), RepairError> {
    let v = instantiate(phi, v_init, cfg)?;
    let ta = pta.apply_valuation(&v)?;
    Ok((v, ta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::valuation;
    use crate::polyhedra::parse_union;
    use crate::rational::ratio;
    use std::collections::BTreeSet;

    fn space(names: &[&str]) -> BTreeSet<Var> {
        names.iter().map(|n| Var::param(n)).collect()
    }

    fn phi(names: &[&str], text: &str) -> PolyUnion {
        parse_union(text, &space(names)).unwrap()
    }

    #[test]
    fn universe_keeps_the_initial_valuation() {
        let v = valuation(&[("p2", int(2)), ("p3", int(3)), ("p4", int(4))]);
        let u = PolyUnion::universe(space(&["p2", "p3", "p4"]));
        assert_eq!(instantiate(&u, &v, &RepairConfig::default()).unwrap(), v);
    }

    #[test]
    fn nearest_closed_boundary() {
        let v = valuation(&[("p", int(3))]);
        let got = instantiate(&phi(&["p"], "p >= 5"), &v, &RepairConfig::default()).unwrap();
        assert_eq!(got, valuation(&[("p", int(5))]));
    }

    #[test]
    fn open_boundaries_on_lattices() {
        let int_cfg = RepairConfig::default();
        let v = valuation(&[("p", int(2))]);
        let half = phi(&["p"], "0 <= p < 1/2");
        assert_eq!(nearest_on_strict_boundaries(&half, &v, &int_cfg), Some(valuation(&[("p", int(0))])));
        let closed = phi(&["p"], "p <= 2");
        assert_eq!(nearest_on_strict_boundaries(&closed, &v, &int_cfg), Some(v.clone()));
        let quarters = RepairConfig {
            domain: Domain::Rational { granularity: 4 },
            ..RepairConfig::default()
        };
        let below = phi(&["p"], "p < 2");
        assert_eq!(nearest_on_strict_boundaries(&below, &v, &quarters), Some(valuation(&[("p", ratio(7, 4))])));
    }

    #[test]
    fn ties_break_lexicographically() {
        let v = valuation(&[("p", int(2)), ("q", int(2))]);
        // (1, 2) and (2, 1) are both at distance 1
        let got = instantiate(&phi(&["p", "q"], "p + q <= 3"), &v, &RepairConfig::default()).unwrap();
        assert_eq!(got, valuation(&[("p", int(1)), ("q", int(2))]));
    }

    #[test]
    fn errors() {
        let v = valuation(&[("p", int(3))]);
        assert!(matches!(
            instantiate(&PolyUnion::bottom(space(&["p"])), &v, &RepairConfig::default()),
            Err(RepairError::EmptyConstraint)
        ));
        assert!(matches!(
            instantiate(&phi(&["p"], "p >= 100"), &v, &RepairConfig::default()),
            Err(RepairError::NothingInBox)
        ));
        assert!(matches!(
            instantiate(&phi(&["q"], "q >= 0"), &v, &RepairConfig::default()),
            Err(RepairError::ParameterMismatch { .. })
        ));
    }

    #[test]
    fn sweep_fallback_agrees_with_search() {
        let v = valuation(&[("p", int(1)), ("q", int(9))]);
        let f = phi(&["p", "q"], "p >= 4 & q <= 2 | p + q >= 17");
        let fast = instantiate(&f, &v, &RepairConfig::default()).unwrap();
        let slow = instantiate(
            &f,
            &v,
            &RepairConfig {
                max_iterations: 1,
                ..RepairConfig::default()
            },
        )
        .unwrap();
        assert_eq!(fast, slow);
        assert_eq!(fast, valuation(&[("p", int(1)), ("q", int(16))]));
    }

    #[test]
    fn off_lattice_initial_valuation() {
        let v = valuation(&[("p", ratio(1, 2)), ("q", int(0))]);
        // (0, 0) and (1, 0) are equally near; q must move as well here
        let got = instantiate(&phi(&["p", "q"], "q >= 1"), &v, &RepairConfig::default()).unwrap();
        assert_eq!(got, valuation(&[("p", int(0)), ("q", int(1))]));
        assert_eq!(l1_distance(v.as_map(), got.as_map()), ratio(3, 2));
    }
}
