use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::{AtomicGuard, ModelError, ParamValuation, Pta, Ta};
use crate::rational::Rational;

/// Position of one constant in a guard or invariant.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Occurrence {
    Edge { edge: usize, atom: usize },
    Invariant { location: String, atom: usize },
}

impl fmt::Display for Occurrence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Occurrence::Edge { edge, atom } => write!(f, "edge {edge} atom {atom}"),
            Occurrence::Invariant { location, atom } => write!(f, "invariant of `{location}` atom {atom}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManualMapEntry {
    #[serde(flatten)]
    pub occurrence: Occurrence,
    pub param: String,
}

/// User-chosen occurrence-to-parameter assignment. Parameters are declared
/// in order of first appearance.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManualMap {
    pub occurrences: Vec<ManualMapEntry>,
}

/// How a location's invariant constant takes part in shared abstraction.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum InvariantMode {
    /// Joins the parameter of an equal constant on an edge entering or
    /// leaving the location; otherwise stays a constant.
    #[default]
    JoinOnly,
    /// As `JoinOnly`, but an unmatched invariant constant gets its own
    /// parameter.
    Independent,
    /// Invariants are never parametrized.
    Keep,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AbstractionStrategy {
    /// One parameter per constant occurrence.
    All,
    /// Equal constants on edges around one location share a parameter.
    SharedPerLocation(InvariantMode),
    Manual(ManualMap),
}

struct Site {
    occurrence: Occurrence,
    value: Rational,
    /// Locations the occurrence is attached to.
    touches: Vec<String>,
}

fn sites(ta: &Pta) -> Vec<Site> {
    let mut out = Vec::new();
    for e in &ta.edges {
        for (i, a) in e.guard.atoms.iter().enumerate() {
            out.push(Site {
                occurrence: Occurrence::Edge { edge: e.id, atom: i },
                value: a.constant.clone(),
                touches: vec![e.source.clone(), e.target.clone()],
            });
        }
    }
    for l in &ta.locations {
        for (i, a) in l.invariant.atoms.iter().enumerate() {
            out.push(Site {
                occurrence: Occurrence::Invariant {
                    location: l.name.clone(),
                    atom: i,
                },
                value: a.constant.clone(),
                touches: vec![l.name.clone()],
            });
        }
    }
    out
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }

    fn find(&mut self, i: usize) -> usize {
        let mut r = i;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut i = i;
        while self.0[i] != r {
            let next = self.0[i];
            self.0[i] = r;
            i = next;
        }
        r
    }

    /// The smaller index stays the root, so groups are ordered by first member.
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            self.0[hi] = lo;
        }
    }
}

fn shares_location(a: &Site, b: &Site) -> bool {
    a.touches.iter().any(|l| b.touches.contains(l))
}

/// Group label per site; `None` keeps the constant.
fn group_sites(sites: &[Site], strategy: &AbstractionStrategy) -> Vec<Option<usize>> {
    let n = sites.len();
    let is_edge = |s: &Site| matches!(s.occurrence, Occurrence::Edge { .. });
    let eligible = |s: &Site| !s.value.is_negative();
    match strategy {
        AbstractionStrategy::All => (0..n).map(|i| eligible(&sites[i]).then_some(i)).collect(),
        AbstractionStrategy::SharedPerLocation(mode) => {
            let mut uf = UnionFind::new(n);
            let mut active = vec![false; n];
            for i in 0..n {
                if !eligible(&sites[i]) || !is_edge(&sites[i]) {
                    continue;
                }
                active[i] = true;
                for j in 0..i {
                    if active[j] && sites[j].value == sites[i].value && shares_location(&sites[i], &sites[j]) {
                        uf.union(i, j);
                    }
                }
            }
            for i in 0..n {
                if is_edge(&sites[i]) || !eligible(&sites[i]) || *mode == InvariantMode::Keep {
                    continue;
                }
                let mut joined = false;
                for j in 0..n {
                    if active[j]
                        && is_edge(&sites[j])
                        && sites[j].value == sites[i].value
                        && shares_location(&sites[i], &sites[j])
                    {
                        uf.union(i, j);
                        joined = true;
                    }
                }
                active[i] = joined || *mode == InvariantMode::Independent;
            }
            (0..n).map(|i| active[i].then(|| uf.find(i))).collect()
        }
        AbstractionStrategy::Manual(_) => unreachable!("manual maps are resolved separately"),
    }
}

fn rewrite(pta: &mut Pta, occ: &Occurrence, param: &str) {
    let atom: &mut AtomicGuard = match occ {
        Occurrence::Edge { edge, atom } => {
            &mut pta.edges.iter_mut().find(|e| e.id == *edge).unwrap().guard.atoms[*atom]
        }
        Occurrence::Invariant { location, atom } => {
            &mut pta
                .locations
                .iter_mut()
                .find(|l| l.name == *location)
                .unwrap()
                .invariant
                .atoms[*atom]
        }
    };
    atom.coeffs = [(param.to_string(), Rational::one())].into_iter().collect();
    atom.constant = Rational::zero();
}

fn fresh_names(ta: &Pta, count: usize) -> Vec<String> {
    let mut out = Vec::with_capacity(count);
    let mut i = 1;
    while out.len() < count {
        let name = format!("p{i}");
        if !ta.clocks.contains(&name) {
            out.push(name);
        }
        i += 1;
    }
    out
}

/// Replaces selected constants of `ta` by parameters. The returned valuation
/// maps the automaton back onto `ta`.
pub fn abstract_guards(ta: &Ta, strategy: &AbstractionStrategy) -> Result<(Pta, ParamValuation), ModelError> {
    let sites = sites(ta.as_pta());
    // (parameter, occurrences, value) in declaration order
    let mut plan: Vec<(String, Vec<Occurrence>, Rational)> = Vec::new();
    match strategy {
        AbstractionStrategy::Manual(map) => {
            for entry in &map.occurrences {
                let site = sites
                    .iter()
                    .find(|s| s.occurrence == entry.occurrence)
                    .ok_or_else(|| ModelError::UnknownOccurrence(entry.occurrence.clone()))?;
                if site.value.is_negative() {
                    return Err(ModelError::NegativeOccurrence(entry.occurrence.clone()));
                }
                match plan.iter_mut().find(|(p, _, _)| *p == entry.param) {
                    Some((_, occs, value)) => {
                        if *value != site.value {
                            return Err(ModelError::ConflictingConstants {
                                param: entry.param.clone(),
                                first: value.clone(),
                                second: site.value.clone(),
                            });
                        }
                        occs.push(entry.occurrence.clone());
                    }
                    None => plan.push((entry.param.clone(), vec![entry.occurrence.clone()], site.value.clone())),
                }
            }
        }
        _ => {
            let groups = group_sites(&sites, strategy);
            let mut order: Vec<usize> = Vec::new();
            let mut members: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
            for (i, g) in groups.iter().enumerate() {
                if let Some(g) = g {
                    if !members.contains_key(g) {
                        order.push(*g);
                    }
                    members.entry(*g).or_default().push(i);
                }
            }
            let names = fresh_names(ta.as_pta(), order.len());
            for (g, name) in order.iter().zip(names) {
                let idx = &members[g];
                plan.push((
                    name,
                    idx.iter().map(|&i| sites[i].occurrence.clone()).collect(),
                    sites[idx[0]].value.clone(),
                ));
            }
        }
    }
    let mut pta = ta.as_pta().clone();
    let mut values = BTreeMap::new();
    for (name, occs, value) in &plan {
        for occ in occs {
            rewrite(&mut pta, occ, name);
        }
        pta.parameters.push(name.clone());
        values.insert(name.clone(), value.clone());
    }
    Ok((pta, ParamValuation::new(values)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::{running_map, running_pta, running_ta};
    use crate::rational::int;

    #[test]
    fn manual_map_reproduces_parametric_example() {
        let (pta, v) = abstract_guards(&running_ta(), &AbstractionStrategy::Manual(running_map())).unwrap();
        assert_eq!(pta, running_pta());
        assert_eq!(v.get("p2"), Some(&int(2)));
        assert_eq!(v.get("p3"), Some(&int(3)));
        assert_eq!(v.get("p4"), Some(&int(4)));
    }

    #[test]
    fn all_constants_become_parameters() {
        let (pta, v) = abstract_guards(&running_ta(), &AbstractionStrategy::All).unwrap();
        // x<=4, x<=3, x<=6 invariants and six edge constants
        assert_eq!(pta.parameters.len(), 9);
        assert_eq!(pta.apply_valuation(&v).unwrap(), running_ta());
    }

    #[test]
    fn shared_per_location_groups_equal_constants() {
        let strategy = AbstractionStrategy::SharedPerLocation(InvariantMode::JoinOnly);
        let (pta, v) = abstract_guards(&running_ta(), &strategy).unwrap();
        assert_eq!(pta.parameters, vec!["p1", "p2", "p3", "p4", "p5"]);
        let values: Vec<Rational> = pta.parameters.iter().map(|p| v.get(p).unwrap().clone()).collect();
        assert_eq!(values, vec![int(3), int(4), int(2), int(1), int(4)]);
        // e1, e2's x atom and l2's invariant share p1
        assert_eq!(pta.edges[0].guard.to_string(), "x <= p1");
        assert_eq!(pta.edges[1].guard.to_string(), "x = p1 & y >= p2");
        assert_eq!(pta.locations[1].invariant.to_string(), "x <= p1");
        assert_eq!(pta.locations[0].invariant.to_string(), "x <= 4");
        assert_eq!(pta.apply_valuation(&v).unwrap(), running_ta());
    }

    #[test]
    fn invariant_modes() {
        let indep = AbstractionStrategy::SharedPerLocation(InvariantMode::Independent);
        let (pta, _) = abstract_guards(&running_ta(), &indep).unwrap();
        assert_eq!(pta.parameters.len(), 7);
        let keep = AbstractionStrategy::SharedPerLocation(InvariantMode::Keep);
        let (pta, v) = abstract_guards(&running_ta(), &keep).unwrap();
        assert_eq!(pta.parameters.len(), 5);
        assert_eq!(pta.locations[1].invariant.to_string(), "x <= 3");
        assert_eq!(pta.apply_valuation(&v).unwrap(), running_ta());
    }

    #[test]
    fn guard_free_automaton_is_unchanged() {
        let mut bare = running_ta().into_pta();
        bare.edges.iter_mut().for_each(|e| e.guard.atoms.clear());
        bare.locations.iter_mut().for_each(|l| l.invariant.atoms.clear());
        let ta = Ta::new(bare.clone()).unwrap();
        for s in [AbstractionStrategy::All, AbstractionStrategy::SharedPerLocation(InvariantMode::JoinOnly)] {
            let (pta, v) = abstract_guards(&ta, &s).unwrap();
            assert_eq!(pta, bare);
            assert!(v.is_empty());
        }
    }

    #[test]
    fn manual_map_errors() {
        let bad = ManualMap {
            occurrences: vec![ManualMapEntry {
                occurrence: Occurrence::Edge { edge: 9, atom: 0 },
                param: "p".into(),
            }],
        };
        assert!(matches!(
            abstract_guards(&running_ta(), &AbstractionStrategy::Manual(bad)),
            Err(ModelError::UnknownOccurrence(_))
        ));
        let clash = ManualMap {
            occurrences: vec![
                ManualMapEntry {
                    occurrence: Occurrence::Edge { edge: 0, atom: 0 },
                    param: "p".into(),
                },
                ManualMapEntry {
                    occurrence: Occurrence::Edge { edge: 2, atom: 0 },
                    param: "p".into(),
                },
            ],
        };
        assert!(matches!(
            abstract_guards(&running_ta(), &AbstractionStrategy::Manual(clash)),
            Err(ModelError::ConflictingConstants { .. })
        ));
    }

    #[test]
    fn map_json_form() {
        let text = serde_json::to_string(&running_map()).unwrap();
        assert!(text.contains(r#"{"edge":2,"atom":0,"param":"p2"}"#));
        assert!(text.contains(r#"{"location":"l2","atom":0,"param":"p3"}"#));
        let back: ManualMap = serde_json::from_str(&text).unwrap();
        assert_eq!(back, running_map());
    }
}
