use std::collections::VecDeque;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{initial_state, successor, Reached, SemanticsError, SymbolicState};
use crate::model::Pta;
use crate::polyhedra::{ConvexPolyhedron, PolyError, RationalInterval, Var};

pub const DEFAULT_DEPTH: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EpzgConfig {
    /// Maximum number of discrete transitions from the root.
    pub depth: usize,
    /// Merge nodes with equal location, zone and arrival interval.
    pub merge: bool,
}

impl Default for EpzgConfig {
    fn default() -> Self {
        EpzgConfig {
            depth: DEFAULT_DEPTH,
            merge: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpzgNode {
    pub id: usize,
    pub depth: usize,
    pub state: SymbolicState,
    pub entry_zone: ConvexPolyhedron,
    pub param_constraint: ConvexPolyhedron,
    /// Bounds of `x_abs` over the entry zone.
    pub arrival: RationalInterval,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpzgEdge {
    pub source: usize,
    pub edge: usize,
    pub target: usize,
}

/// Parametric zone graph whose nodes carry their parameter projection and
/// arrival interval.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Epzg {
    pub root: usize,
    pub nodes: Vec<EpzgNode>,
    pub edges: Vec<EpzgEdge>,
    /// Set when exploration stopped early; the graph is then partial.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

impl Epzg {
    pub fn node(&self, id: usize) -> &EpzgNode {
        &self.nodes[id]
    }

    pub fn children(&self, id: usize) -> impl Iterator<Item = &EpzgEdge> {
        self.edges.iter().filter(move |e| e.source == id)
    }

    /// Table of states, parameter constraints and reachable times.
    pub fn table(&self) -> String {
        let rows: Vec<[String; 4]> = self
            .nodes
            .iter()
            .map(|n| {
                let params = n
                    .param_constraint
                    .simplify()
                    .map(|p| p.to_string())
                    .unwrap_or_else(|_| n.param_constraint.to_string());
                let times = match (&n.arrival.lower, &n.arrival.upper) {
                    (Some(l), Some(u)) if l == u => format!("x_abs = {l}"),
                    _ => format!("x_abs in {}", n.arrival),
                };
                [format!("s{}", n.id + 1), n.state.location.clone(), params, times]
            })
            .collect();
        let header = ["state", "location", "parameter constraint", "reachable times"];
        let mut widths = header.map(str::len);
        for r in &rows {
            for (w, c) in widths.iter_mut().zip(r) {
                *w = (*w).max(c.chars().count());
            }
        }
        let mut out = String::new();
        let line = |cells: [&str; 4], out: &mut String| {
            let padded: Vec<String> = cells
                .iter()
                .zip(widths)
                .map(|(c, w)| format!("{c}{}", " ".repeat(w - c.chars().count())))
                .collect();
            let _ = writeln!(out, "{}", padded.join(" | ").trim_end());
        };
        line(header, &mut out);
        let _ = writeln!(
            out,
            "{}",
            widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("-+-")
        );
        for r in &rows {
            line([&r[0], &r[1], &r[2], &r[3]], &mut out);
        }
        out
    }
}

fn annotate(id: usize, depth: usize, reached: Reached) -> Result<EpzgNode, PolyError> {
    let param_constraint = reached.state.zone.project_onto_params()?;
    let arrival = reached.entry.variable_bounds(&Var::AbsClock)?;
    Ok(EpzgNode {
        id,
        depth,
        state: reached.state,
        entry_zone: reached.entry,
        param_constraint,
        arrival,
    })
}

/// Breadth-first unrolling of the parametric zone graph up to
/// `cfg.depth` transitions.
pub fn build_epzg(pta: &Pta, cfg: EpzgConfig) -> Result<Epzg, SemanticsError> {
    let root = annotate(0, 0, initial_state(pta)?)?;
    let mut g = Epzg {
        root: 0,
        nodes: vec![root],
        edges: Vec::new(),
        diagnostic: None,
    };
    let mut queue = VecDeque::from([0usize]);
    while let Some(id) = queue.pop_front() {
        let depth = g.nodes[id].depth;
        if depth >= cfg.depth {
            continue;
        }
        let source = g.nodes[id].state.clone();
        for edge in pta.edges_from(&source.location) {
            let fresh = g.nodes.len();
            let step = successor(pta, &source, edge).and_then(|r| match r {
                Some(r) => Ok(Some(annotate(fresh, depth + 1, r)?)),
                None => Ok(None),
            });
            let node = match step {
                Ok(Some(n)) => n,
                Ok(None) => continue,
                Err(SemanticsError::Poly(e @ PolyError::AtomCapExceeded { .. })) => {
                    log::warn!("zone graph exploration stopped: {e}");
                    g.diagnostic = Some(e.to_string());
                    return Ok(g);
                }
                Err(e) => return Err(e),
            };
            let existing = if cfg.merge {
                find_equal(&g, &node)?
            } else {
                None
            };
            let target = match existing {
                Some(t) => t,
                None => {
                    let t = node.id;
                    g.nodes.push(node);
                    queue.push_back(t);
                    t
                }
            };
            g.edges.push(EpzgEdge {
                source: id,
                edge: edge.id,
                target,
            });
        }
    }
    Ok(g)
}

fn find_equal(g: &Epzg, node: &EpzgNode) -> Result<Option<usize>, PolyError> {
    for n in &g.nodes {
        if n.state.location == node.state.location
            && n.arrival == node.arrival
            && n.state.zone.equivalent(&node.state.zone)?
        {
            return Ok(Some(n.id));
        }
    }
    Ok(None)
}
