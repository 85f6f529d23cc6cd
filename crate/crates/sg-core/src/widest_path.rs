//! Weighted reachability graphs and single-target widest paths.
//!
//! The width of a path is the minimum weight along it; the widest-path value
//! of a vertex is the maximum width over all paths from it to the target.
//! [`local_propagation`] turns a restricted MDP plus a candidate upper bound
//! into such a graph — each edge carries the best one-step upper bound any
//! action gives for that move — and [`widest_path_widths`] then computes, in
//! one Dijkstra-style pass, upper bounds that already account for the whole
//! graph structure. Crucially a cycle cannot sustain an inflated bound: any
//! path to the target must eventually leave the cycle through a real exit,
//! and its width is capped by that exit's weight.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};
use std::fmt::Write as _;

use thiserror::Error;

use crate::bellman::{action_value, ValueVector};
use crate::model::StateId;
use crate::player_reduction::RestrictedMdp;

/// A directed edge with a weight in [0,1].
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct Edge {
    pub from: StateId,
    pub to: StateId,
    pub weight: f64,
}

/// A malformed weighted graph.
#[derive(Clone, PartialEq, Error, Debug)]
pub enum GraphError {
    #[error("vertex {0} is out of range for a graph on {1} vertices")]
    InvalidVertex(usize, usize),
    #[error("edge ({0}, {1}) has weight {2}, outside [0,1]")]
    InvalidWeight(usize, usize, f64),
    #[error("edge ({0}, {1}) appears more than once")]
    DuplicateEdge(usize, usize),
}

/// A directed graph with edge weights in [0,1] and a distinguished target
/// vertex. Edges are stored sorted by (from, to) and are unique.
#[derive(Clone, PartialEq, Debug)]
pub struct WeightedGraph {
    num_vertices: usize,
    target: StateId,
    edges: Vec<Edge>,
}

impl WeightedGraph {
    pub fn new(
        num_vertices: usize,
        target: StateId,
        edges: Vec<(StateId, StateId, f64)>,
    ) -> Result<Self, GraphError> {
        if target.index() >= num_vertices {
            return Err(GraphError::InvalidVertex(target.index(), num_vertices));
        }
        let mut edges: Vec<Edge> = edges
            .into_iter()
            .map(|(from, to, weight)| Edge { from, to, weight })
            .collect();
        for e in &edges {
            for v in [e.from, e.to] {
                if v.index() >= num_vertices {
                    return Err(GraphError::InvalidVertex(v.index(), num_vertices));
                }
            }
            if !(e.weight.is_finite() && (0.0..=1.0).contains(&e.weight)) {
                return Err(GraphError::InvalidWeight(
                    e.from.index(),
                    e.to.index(),
                    e.weight,
                ));
            }
        }
        edges.sort_by_key(|e| (e.from.index(), e.to.index()));
        if let Some(w) = edges
            .windows(2)
            .find(|w| (w[0].from, w[0].to) == (w[1].from, w[1].to))
        {
            return Err(GraphError::DuplicateEdge(
                w[0].from.index(),
                w[0].to.index(),
            ));
        }
        Ok(WeightedGraph {
            num_vertices,
            target,
            edges,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn target(&self) -> StateId {
        self.target
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Graphviz rendering; vertex labels default to indices.
    pub fn to_dot(&self, labels: Option<&[String]>) -> String {
        let label = |v: StateId| -> String {
            match labels {
                Some(names) => names[v.index()].clone(),
                None => v.index().to_string(),
            }
        };
        let mut out = String::from("digraph widest_path {\n  rankdir=LR;\n");
        let _ = writeln!(out, "  \"{}\" [shape=doublecircle];", label(self.target));
        for e in &self.edges {
            let _ = writeln!(
                out,
                "  \"{}\" -> \"{}\" [label=\"{}\"];",
                label(e.from),
                label(e.to),
                e.weight
            );
        }
        out.push_str("}\n");
        out
    }
}

/// The weighted graph a restricted MDP induces under the bound vector `f`:
/// an edge (s, s') for every move some available action makes possible,
/// weighted by the best one-step value under `f` among those actions.
pub fn local_propagation(m: &RestrictedMdp<'_>, f: &ValueVector) -> WeightedGraph {
    let g = m.game();
    assert_eq!(f.len(), g.num_states());
    let mut edges = Vec::new();
    for s in g.state_ids() {
        let mut best: BTreeMap<StateId, f64> = BTreeMap::new();
        for &idx in m.retained(s) {
            let weight = action_value(g, f, s, idx);
            for &(succ, _) in g.state(s).actions()[idx].dist() {
                let w = best.entry(succ).or_insert(0.0);
                if weight > *w {
                    *w = weight;
                }
            }
        }
        edges.extend(best.into_iter().map(|(to, weight)| (s, to, weight)));
    }
    WeightedGraph::new(g.num_states(), g.target(), edges)
        .expect("propagation graphs are well-formed by construction")
}

/// Widest paths to the target plus the witnessing successor tree.
#[derive(Clone, PartialEq, Debug)]
pub struct WidestPathResult {
    /// `widths[v]` is the widest-path value of `v`; the target gets 1 (empty
    /// path) and vertices with no path to the target get 0.
    pub widths: ValueVector,
    /// Next hop on a widest path; `None` at the target and at width-0
    /// vertices.
    pub successor: Vec<Option<StateId>>,
}

#[derive(Clone, Copy, Debug)]
struct HeapEntry {
    width: f64,
    id: usize,
}

// Pop order: larger width first, then smaller vertex id. Weights are always
// finite, so total_cmp agrees with the usual order.
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.width
            .total_cmp(&other.width)
            .then_with(|| other.id.cmp(&self.id))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for HeapEntry {}

/// Single-target widest paths by a Dijkstra-style sweep over the reversed
/// graph, using a binary max-heap ordered by width (ties: smaller id first)
/// with lazy deletion. Fully deterministic: among equally wide successors
/// the tree always picks the smallest id.
pub fn widest_path_widths(w: &WeightedGraph) -> WidestPathResult {
    let n = w.num_vertices();
    let target = w.target().index();
    let mut reverse: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for e in w.edges() {
        reverse[e.to.index()].push((e.from.index(), e.weight));
    }

    let mut widths = vec![0.0f64; n];
    let mut successor: Vec<Option<StateId>> = vec![None; n];
    let mut finalized = vec![false; n];
    let mut heap = BinaryHeap::new();
    widths[target] = 1.0;
    heap.push(HeapEntry {
        width: 1.0,
        id: target,
    });

    while let Some(HeapEntry { id: v, .. }) = heap.pop() {
        if finalized[v] {
            continue; // stale heap entry
        }
        finalized[v] = true;
        let via = widths[v];
        for &(u, weight) in &reverse[v] {
            if finalized[u] {
                continue;
            }
            let cand = weight.min(via);
            if cand > widths[u] {
                widths[u] = cand;
                successor[u] = Some(StateId(v));
                heap.push(HeapEntry { width: cand, id: u });
            } else if cand == widths[u] && cand > 0.0 {
                // Same width through an earlier-finalized vertex: keep the
                // smallest successor id so the tree is unique.
                if successor[u].is_some_and(|s| v < s.index()) {
                    successor[u] = Some(StateId(v));
                }
            }
        }
    }
    successor[target] = None;

    WidestPathResult {
        widths: ValueVector::from_raw(widths),
        successor,
    }
}
