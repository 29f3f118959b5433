//! Walks, loop-erasure with loop bookkeeping, splicing, and loop-sequence
//! breakdowns.
//!
//! Everything here is generic over the vertex and edge labels so the same code
//! runs on the grid dual and on small hand-built graphs.

use std::collections::HashMap;
use std::fmt::{self, Display, Write as _};
use std::hash::Hash;

use crate::error::{Error, Result};

/// Bounds for vertex labels.
pub trait VertexLabel: Copy + Eq + Hash + Ord + fmt::Debug + Display {}
impl<T: Copy + Eq + Hash + Ord + fmt::Debug + Display> VertexLabel for T {}

/// Bounds for edge labels. Edges are undirected; direction comes from the walk.
pub trait EdgeLabel: Copy + Eq + Hash + fmt::Debug + Display {}
impl<T: Copy + Eq + Hash + fmt::Debug + Display> EdgeLabel for T {}

/// An alternating vertex/edge sequence `v0 e0 v1 e1 ... vk`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Walk<V, E> {
    vertices: Vec<V>,
    edges: Vec<E>,
}

/// A walk without repeated vertices.
pub type DirectedPath<V, E> = Walk<V, E>;

impl<V: VertexLabel, E: EdgeLabel> Walk<V, E> {
    pub fn new(vertices: Vec<V>, edges: Vec<E>) -> Result<Self> {
        if vertices.is_empty() || vertices.len() != edges.len() + 1 {
            return Err(Error::InvalidInput("a walk needs one more vertex than edges".into()));
        }
        Ok(Walk { vertices, edges })
    }

    /// The zero-length walk at `v`.
    pub fn trivial(v: V) -> Self {
        Walk { vertices: vec![v], edges: Vec::new() }
    }

    pub fn vertices(&self) -> &[V] {
        &self.vertices
    }

    pub fn edges(&self) -> &[E] {
        &self.edges
    }

    /// Number of edges.
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn start(&self) -> V {
        self.vertices[0]
    }

    pub fn end(&self) -> V {
        *self.vertices.last().unwrap()
    }

    pub fn is_closed(&self) -> bool {
        self.start() == self.end()
    }

    pub fn push(&mut self, e: E, v: V) {
        self.edges.push(e);
        self.vertices.push(v);
    }

    /// Appends `other`, which must start where `self` ends.
    pub fn append(&mut self, other: &Walk<V, E>) {
        debug_assert_eq!(self.end(), other.start());
        self.edges.extend_from_slice(&other.edges);
        self.vertices.extend_from_slice(&other.vertices[1..]);
    }

    /// The sub-walk between vertex positions `j` and `i`, inclusive.
    pub fn slice(&self, j: usize, i: usize) -> Walk<V, E> {
        Walk { vertices: self.vertices[j..=i].to_vec(), edges: self.edges[j..i].to_vec() }
    }

    pub fn reversed(&self) -> Walk<V, E> {
        let mut vertices = self.vertices.clone();
        vertices.reverse();
        let mut edges = self.edges.clone();
        edges.reverse();
        Walk { vertices, edges }
    }

    /// First-appearance position of every vertex; realizes the walk order.
    pub fn first_appearance(&self) -> HashMap<V, usize> {
        let mut map = HashMap::new();
        for (k, &v) in self.vertices.iter().enumerate() {
            map.entry(v).or_insert(k);
        }
        map
    }

    /// Distinct vertices in order of first appearance.
    pub fn vertex_order(&self) -> Vec<V> {
        let mut seen = std::collections::HashSet::new();
        self.vertices.iter().copied().filter(|v| seen.insert(*v)).collect()
    }

    pub fn is_simple(&self) -> bool {
        let mut seen = std::collections::HashSet::new();
        self.vertices.iter().all(|v| seen.insert(*v))
    }

    /// Rotation of a closed walk so that it starts at vertex position `t`.
    /// Position `len()` gives the walk unchanged.
    pub fn rotate_closed(&self, t: usize) -> Walk<V, E> {
        debug_assert!(self.is_closed());
        let k = self.len();
        let mut vertices = self.vertices[t..=k].to_vec();
        vertices.extend_from_slice(&self.vertices[1..=t]);
        let mut edges = self.edges[t..].to_vec();
        edges.extend_from_slice(&self.edges[..t]);
        Walk { vertices, edges }
    }

    /// Directed edges `(tail, head, label)` in walk order.
    pub fn directed_edges(&self) -> Vec<(V, V, E)> {
        (0..self.len()).map(|k| (self.vertices[k], self.vertices[k + 1], self.edges[k])).collect()
    }

    /// One line per step: `v --e--> w`.
    pub fn trace(&self) -> String {
        let mut out = String::new();
        if self.is_empty() {
            let _ = writeln!(out, "{}", self.start());
        }
        for (a, b, e) in self.directed_edges() {
            let _ = writeln!(out, "{a} --{e}--> {b}");
        }
        out
    }
}

/// A loop `W[start:end]` of a parent walk, stored as vertex positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Loop {
    pub start: usize,
    pub end: usize,
}

impl Loop {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }

    pub fn materialize<V: VertexLabel, E: EdgeLabel>(&self, parent: &Walk<V, E>) -> Walk<V, E> {
        parent.slice(self.start, self.end)
    }
}

/// Loop-erasure of a walk together with its maximal loops.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoopDecomposition<V, E> {
    pub erasure: DirectedPath<V, E>,
    /// Maximal loops per erasure position, in walk order.
    pub loops_at: Vec<Vec<Loop>>,
}

impl<V: VertexLabel, E: EdgeLabel> LoopDecomposition<V, E> {
    /// Re-inserts the loops into the erasure.
    pub fn reconstruct(&self, parent: &Walk<V, E>) -> Walk<V, E> {
        let mut out = Walk::trivial(self.erasure.start());
        for k in 0..self.erasure.vertices.len() {
            for l in &self.loops_at[k] {
                out.append(&l.materialize(parent));
            }
            if k < self.erasure.len() {
                out.push(self.erasure.edges[k], self.erasure.vertices[k + 1]);
            }
        }
        out
    }

    pub fn loop_count(&self) -> usize {
        self.loops_at.iter().map(Vec::len).sum()
    }

    /// Erasure trace followed by a loops section.
    pub fn trace(&self, parent: &Walk<V, E>) -> String {
        let mut out = self.erasure.trace();
        out.push_str("loops:\n");
        for (k, ls) in self.loops_at.iter().enumerate() {
            for l in ls {
                let body: Vec<String> = l.materialize(parent).vertices.iter().map(|v| v.to_string()).collect();
                let _ = writeln!(out, "  at {k} [{}:{}] {}", l.start, l.end, body.join(" "));
            }
        }
        out
    }
}

struct Frame {
    pos: usize,
    loops: Vec<Loop>,
}

/// Runs the sequential loop-erasure, reporting every removed cycle.
///
/// `on_loop(j, i)` fires when `W[j:i]` is erased.
fn erase_with<V: VertexLabel, E: EdgeLabel>(w: &Walk<V, E>, mut on_loop: impl FnMut(usize, usize)) -> Vec<Frame> {
    let mut stack: Vec<Frame> = vec![Frame { pos: 0, loops: Vec::new() }];
    let mut slot: HashMap<V, usize> = HashMap::new();
    slot.insert(w.vertices[0], 0);
    for i in 1..w.vertices.len() {
        let v = w.vertices[i];
        if let Some(&k) = slot.get(&v) {
            while stack.len() > k + 1 {
                let f = stack.pop().unwrap();
                slot.remove(&w.vertices[f.pos]);
            }
            let start = stack[k].pos;
            stack[k].loops.push(Loop { start, end: i });
            stack[k].pos = i;
            on_loop(start, i);
        } else {
            slot.insert(v, stack.len());
            stack.push(Frame { pos: i, loops: Vec::new() });
        }
    }
    stack
}

pub fn loop_erase<V: VertexLabel, E: EdgeLabel>(w: &Walk<V, E>) -> LoopDecomposition<V, E> {
    let stack = erase_with(w, |_, _| {});
    let mut vertices = Vec::with_capacity(stack.len());
    let mut edges = Vec::with_capacity(stack.len());
    for (k, f) in stack.iter().enumerate() {
        vertices.push(w.vertices[f.pos]);
        if k + 1 < stack.len() {
            edges.push(w.edges[f.pos]);
        }
    }
    LoopDecomposition { erasure: Walk { vertices, edges }, loops_at: stack.into_iter().map(|f| f.loops).collect() }
}

/// The loop-erasure path only.
pub fn erasure<V: VertexLabel, E: EdgeLabel>(w: &Walk<V, E>) -> DirectedPath<V, E> {
    loop_erase(w).erasure
}

/// For every position `j`, the end `i` of the loop `W[j:i]` erased with
/// smallest removed index `j`, if any. Includes non-maximal loops.
pub fn loop_events<V: VertexLabel, E: EdgeLabel>(w: &Walk<V, E>) -> Vec<Option<usize>> {
    let mut ends = vec![None; w.vertices.len()];
    erase_with(w, |j, i| ends[j] = Some(i));
    ends
}

/// The chain of loops at position `i`: `W[i:i2], W[i2:i3], ...`.
pub fn loops_at_index(events: &[Option<usize>], i: usize) -> Vec<Loop> {
    let mut out = Vec::new();
    let mut cur = i;
    while let Some(end) = events[cur] {
        out.push(Loop { start: cur, end });
        cur = end;
    }
    out
}

/// Splices the closed walk `l` into `w` after vertex position `pos`, rotated
/// to start at the first appearance of `w`'s vertex at `pos`.
pub fn splice<V: VertexLabel, E: EdgeLabel>(w: &Walk<V, E>, l: &Walk<V, E>, pos: usize) -> Result<Walk<V, E>> {
    if !l.is_closed() {
        return Err(Error::InvalidInput("spliced walk must be closed".into()));
    }
    let u = w.vertices[pos];
    let t = l.vertices.iter().position(|&x| x == u).ok_or(Error::VertexNotOnLoop(pos))?;
    let rot = l.rotate_closed(t);
    let mut vertices = w.vertices[..=pos].to_vec();
    vertices.extend_from_slice(&rot.vertices[1..]);
    vertices.extend_from_slice(&w.vertices[pos + 1..]);
    let mut edges = w.edges[..pos].to_vec();
    edges.extend_from_slice(&rot.edges);
    edges.extend_from_slice(&w.edges[pos..]);
    Ok(Walk { vertices, edges })
}

/// Loop-sequence of an ordered set of closed walks: for each, the smallest
/// rank among its vertices that have one, or `None` (the φ marker).
pub fn loop_sequence<V: VertexLabel, E: EdgeLabel>(loops: &[Walk<V, E>], rank: &HashMap<V, usize>) -> Vec<Option<usize>> {
    loops.iter().map(|l| l.vertices.iter().filter_map(|v| rank.get(v).copied()).min()).collect()
}

/// Breakdown of a loop-sequence, as 0-based indices.
///
/// The breakdown consists of the non-φ positions whose value is strictly
/// smaller than every later non-φ value.
pub fn breakdown(seq: &[Option<usize>]) -> Vec<usize> {
    let mut out = Vec::new();
    let mut suffix_min: Option<usize> = None;
    for (k, v) in seq.iter().enumerate().rev() {
        if let Some(x) = *v {
            if suffix_min.map_or(true, |m| x < m) {
                out.push(k);
            }
            suffix_min = Some(suffix_min.map_or(x, |m| m.min(x)));
        }
    }
    out.reverse();
    out
}
