//! The m×n primal grid, its planar dual, and the geometry that links dual
//! cycles to 2-partitions of the primal vertices.
//!
//! Faces are indexed by their top-left primal vertex. The unbounded face is a
//! single [`DualVertex::Outer`]. Every dual edge is identified by the primal
//! edge it crosses, which keeps the parallel edges at the corners apart.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GridDims {
    pub rows: usize,
    pub cols: usize,
}

impl GridDims {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        if rows < 2 || cols < 2 {
            return Err(Error::DimensionTooSmall { rows, cols });
        }
        Ok(GridDims { rows, cols })
    }

    pub fn mn_even(&self) -> bool {
        (self.rows * self.cols) % 2 == 0
    }

    pub fn vertex_count(&self) -> usize {
        self.rows * self.cols
    }

    pub fn face_count(&self) -> usize {
        (self.rows - 1) * (self.cols - 1)
    }
}

/// A primal vertex at row `i`, column `j` (both 1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PrimalVertex {
    pub i: usize,
    pub j: usize,
}

impl PrimalVertex {
    pub fn new(i: usize, j: usize) -> Self {
        PrimalVertex { i, j }
    }

    pub fn manhattan(&self, other: &PrimalVertex) -> usize {
        self.i.abs_diff(other.i) + self.j.abs_diff(other.j)
    }

    pub fn is_adjacent(&self, other: &PrimalVertex) -> bool {
        self.manhattan(other) == 1
    }
}

impl fmt::Display for PrimalVertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.i, self.j)
    }
}

/// An undirected primal edge; endpoints are stored in lexicographic order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PrimalEdge {
    a: PrimalVertex,
    b: PrimalVertex,
}

impl PrimalEdge {
    pub fn new(p: PrimalVertex, q: PrimalVertex) -> Result<Self> {
        if !p.is_adjacent(&q) {
            return Err(Error::InvalidInput(format!("{p} and {q} are not adjacent")));
        }
        Ok(if p < q { PrimalEdge { a: p, b: q } } else { PrimalEdge { a: q, b: p } })
    }

    pub fn endpoints(&self) -> (PrimalVertex, PrimalVertex) {
        (self.a, self.b)
    }

    pub fn is_horizontal(&self) -> bool {
        self.a.i == self.b.i
    }

    /// Canonical `[[i,j],[i',j']]` form.
    pub fn to_pairs(&self) -> [[usize; 2]; 2] {
        [[self.a.i, self.a.j], [self.b.i, self.b.j]]
    }
}

impl fmt::Display for PrimalEdge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.a, self.b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DualVertex {
    Face { i: usize, j: usize },
    Outer,
}

impl DualVertex {
    pub fn face(i: usize, j: usize) -> Self {
        DualVertex::Face { i, j }
    }

    pub fn is_outer(&self) -> bool {
        matches!(self, DualVertex::Outer)
    }
}

impl fmt::Display for DualVertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DualVertex::Face { i, j } => write!(f, "F({i},{j})"),
            DualVertex::Outer => write!(f, "O"),
        }
    }
}

/// A dual edge. Identity is the crossing primal edge; `ends` is derived from it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DualEdge {
    crossing: PrimalEdge,
    ends: (DualVertex, DualVertex),
}

impl DualEdge {
    pub fn crossing(&self) -> PrimalEdge {
        self.crossing
    }

    pub fn endpoints(&self) -> (DualVertex, DualVertex) {
        self.ends
    }

    pub fn touches_outer(&self) -> bool {
        self.ends.0.is_outer() || self.ends.1.is_outer()
    }

    /// The endpoint opposite `v`, if `v` is an endpoint.
    pub fn other(&self, v: DualVertex) -> Option<DualVertex> {
        if self.ends.0 == v {
            Some(self.ends.1)
        } else if self.ends.1 == v {
            Some(self.ends.0)
        } else {
            None
        }
    }
}

impl fmt::Display for DualEdge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]", self.crossing)
    }
}

/// The primal grid together with its planar dual.
#[derive(Debug, Clone)]
pub struct GridDual {
    dims: GridDims,
    edges: Vec<PrimalEdge>,
    edge_ends: Vec<(usize, usize)>,
    right_edge: Vec<Option<usize>>,
    down_edge: Vec<Option<usize>>,
    primal_adj: Vec<Vec<(usize, usize)>>,
    dual_ends: Vec<(usize, usize)>,
    dual_adj: Vec<Vec<(usize, usize)>>,
    on_border: Vec<bool>,
}

impl GridDual {
    pub fn build(dims: GridDims) -> Result<Self> {
        let dims = GridDims::new(dims.rows, dims.cols)?;
        let (m, n) = (dims.rows, dims.cols);
        let mut edges = Vec::with_capacity(m * (n - 1) + (m - 1) * n);
        for i in 1..=m {
            for j in 1..=n {
                let p = PrimalVertex::new(i, j);
                if j < n {
                    edges.push(PrimalEdge { a: p, b: PrimalVertex::new(i, j + 1) });
                }
                if i < m {
                    edges.push(PrimalEdge { a: p, b: PrimalVertex::new(i + 1, j) });
                }
            }
        }
        edges.sort();
        let vidx = |p: PrimalVertex| (p.i - 1) * n + (p.j - 1);
        let nv = m * n;
        let nf = dims.face_count();
        let mut right_edge = vec![None; nv];
        let mut down_edge = vec![None; nv];
        let mut primal_adj = vec![Vec::new(); nv];
        let mut edge_ends = Vec::with_capacity(edges.len());
        let mut dual_ends = Vec::with_capacity(edges.len());
        let mut dual_adj = vec![Vec::new(); nf + 1];
        let face_idx = |i: usize, j: usize| -> usize {
            if i >= 1 && i < m && j >= 1 && j < n {
                (i - 1) * (n - 1) + (j - 1)
            } else {
                nf
            }
        };
        for (k, e) in edges.iter().enumerate() {
            let (a, b) = (vidx(e.a), vidx(e.b));
            edge_ends.push((a, b));
            primal_adj[a].push((b, k));
            primal_adj[b].push((a, k));
            let (f1, f2) = if e.is_horizontal() {
                right_edge[a] = Some(k);
                (face_idx(e.a.i - 1, e.a.j), face_idx(e.a.i, e.a.j))
            } else {
                down_edge[a] = Some(k);
                (face_idx(e.a.i, e.a.j - 1), face_idx(e.a.i, e.a.j))
            };
            let (f1, f2) = if f1 <= f2 { (f1, f2) } else { (f2, f1) };
            dual_ends.push((f1, f2));
            dual_adj[f1].push((f2, k));
            dual_adj[f2].push((f1, k));
        }
        let on_border = (0..nv)
            .map(|x| {
                let (i, j) = (x / n + 1, x % n + 1);
                i == 1 || i == m || j == 1 || j == n
            })
            .collect();
        Ok(GridDual {
            dims,
            edges,
            edge_ends,
            right_edge,
            down_edge,
            primal_adj,
            dual_ends,
            dual_adj,
            on_border,
        })
    }

    pub fn dims(&self) -> GridDims {
        self.dims
    }

    pub fn vertex_count(&self) -> usize {
        self.dims.vertex_count()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Number of dual vertices, Outer included.
    pub fn dual_vertex_count(&self) -> usize {
        self.dims.face_count() + 1
    }

    pub fn outer_index(&self) -> usize {
        self.dims.face_count()
    }

    pub fn vertex_index(&self, p: PrimalVertex) -> usize {
        (p.i - 1) * self.dims.cols + (p.j - 1)
    }

    pub fn vertex(&self, idx: usize) -> PrimalVertex {
        PrimalVertex::new(idx / self.dims.cols + 1, idx % self.dims.cols + 1)
    }

    pub fn contains_vertex(&self, p: PrimalVertex) -> bool {
        p.i >= 1 && p.i <= self.dims.rows && p.j >= 1 && p.j <= self.dims.cols
    }

    pub fn vertices(&self) -> impl Iterator<Item = PrimalVertex> + '_ {
        (0..self.vertex_count()).map(move |x| self.vertex(x))
    }

    pub fn is_border(&self, vidx: usize) -> bool {
        self.on_border[vidx]
    }

    /// Primal edges in lexicographic order; the position is the edge index.
    pub fn primal_edges(&self) -> &[PrimalEdge] {
        &self.edges
    }

    pub fn primal_edge(&self, e: usize) -> PrimalEdge {
        self.edges[e]
    }

    /// Vertex indices of edge `e`.
    pub fn edge_ends(&self, e: usize) -> (usize, usize) {
        self.edge_ends[e]
    }

    pub fn edge_index(&self, e: &PrimalEdge) -> usize {
        let a = self.vertex_index(e.a);
        let k = if e.is_horizontal() { self.right_edge[a] } else { self.down_edge[a] };
        k.expect("edge belongs to this grid")
    }

    /// Edge index joining two adjacent vertex indices.
    pub fn edge_between(&self, a: usize, b: usize) -> Option<usize> {
        self.primal_adj[a].iter().find(|&&(w, _)| w == b).map(|&(_, e)| e)
    }

    /// `(neighbor, edge)` pairs of a primal vertex index.
    pub fn primal_neighbors(&self, v: usize) -> &[(usize, usize)] {
        &self.primal_adj[v]
    }

    pub fn dual_index(&self, v: DualVertex) -> usize {
        match v {
            DualVertex::Face { i, j } => (i - 1) * (self.dims.cols - 1) + (j - 1),
            DualVertex::Outer => self.outer_index(),
        }
    }

    pub fn dual_vertex(&self, idx: usize) -> DualVertex {
        if idx == self.outer_index() {
            DualVertex::Outer
        } else {
            let w = self.dims.cols - 1;
            DualVertex::face(idx / w + 1, idx % w + 1)
        }
    }

    pub fn dual_vertices(&self) -> impl Iterator<Item = DualVertex> + '_ {
        (0..self.dual_vertex_count()).map(move |x| self.dual_vertex(x))
    }

    /// Dual vertex indices joined by the dual of edge `e`, smaller first.
    pub fn dual_ends(&self, e: usize) -> (usize, usize) {
        self.dual_ends[e]
    }

    /// `(neighbor, edge)` pairs of a dual vertex index, sorted by edge.
    pub fn dual_neighbors(&self, d: usize) -> &[(usize, usize)] {
        &self.dual_adj[d]
    }

    pub fn dual_degree(&self, v: DualVertex) -> usize {
        self.dual_adj[self.dual_index(v)].len()
    }

    /// Whether the dual of edge `e` is incident on Outer.
    pub fn is_boundary_edge(&self, e: usize) -> bool {
        self.dual_ends[e].1 == self.outer_index()
    }

    pub fn dual_edge(&self, e: usize) -> DualEdge {
        let (a, b) = self.dual_ends[e];
        DualEdge { crossing: self.edges[e], ends: (self.dual_vertex(a), self.dual_vertex(b)) }
    }

    pub fn dual_of(&self, e: &PrimalEdge) -> DualEdge {
        self.dual_edge(self.edge_index(e))
    }

    pub fn dual_edge_index(&self, e: &DualEdge) -> usize {
        self.edge_index(&e.crossing)
    }

    pub fn dual_edges(&self) -> impl Iterator<Item = DualEdge> + '_ {
        (0..self.edge_count()).map(move |e| self.dual_edge(e))
    }

    /// Checks that consecutive entries of a dual walk are joined by the listed edges.
    pub fn is_valid_walk(&self, vertices: &[DualVertex], edges: &[DualEdge]) -> bool {
        if vertices.is_empty() || vertices.len() != edges.len() + 1 {
            return false;
        }
        edges.iter().enumerate().all(|(k, e)| {
            let fresh = self.dual_edge(self.dual_edge_index(e));
            fresh == *e && e.other(vertices[k]) == Some(vertices[k + 1])
        })
    }

    /// Connected components of the primal grid after deleting the `walls`.
    /// Returns a component label per vertex and the number of components.
    pub fn components_without(&self, walls: &[bool]) -> (Vec<usize>, usize) {
        let nv = self.vertex_count();
        let mut label = vec![usize::MAX; nv];
        let mut count = 0;
        let mut queue = VecDeque::new();
        for s in 0..nv {
            if label[s] != usize::MAX {
                continue;
            }
            label[s] = count;
            queue.push_back(s);
            while let Some(x) = queue.pop_front() {
                for &(y, e) in &self.primal_adj[x] {
                    if !walls[e] && label[y] == usize::MAX {
                        label[y] = count;
                        queue.push_back(y);
                    }
                }
            }
            count += 1;
        }
        (label, count)
    }

    /// Whether the vertices with `mask[v] == side` induce a nonempty connected subgraph.
    pub fn side_connected(&self, mask: &[bool], side: bool) -> bool {
        let Some(start) = mask.iter().position(|&s| s == side) else {
            return false;
        };
        let mut seen = vec![false; mask.len()];
        seen[start] = true;
        let mut stack = vec![start];
        let mut reached = 1;
        while let Some(x) = stack.pop() {
            for &(y, _) in &self.primal_adj[x] {
                if mask[y] == side && !seen[y] {
                    seen[y] = true;
                    reached += 1;
                    stack.push(y);
                }
            }
        }
        reached == mask.iter().filter(|&&s| s == side).count()
    }
}

/// A simple cycle of dual edges.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DualCycle {
    edges: BTreeSet<DualEdge>,
}

impl DualCycle {
    /// Validates the degree, connectivity and length invariants.
    pub fn new(edges: BTreeSet<DualEdge>) -> Result<Self> {
        if edges.is_empty() {
            return Err(Error::NotACycle("empty edge set".into()));
        }
        let mut degree: std::collections::BTreeMap<DualVertex, usize> = Default::default();
        for e in &edges {
            let (a, b) = e.endpoints();
            *degree.entry(a).or_default() += 1;
            *degree.entry(b).or_default() += 1;
        }
        if let Some((v, d)) = degree.iter().find(|(_, &d)| d != 2) {
            return Err(Error::NotACycle(format!("dual vertex {v} has degree {d}")));
        }
        // Degree 2 everywhere: the set is connected iff walking from one edge covers it.
        let first = *edges.iter().next().unwrap();
        let start = first.endpoints().0;
        let mut cur = first.endpoints().1;
        let mut prev = first;
        let mut seen = 1;
        while cur != start {
            let next = edges
                .iter()
                .find(|e| **e != prev && e.other(cur).is_some())
                .copied()
                .expect("degree two");
            cur = next.other(cur).unwrap();
            prev = next;
            seen += 1;
        }
        if seen != edges.len() {
            return Err(Error::NotACycle("edge set is not connected".into()));
        }
        if edges.len() == 2 {
            let mut it = edges.iter();
            let (x, y) = (it.next().unwrap(), it.next().unwrap());
            if x.endpoints() != y.endpoints() || !x.touches_outer() {
                return Err(Error::NotACycle("two-edge cycle must be a corner parallel pair".into()));
            }
        }
        Ok(DualCycle { edges })
    }

    pub fn from_edges(edges: impl IntoIterator<Item = DualEdge>) -> Result<Self> {
        Self::new(edges.into_iter().collect())
    }

    pub fn edges(&self) -> &BTreeSet<DualEdge> {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn contains(&self, e: &DualEdge) -> bool {
        self.edges.contains(e)
    }

    pub fn uses_outer(&self) -> bool {
        self.edges.iter().any(|e| e.touches_outer())
    }

    /// Number of edges incident on Outer.
    pub fn outer_degree(&self) -> usize {
        self.edges.iter().filter(|e| e.touches_outer()).count()
    }

    /// The cut set in canonical `[[i,j],[i',j']]` form, sorted.
    pub fn canonical_cut(&self) -> Vec<[[usize; 2]; 2]> {
        self.edges.iter().map(|e| e.crossing().to_pairs()).collect()
    }
}

/// A 2-partition of the primal vertices into interior and exterior.
///
/// Equality is that of the unordered pair of sides: the interior label is a
/// deterministic function of the pair (see [`Partition2::from_mask`]).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partition2 {
    dims: GridDims,
    interior: Vec<bool>,
}

impl Partition2 {
    /// Builds a partition from a side mask (indexed by vertex index).
    ///
    /// The interior is the side not touching the grid border. When both sides
    /// touch it, the interior is the smaller side, ties going to the side that
    /// holds vertex (1,1).
    pub fn from_mask(g: &GridDual, mask: &[bool]) -> Result<Self> {
        if mask.len() != g.vertex_count() {
            return Err(Error::InvalidInput("mask length differs from vertex count".into()));
        }
        let a = mask.iter().filter(|&&s| s).count();
        let b = mask.len() - a;
        if a == 0 || b == 0 {
            return Err(Error::InfeasiblePartition("one side is empty".into()));
        }
        if !g.side_connected(mask, true) || !g.side_connected(mask, false) {
            return Err(Error::InfeasiblePartition("a side is disconnected".into()));
        }
        Ok(Self::oriented(g, mask))
    }

    /// Same as [`Partition2::from_mask`] without the connectivity checks.
    pub(crate) fn oriented(g: &GridDual, mask: &[bool]) -> Self {
        let a = mask.iter().filter(|&&s| s).count();
        let b = mask.len() - a;
        let touch = |side: bool| (0..mask.len()).any(|v| mask[v] == side && g.is_border(v));
        let interior_side = match (touch(true), touch(false)) {
            (false, _) => true,
            (_, false) => false,
            _ if a != b => a < b,
            _ => mask[0],
        };
        Partition2 { dims: g.dims(), interior: mask.iter().map(|&s| s == interior_side).collect() }
    }

    pub fn from_interior(g: &GridDual, interior: &[PrimalVertex]) -> Result<Self> {
        let mut mask = vec![false; g.vertex_count()];
        for p in interior {
            if !g.contains_vertex(*p) {
                return Err(Error::InvalidInput(format!("{p} is outside the grid")));
            }
            mask[g.vertex_index(*p)] = true;
        }
        Self::from_mask(g, &mask)
    }

    pub fn dims(&self) -> GridDims {
        self.dims
    }

    /// Interior membership per vertex index.
    pub fn mask(&self) -> &[bool] {
        &self.interior
    }

    pub fn is_interior(&self, vidx: usize) -> bool {
        self.interior[vidx]
    }

    pub fn interior(&self) -> Vec<PrimalVertex> {
        self.collect(true)
    }

    pub fn exterior(&self) -> Vec<PrimalVertex> {
        self.collect(false)
    }

    fn collect(&self, side: bool) -> Vec<PrimalVertex> {
        let n = self.dims.cols;
        (0..self.interior.len())
            .filter(|&v| self.interior[v] == side)
            .map(|v| PrimalVertex::new(v / n + 1, v % n + 1))
            .collect()
    }

    pub fn interior_len(&self) -> usize {
        self.interior.iter().filter(|&&s| s).count()
    }

    pub fn exterior_len(&self) -> usize {
        self.interior.len() - self.interior_len()
    }

    /// Twice the imbalance: `||X| - |Y||`.
    pub fn imbalance2(&self) -> usize {
        self.interior_len().abs_diff(self.exterior_len())
    }

    pub fn imbalance(&self) -> f64 {
        self.imbalance2() as f64 / 2.0
    }

    pub fn separates(&self, a: usize, b: usize) -> bool {
        self.interior[a] != self.interior[b]
    }

    /// Edge indices of the cut.
    pub fn cut_edges(&self, g: &GridDual) -> Vec<usize> {
        (0..g.edge_count())
            .filter(|&e| {
                let (a, b) = g.edge_ends(e);
                self.interior[a] != self.interior[b]
            })
            .collect()
    }
}

/// The partition whose cut set is the crossing set of `c`.
pub fn cycle_to_partition(g: &GridDual, c: &DualCycle) -> Result<Partition2> {
    let mut walls = vec![false; g.edge_count()];
    for e in c.edges() {
        walls[g.dual_edge_index(e)] = true;
    }
    let (label, count) = g.components_without(&walls);
    if count != 2 {
        return Err(Error::NotACycle(format!("cut leaves {count} components")));
    }
    for (e, &w) in walls.iter().enumerate() {
        let (a, b) = g.edge_ends(e);
        if w && label[a] == label[b] {
            return Err(Error::NotACycle("a crossing edge does not separate the sides".into()));
        }
    }
    let mask: Vec<bool> = label.iter().map(|&l| l == 0).collect();
    Ok(Partition2::oriented(g, &mask))
}

/// The dual cycle formed by the duals of the cut edges of `p`.
pub fn partition_to_cycle(g: &GridDual, p: &Partition2) -> Result<DualCycle> {
    if p.dims() != g.dims() {
        return Err(Error::InvalidInput("partition belongs to a different grid".into()));
    }
    if p.interior_len() == 0 || p.exterior_len() == 0 {
        return Err(Error::InfeasiblePartition("one side is empty".into()));
    }
    if !g.side_connected(p.mask(), true) || !g.side_connected(p.mask(), false) {
        return Err(Error::InfeasiblePartition("a side is disconnected".into()));
    }
    DualCycle::from_edges(p.cut_edges(g).into_iter().map(|e| g.dual_edge(e)))
}

/// Number of primal vertices on the interior side of `c`.
pub fn enclosed_primal_count(g: &GridDual, c: &DualCycle) -> Result<usize> {
    Ok(cycle_to_partition(g, c)?.interior_len())
}

/// A rectangle of faces, inclusive bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SubgridWindow {
    pub row_lo: usize,
    pub row_hi: usize,
    pub col_lo: usize,
    pub col_hi: usize,
}

impl SubgridWindow {
    pub fn new(row_lo: usize, row_hi: usize, col_lo: usize, col_hi: usize) -> Result<Self> {
        if row_lo == 0 || col_lo == 0 || row_lo > row_hi || col_lo > col_hi {
            return Err(Error::InvalidInput("window bounds must be a nonempty 1-based rectangle".into()));
        }
        Ok(SubgridWindow { row_lo, row_hi, col_lo, col_hi })
    }

    pub fn rows(&self) -> usize {
        self.row_hi - self.row_lo + 1
    }

    pub fn cols(&self) -> usize {
        self.col_hi - self.col_lo + 1
    }

    pub fn contains(&self, v: &DualVertex) -> bool {
        match *v {
            DualVertex::Face { i, j } => {
                i >= self.row_lo && i <= self.row_hi && j >= self.col_lo && j <= self.col_hi
            }
            DualVertex::Outer => false,
        }
    }

    /// Number of Face-to-Face dual edges with both ends inside.
    pub fn edge_count(&self) -> usize {
        let (a, b) = (self.rows(), self.cols());
        a * (b - 1) + b * (a - 1)
    }

    /// Whether an inside face lies on the window's perimeter.
    pub fn on_perimeter(&self, v: &DualVertex) -> bool {
        match *v {
            DualVertex::Face { i, j } => {
                self.contains(v)
                    && (i == self.row_lo || i == self.row_hi || j == self.col_lo || j == self.col_hi)
            }
            DualVertex::Outer => false,
        }
    }

    /// Whether the dual edge "lies in" the window: both ends inside, or one end
    /// is Outer and the other inside.
    pub fn holds_edge(&self, e: &DualEdge) -> bool {
        let (a, b) = e.endpoints();
        (self.contains(&a) || a.is_outer()) && (self.contains(&b) || b.is_outer()) && !(a.is_outer() && b.is_outer())
    }

    pub fn faces(&self) -> impl Iterator<Item = DualVertex> + '_ {
        (self.row_lo..=self.row_hi)
            .flat_map(move |i| (self.col_lo..=self.col_hi).map(move |j| DualVertex::face(i, j)))
    }

    /// Grows the window by `r` faces on each side, clipped to the grid.
    pub fn dilate(&self, r: usize, dims: GridDims) -> SubgridWindow {
        SubgridWindow {
            row_lo: self.row_lo.saturating_sub(r).max(1),
            row_hi: (self.row_hi + r).min(dims.rows - 1),
            col_lo: self.col_lo.saturating_sub(r).max(1),
            col_hi: (self.col_hi + r).min(dims.cols - 1),
        }
    }

    pub fn contains_window(&self, other: &SubgridWindow) -> bool {
        other.row_lo >= self.row_lo
            && other.row_hi <= self.row_hi
            && other.col_lo >= self.col_lo
            && other.col_hi <= self.col_hi
    }
}

/// Result of comparing two dual edge sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocalDifference {
    Identical,
    Window(SubgridWindow),
}

impl LocalDifference {
    pub fn window(&self) -> Option<SubgridWindow> {
        match self {
            LocalDifference::Identical => None,
            LocalDifference::Window(w) => Some(*w),
        }
    }

    /// Edge count of the window, zero when identical.
    pub fn edge_count(&self) -> usize {
        self.window().map_or(0, |w| w.edge_count())
    }
}

/// The smallest window holding the symmetric difference of two edge sets.
pub fn locally_different<'a, A, B>(a: A, b: B) -> LocalDifference
where
    A: IntoIterator<Item = &'a DualEdge>,
    B: IntoIterator<Item = &'a DualEdge>,
{
    let sa: BTreeSet<DualEdge> = a.into_iter().copied().collect();
    let sb: BTreeSet<DualEdge> = b.into_iter().copied().collect();
    let mut bounds: Option<(usize, usize, usize, usize)> = None;
    for e in sa.symmetric_difference(&sb) {
        let (x, y) = e.endpoints();
        for v in [x, y] {
            if let DualVertex::Face { i, j } = v {
                bounds = Some(match bounds {
                    None => (i, i, j, j),
                    Some((r0, r1, c0, c1)) => (r0.min(i), r1.max(i), c0.min(j), c1.max(j)),
                });
            }
        }
    }
    match bounds {
        None => LocalDifference::Identical,
        Some((row_lo, row_hi, col_lo, col_hi)) => {
            LocalDifference::Window(SubgridWindow { row_lo, row_hi, col_lo, col_hi })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(m: usize, n: usize) -> GridDual {
        GridDual::build(GridDims::new(m, n).unwrap()).unwrap()
    }

    fn pv(i: usize, j: usize) -> PrimalVertex {
        PrimalVertex::new(i, j)
    }

    fn pe(a: (usize, usize), b: (usize, usize)) -> PrimalEdge {
        PrimalEdge::new(pv(a.0, a.1), pv(b.0, b.1)).unwrap()
    }

    /// Brute-force oracle: all colorings whose two classes are nonempty and connected.
    fn feasible_masks(g: &GridDual) -> Vec<Vec<bool>> {
        let nv = g.vertex_count();
        (1u32..(1 << nv) - 1)
            .map(|bits| (0..nv).map(|v| bits >> v & 1 == 1).collect::<Vec<_>>())
            .filter(|m| m[0])
            .filter(|m| g.side_connected(m, true) && g.side_connected(m, false))
            .collect()
    }

    #[test]
    fn build_two_by_two() {
        let g = grid(2, 2);
        assert_eq!(g.vertex_count(), 4);
        assert_eq!(g.edge_count(), 4);
        assert_eq!(g.dual_vertex_count(), 2);
        for e in g.dual_edges() {
            assert_eq!(e.endpoints(), (DualVertex::face(1, 1), DualVertex::Outer));
        }
        let crossings: BTreeSet<_> = g.dual_edges().map(|e| e.crossing()).collect();
        assert_eq!(crossings.len(), 4);
    }

    #[test]
    fn build_three_by_three() {
        let g = grid(3, 3);
        assert_eq!(g.edge_count(), 12);
        assert_eq!(g.dual_edges().count(), 12);
        for i in 1..=2 {
            for j in 1..=2 {
                assert_eq!(g.dual_degree(DualVertex::face(i, j)), 4);
            }
        }
    }

    #[test]
    fn outer_degree_counts_boundary_edges() {
        for (m, n) in [(2, 2), (3, 5), (6, 4)] {
            let g = grid(m, n);
            assert_eq!(g.dual_degree(DualVertex::Outer), 2 * (m - 1) + 2 * (n - 1));
            let boundary = g
                .primal_edges()
                .iter()
                .filter(|e| {
                    let (a, b) = e.endpoints();
                    (a.i == b.i && (a.i == 1 || a.i == m)) || (a.j == b.j && (a.j == 1 || a.j == n))
                })
                .count();
            assert_eq!(boundary, g.dual_degree(DualVertex::Outer));
        }
    }

    #[test]
    fn too_small_is_rejected() {
        assert_eq!(GridDims::new(1, 5), Err(Error::DimensionTooSmall { rows: 1, cols: 5 }));
        assert!(GridDims::new(2, 2).is_ok());
        assert!(GridDims::new(3, 4).unwrap().mn_even());
        assert!(!GridDims::new(3, 3).unwrap().mn_even());
    }

    #[test]
    fn duality_bijection() {
        let g = grid(4, 5);
        for (k, e) in g.primal_edges().iter().enumerate() {
            assert_eq!(g.edge_index(e), k);
            assert_eq!(g.dual_of(e).crossing(), *e);
        }
        assert_eq!(g.primal_edges().len(), g.dual_edges().count());
    }

    #[test]
    fn center_four_cycle() {
        let g = grid(3, 3);
        let cut = [pe((1, 2), (2, 2)), pe((2, 1), (2, 2)), pe((2, 2), (2, 3)), pe((2, 2), (3, 2))];
        let c = DualCycle::from_edges(cut.iter().map(|e| g.dual_of(e))).unwrap();
        let p = cycle_to_partition(&g, &c).unwrap();
        assert_eq!(p.interior(), vec![pv(2, 2)]);
        assert_eq!(p.exterior().len(), 8);
        assert_eq!(partition_to_cycle(&g, &p).unwrap(), c);
        assert_eq!(enclosed_primal_count(&g, &c).unwrap(), 1);
    }

    #[test]
    fn column_cycle_through_outer() {
        let g = grid(3, 3);
        let cut = [pe((1, 1), (1, 2)), pe((2, 1), (2, 2)), pe((3, 1), (3, 2))];
        let c = DualCycle::from_edges(cut.iter().map(|e| g.dual_of(e))).unwrap();
        assert!(c.uses_outer());
        let p = cycle_to_partition(&g, &c).unwrap();
        assert_eq!(p.interior(), vec![pv(1, 1), pv(2, 1), pv(3, 1)]);
        let q = Partition2::from_interior(&g, &[pv(1, 1), pv(2, 1), pv(3, 1)]).unwrap();
        assert_eq!(partition_to_cycle(&g, &q).unwrap(), c);
    }

    #[test]
    fn degree_four_vertex_is_not_a_cycle() {
        let g = grid(3, 3);
        // All four edges around Face(1,1): the face has degree 4.
        let cut = [pe((1, 1), (1, 2)), pe((1, 1), (2, 1)), pe((1, 2), (2, 2)), pe((2, 1), (2, 2))];
        let r = DualCycle::from_edges(cut.iter().map(|e| g.dual_of(e)));
        assert!(matches!(r, Err(Error::NotACycle(_))));
    }

    #[test]
    fn two_disjoint_cycles_rejected() {
        let g = grid(5, 5);
        let mut cut: Vec<PrimalEdge> = Vec::new();
        for c in [(2, 2), (4, 4)] {
            for d in [(c.0 - 1, c.1), (c.0 + 1, c.1), (c.0, c.1 - 1), (c.0, c.1 + 1)] {
                cut.push(pe(c, d));
            }
        }
        assert!(DualCycle::from_edges(cut.iter().map(|e| g.dual_of(e))).is_err());
    }

    #[test]
    fn whole_grid_is_infeasible() {
        let g = grid(3, 3);
        let all: Vec<_> = g.vertices().collect();
        assert!(matches!(Partition2::from_interior(&g, &all), Err(Error::InfeasiblePartition(_))));
    }

    #[test]
    fn corner_two_cycle() {
        let g = grid(3, 4);
        let c = DualCycle::from_edges([g.dual_of(&pe((1, 1), (1, 2))), g.dual_of(&pe((1, 1), (2, 1)))])
            .unwrap();
        assert_eq!(c.len(), 2);
        let p = cycle_to_partition(&g, &c).unwrap();
        assert_eq!(p.interior(), vec![pv(1, 1)]);
    }

    #[test]
    fn domino_enclosed_by_six_cycle() {
        let g = grid(4, 4);
        let p = Partition2::from_interior(&g, &[pv(2, 2), pv(2, 3)]).unwrap();
        let c = partition_to_cycle(&g, &p).unwrap();
        assert_eq!(c.len(), 6);
        assert_eq!(enclosed_primal_count(&g, &c).unwrap(), 2);
        assert!(2 <= 3 * c.len() * c.len());
    }

    #[test]
    fn round_trip_exhaustive_up_to_four_by_four() {
        for (m, n) in [(2, 2), (2, 3), (3, 3), (3, 4), (4, 4)] {
            let g = grid(m, n);
            for mask in feasible_masks(&g) {
                let p = Partition2::from_mask(&g, &mask).unwrap();
                let c = partition_to_cycle(&g, &p).unwrap();
                assert_eq!(c.len(), p.cut_edges(&g).len());
                assert_eq!(cycle_to_partition(&g, &c).unwrap(), p);
                let flipped: Vec<bool> = mask.iter().map(|&s| !s).collect();
                assert_eq!(Partition2::from_mask(&g, &flipped).unwrap(), p);
            }
        }
    }

    #[test]
    fn identical_sets_have_no_window() {
        let g = grid(4, 4);
        let s: Vec<DualEdge> = g.dual_edges().take(5).collect();
        assert_eq!(locally_different(&s, &s), LocalDifference::Identical);
    }

    #[test]
    fn single_face_edge_difference() {
        let g = grid(5, 5);
        let shared: Vec<DualEdge> = vec![g.dual_of(&pe((1, 1), (1, 2)))];
        let mut other = shared.clone();
        // Dual of (2,3)-(3,3) joins Face(2,2) and Face(2,3).
        other.push(g.dual_of(&pe((2, 3), (3, 3))));
        let w = locally_different(&shared, &other).window().unwrap();
        assert_eq!(w, SubgridWindow::new(2, 2, 2, 3).unwrap());
        assert_eq!((w.rows(), w.cols()), (1, 2));
    }

    #[test]
    fn outer_difference_uses_face_endpoint() {
        let g = grid(5, 5);
        let a = vec![g.dual_of(&pe((1, 3), (1, 4)))];
        let w = locally_different(&a, &[]).window().unwrap();
        assert_eq!(w, SubgridWindow::new(1, 1, 3, 3).unwrap());
    }

    #[test]
    fn window_edge_counts() {
        assert_eq!(SubgridWindow::new(1, 3, 1, 3).unwrap().edge_count(), 12);
        assert_eq!(SubgridWindow::new(1, 2, 1, 2).unwrap().edge_count(), 4);
        assert_eq!(SubgridWindow::new(2, 2, 1, 1).unwrap().edge_count(), 0);
    }

    #[test]
    fn three_by_three_window_difference() {
        // A square cycle around a 2x2 block versus the same cycle with one
        // corner vertex dropped: the difference spans a 3x3 face window.
        let g = grid(6, 6);
        let block = [pv(3, 3), pv(3, 4), pv(4, 3), pv(4, 4)];
        let c1 = partition_to_cycle(&g, &Partition2::from_interior(&g, &block).unwrap()).unwrap();
        let grown = [pv(3, 3), pv(3, 4), pv(4, 3), pv(4, 4), pv(5, 4), pv(5, 5), pv(4, 5)];
        let c3 = partition_to_cycle(&g, &Partition2::from_interior(&g, &grown).unwrap()).unwrap();
        let w = locally_different(c1.edges(), c3.edges()).window().unwrap();
        assert_eq!((w.rows(), w.cols()), (3, 3));
        assert_eq!(w.edge_count(), 12);
    }

    use proptest::prelude::*;

    /// Grows a random connected set and keeps it if the complement is connected.
    fn grow(g: &GridDual, seed_v: usize, picks: &[usize]) -> Vec<bool> {
        let mut mask = vec![false; g.vertex_count()];
        mask[seed_v] = true;
        for &k in picks {
            let frontier: Vec<usize> = (0..mask.len())
                .filter(|&v| !mask[v] && g.primal_neighbors(v).iter().any(|&(w, _)| mask[w]))
                .collect();
            if frontier.is_empty() {
                break;
            }
            let v = frontier[k % frontier.len()];
            mask[v] = true;
            if !g.side_connected(&mask, false) {
                mask[v] = false;
            }
        }
        mask
    }

    proptest! {
        #[test]
        fn random_partitions_round_trip(m in 2usize..8, n in 2usize..8, s in 0usize..64,
                                        picks in proptest::collection::vec(0usize..1000, 0..30)) {
            let g = grid(m, n);
            let mask = grow(&g, s % g.vertex_count(), &picks);
            prop_assume!(mask.iter().any(|&x| !x));
            let p = Partition2::from_mask(&g, &mask).unwrap();
            let c = partition_to_cycle(&g, &p).unwrap();
            prop_assert_eq!(c.len(), p.cut_edges(&g).len());
            prop_assert_eq!(cycle_to_partition(&g, &c).unwrap(), p.clone());
            if !p.interior().iter().any(|v| g.is_border(g.vertex_index(*v))) {
                prop_assert!(!c.uses_outer());
            }
        }
    }
}
