//! Structural toolkit on grid 2-colorings: regions and islands, disposable
//! vertices, cross-structures, island walks, thin structures, elbows, and
//! the local case classification around a separated edge.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridDims, GridDual, Partition2, PrimalVertex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Color {
    Red,
    Blue,
}

impl Color {
    pub fn flipped(self) -> Color {
        match self {
            Color::Red => Color::Blue,
            Color::Blue => Color::Red,
        }
    }

    fn from_red(red: bool) -> Color {
        if red {
            Color::Red
        } else {
            Color::Blue
        }
    }
}

/// A red/blue color per primal vertex, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Coloring {
    dims: GridDims,
    red: Vec<bool>,
}

impl Coloring {
    pub fn new(dims: GridDims, red: Vec<bool>) -> Result<Self> {
        if red.len() != dims.vertex_count() {
            return Err(Error::InvalidInput(format!("expected {} colors, got {}", dims.vertex_count(), red.len())));
        }
        Ok(Coloring { dims, red })
    }

    /// Interior vertices red, exterior blue.
    pub fn from_partition(p: &Partition2) -> Self {
        Coloring { dims: p.dims(), red: p.mask().to_vec() }
    }

    /// Parses whitespace-separated rows of `r`/`b` characters.
    pub fn parse(s: &str) -> Result<Self> {
        let rows: Vec<&str> = s.split_whitespace().collect();
        let cols = rows.first().map_or(0, |r| r.chars().count());
        let mut red = Vec::with_capacity(rows.len() * cols);
        for row in &rows {
            if row.chars().count() != cols {
                return Err(Error::Parse("coloring rows differ in length".into()));
            }
            for ch in row.chars() {
                red.push(match ch.to_ascii_lowercase() {
                    'r' => true,
                    'b' => false,
                    other => return Err(Error::Parse(format!("unexpected color character {other:?}"))),
                });
            }
        }
        let dims = GridDims::new(rows.len(), cols).map_err(|_| Error::Parse("coloring must be at least 2x2".into()))?;
        Coloring::new(dims, red)
    }

    pub fn dims(&self) -> GridDims {
        self.dims
    }

    pub fn red_mask(&self) -> &[bool] {
        &self.red
    }

    pub fn color(&self, v: usize) -> Color {
        Color::from_red(self.red[v])
    }

    pub fn color_of(&self, p: PrimalVertex) -> Color {
        self.color(vertex_idx(self.dims, p))
    }

    pub fn set(&mut self, v: usize, c: Color) {
        self.red[v] = c == Color::Red;
    }

    pub fn flip(&mut self, v: usize) {
        self.red[v] = !self.red[v];
    }

    pub fn with_flipped(&self, vs: &[usize]) -> Coloring {
        let mut out = self.clone();
        for &v in vs {
            out.flip(v);
        }
        out
    }

    pub fn count(&self, c: Color) -> usize {
        let reds = self.red.iter().filter(|&&r| r).count();
        match c {
            Color::Red => reds,
            Color::Blue => self.red.len() - reds,
        }
    }

    /// The partition with the red side as its mask, if the coloring is feasible.
    pub fn to_partition(&self, g: &GridDual) -> Result<Partition2> {
        Partition2::from_mask(g, &self.red)
    }
}

impl fmt::Display for Coloring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, row) in self.red.chunks(self.dims.cols).enumerate() {
            if k > 0 {
                writeln!(f)?;
            }
            for &r in row {
                f.write_str(if r { "r" } else { "b" })?;
            }
        }
        Ok(())
    }
}

fn vertex_idx(dims: GridDims, p: PrimalVertex) -> usize {
    (p.i - 1) * dims.cols + (p.j - 1)
}

/// A step direction `(di, dj)` with rows growing downward.
pub type Dir = (isize, isize);

pub const DIRS: [Dir; 4] = [(-1, 0), (0, 1), (1, 0), (0, -1)];

/// Clockwise quarter turn.
pub fn right_of(d: Dir) -> Dir {
    (d.1, -d.0)
}

/// Counter-clockwise quarter turn.
pub fn left_of(d: Dir) -> Dir {
    (-d.1, d.0)
}

/// The vertex one step from `v` in direction `d`, if inside the grid.
pub fn step(dims: GridDims, v: usize, d: Dir) -> Option<usize> {
    let i = (v / dims.cols) as isize + d.0;
    let j = (v % dims.cols) as isize + d.1;
    (i >= 0 && j >= 0 && (i as usize) < dims.rows && (j as usize) < dims.cols).then(|| i as usize * dims.cols + j as usize)
}

fn dir_between(dims: GridDims, a: usize, b: usize) -> Option<Dir> {
    DIRS.into_iter().find(|&d| step(dims, a, d) == Some(b))
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// A maximal monochromatic connected vertex set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Region {
    pub color: Color,
    /// Vertex indices in increasing order.
    pub vertices: Vec<usize>,
    pub is_island: bool,
}

/// Regions and a per-vertex region id.
#[derive(Debug, Clone)]
pub struct RegionMap {
    pub regions: Vec<Region>,
    pub label: Vec<usize>,
}

impl RegionMap {
    pub fn count(&self, c: Color) -> usize {
        self.regions.iter().filter(|r| r.color == c).count()
    }

    pub fn islands(&self, c: Color) -> usize {
        self.regions.iter().filter(|r| r.color == c && r.is_island).count()
    }
}

/// Regions ordered by their smallest vertex.
pub fn find_regions(g: &GridDual, c: &Coloring) -> RegionMap {
    let n = g.vertex_count();
    let mut uf = UnionFind::new(n);
    for e in 0..g.edge_count() {
        let (a, b) = g.edge_ends(e);
        if c.red[a] == c.red[b] {
            uf.union(a, b);
        }
    }
    let mut label = vec![usize::MAX; n];
    let mut regions: Vec<Region> = Vec::new();
    for v in 0..n {
        let root = uf.find(v);
        if label[root] == usize::MAX {
            label[root] = regions.len();
            regions.push(Region { color: c.color(v), vertices: Vec::new(), is_island: true });
        }
        let id = label[root];
        label[v] = id;
        regions[id].vertices.push(v);
        if g.is_border(v) {
            regions[id].is_island = false;
        }
    }
    RegionMap { regions, label }
}

/// One region of each color.
pub fn is_feasible(g: &GridDual, c: &Coloring) -> bool {
    let r = find_regions(g, c);
    r.count(Color::Red) == 1 && r.count(Color::Blue) == 1
}

fn region_minus_connected(g: &GridDual, members: &[bool], removed: &[bool]) -> bool {
    let n = g.vertex_count();
    let Some(start) = (0..n).find(|&v| members[v] && !removed[v]) else { return true };
    let mut seen = vec![false; n];
    seen[start] = true;
    let mut stack = vec![start];
    let mut reached = 1;
    while let Some(x) = stack.pop() {
        for &(y, _) in g.primal_neighbors(x) {
            if members[y] && !removed[y] && !seen[y] {
                seen[y] = true;
                reached += 1;
                stack.push(y);
            }
        }
    }
    reached == (0..n).filter(|&v| members[v] && !removed[v]).count()
}

/// Whether removing `set` from its region leaves the rest connected. All
/// vertices of `set` must share one region.
pub fn is_disposable_set(g: &GridDual, c: &Coloring, set: &[usize]) -> bool {
    let regions = find_regions(g, c);
    let Some(&first) = set.first() else { return true };
    let id = regions.label[first];
    if set.iter().any(|&v| regions.label[v] != id) {
        return false;
    }
    let members: Vec<bool> = regions.label.iter().map(|&l| l == id).collect();
    let mut removed = vec![false; g.vertex_count()];
    for &v in set {
        removed[v] = true;
    }
    region_minus_connected(g, &members, &removed)
}

pub fn is_disposable(g: &GridDual, c: &Coloring, v: usize) -> bool {
    is_disposable_set(g, c, &[v])
}

/// Top-left corners of every diagonally colored 2×2 block.
pub fn detect_cross_structures(c: &Coloring) -> Vec<PrimalVertex> {
    let (m, n) = (c.dims.rows, c.dims.cols);
    let mut out = Vec::new();
    for i in 0..m - 1 {
        for j in 0..n - 1 {
            let tl = c.red[i * n + j];
            let tr = c.red[i * n + j + 1];
            let bl = c.red[(i + 1) * n + j];
            let br = c.red[(i + 1) * n + j + 1];
            if tl == br && tr == bl && tl != tr {
                out.push(PrimalVertex::new(i + 1, j + 1));
            }
        }
    }
    out
}

/// Number of cut edges on the grid border, i.e. the Outer dual degree.
pub fn outer_degree(g: &GridDual, c: &Coloring) -> usize {
    (0..g.edge_count())
        .filter(|&e| {
            let (a, b) = g.edge_ends(e);
            g.is_boundary_edge(e) && c.red[a] != c.red[b]
        })
        .count()
}

/// A closed walk around an island on the opposite color.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IslandWalk {
    /// Vertex indices; the first equals the last.
    pub walk: Vec<usize>,
    /// `(island vertex, neighbor)` pairs in visiting order.
    pub spokes: Vec<(usize, usize)>,
}

/// Traces the island's boundary clockwise, keeping the island on the right.
pub fn island_walk(g: &GridDual, c: &Coloring, island: &Region) -> Result<IslandWalk> {
    if !island.is_island {
        return Err(Error::NotAnIsland);
    }
    if !detect_cross_structures(c).is_empty() {
        return Err(Error::CrossStructurePresent);
    }
    let dims = c.dims;
    let mut inside = vec![false; g.vertex_count()];
    for &v in &island.vertices {
        inside[v] = true;
    }
    let r0 = island.vertices[0];
    let b0 = step(dims, r0, (-1, 0)).expect("an island never touches the border");
    let mut r = r0;
    let mut b = b0;
    let mut h: Dir = (0, 1);
    let mut walk = vec![b0];
    let mut spokes = Vec::new();
    loop {
        spokes.push((r, b));
        let r_next = step(dims, r, h).expect("island neighbors are inside the grid");
        let b_next = step(dims, b, h).expect("island neighbors are inside the grid");
        if inside[b_next] {
            r = b_next;
            h = left_of(h);
        } else if inside[r_next] {
            r = r_next;
            b = b_next;
            walk.push(b);
        } else {
            walk.push(b_next);
            walk.push(r_next);
            b = r_next;
            h = right_of(h);
        }
        if (r, b) == (r0, b0) {
            break;
        }
    }
    let total: usize = island
        .vertices
        .iter()
        .map(|&v| g.primal_neighbors(v).iter().filter(|&&(w, _)| !inside[w]).count())
        .sum();
    if spokes.len() != total {
        return Err(Error::IslandHasHole);
    }
    Ok(IslandWalk { walk, spokes })
}

/// Kind of thin structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ThinKind {
    #[serde(rename = "1-thin")]
    One,
    #[serde(rename = "2-thin")]
    Two,
}

/// A width-1 or width-2 bridge between two opposite-color regions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ThinStructure {
    pub kind: ThinKind,
    /// The bridge vertices, flipped on resolution.
    pub vertices: Vec<usize>,
    /// The two flanking opposite-color vertices.
    pub flanks: [usize; 2],
    /// Region ids of the flanks in the coloring's region map.
    pub flank_regions: [usize; 2],
}

/// Thin sites whose flanks lie in distinct regions, one of them an island.
pub fn find_thin_structures(g: &GridDual, c: &Coloring) -> Vec<ThinStructure> {
    let regions = find_regions(g, c);
    let dims = c.dims;
    let mut out = Vec::new();
    let qualifies = |a: usize, b: usize| {
        let (ra, rb) = (regions.label[a], regions.label[b]);
        ra != rb && (regions.regions[ra].is_island || regions.regions[rb].is_island)
    };
    for w in 0..g.vertex_count() {
        for axis in [(0, 1), (1, 0)] {
            let back = (-axis.0, -axis.1);
            let Some(a) = step(dims, w, back) else { continue };
            if c.red[a] == c.red[w] {
                continue;
            }
            let Some(b) = step(dims, w, axis) else { continue };
            if c.red[b] != c.red[w] {
                if qualifies(a, b) {
                    out.push(ThinStructure {
                        kind: ThinKind::One,
                        vertices: vec![w],
                        flanks: [a, b],
                        flank_regions: [regions.label[a], regions.label[b]],
                    });
                }
                continue;
            }
            let Some(b2) = step(dims, b, axis) else { continue };
            if c.red[b2] != c.red[w] && qualifies(a, b2) {
                out.push(ThinStructure {
                    kind: ThinKind::Two,
                    vertices: vec![w, b],
                    flanks: [a, b2],
                    flank_regions: [regions.label[a], regions.label[b2]],
                });
            }
        }
    }
    out
}

/// Flips the bridge vertices.
pub fn resolve_thin(c: &Coloring, t: &ThinStructure) -> Coloring {
    c.with_flipped(&t.vertices)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ElbowClass {
    Disposable,
    ForcedNeighborhood,
}

/// The elbow orientations at `v`: perpendicular pairs `(a, b)` with both
/// `v + a` and `v + b` of the opposite color.
pub fn elbow_orientations(c: &Coloring, v: usize) -> Vec<(Dir, Dir)> {
    let dims = c.dims;
    let mut out = Vec::new();
    for a in DIRS {
        let b = right_of(a);
        let opp = |d: Dir| step(dims, v, d).is_some_and(|w| c.red[w] != c.red[v]);
        if opp(a) && opp(b) {
            out.push((a, b));
        }
    }
    out
}

/// Classifies the highlighted vertex of an elbow from its neighborhood. The
/// forced neighborhood has both remaining neighbors of `v`'s color and the
/// cell diagonal to them of the opposite color.
pub fn elbow_classify(c: &Coloring, v: usize) -> Result<ElbowClass> {
    let orients = elbow_orientations(c, v);
    if orients.is_empty() {
        return Err(Error::PatternMismatch("no elbow at this vertex".into()));
    }
    let dims = c.dims;
    for (a, b) in orients {
        let na = step(dims, v, (-a.0, -a.1));
        let nb = step(dims, v, (-b.0, -b.1));
        let diag = step(dims, v, (-a.0 - b.0, -a.1 - b.1));
        if let (Some(x), Some(y), Some(z)) = (na, nb, diag) {
            if c.red[x] == c.red[v] && c.red[y] == c.red[v] && c.red[z] != c.red[v] {
                return Ok(ElbowClass::ForcedNeighborhood);
            }
        }
    }
    Ok(ElbowClass::Disposable)
}

/// Local picture around a separated edge `(u, v)` with `u` on the side being
/// examined: the faces `x` (ahead-left) and `y` (ahead-right) behind `u`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LocalPicture {
    pub x_degree: usize,
    pub y_degree: usize,
    pub x_right: bool,
    pub y_right: bool,
    /// Whether the edge between `u` and the vertex behind it is cut.
    pub xy_cut: bool,
}

fn local_picture(c: &Coloring, u: usize, v: usize) -> Result<LocalPicture> {
    let dims = c.dims;
    let d = dir_between(dims, u, v).ok_or_else(|| Error::InvalidInput("u and v must be adjacent".into()))?;
    if c.red[u] == c.red[v] {
        return Err(Error::InvalidInput("u and v must have different colors".into()));
    }
    let back_d = (-d.0, -d.1);
    let up_d = left_of(d);
    let down_d = right_of(d);
    let boundary = || Error::PatternMismatch("u is too close to the border".into());
    let back = step(dims, u, back_d).ok_or_else(boundary)?;
    let up = step(dims, u, up_d).ok_or_else(boundary)?;
    let down = step(dims, u, down_d).ok_or_else(boundary)?;
    let ul = step(dims, up, back_d).ok_or_else(boundary)?;
    let dl = step(dims, down, back_d).ok_or_else(boundary)?;
    let cut = |a: usize, b: usize| c.red[a] != c.red[b];
    let x_degree = [(u, up), (up, ul), (ul, back), (back, u)].iter().filter(|&&(a, b)| cut(a, b)).count();
    let y_degree = [(u, down), (down, dl), (dl, back), (back, u)].iter().filter(|&&(a, b)| cut(a, b)).count();
    Ok(LocalPicture { x_degree, y_degree, x_right: cut(u, up), y_right: cut(u, down), xy_cut: cut(u, back) })
}

/// Case number 1–8 of the neighborhood of `u` for the separated edge
/// `(u, v)`. Cases 1–4 are the easy ones.
pub fn classify_case(c: &Coloring, u: usize, v: usize) -> Result<u8> {
    let p = local_picture(c, u, v)?;
    let bad = |why: &str| Err(Error::PatternMismatch(why.into()));
    match (p.x_degree, p.y_degree) {
        (0, 0) => Ok(1),
        (2, 0) => Ok(if p.x_right { 2 } else { 5 }),
        (0, 2) => Ok(if p.y_right { 2 } else { 5 }),
        (2, 2) => {
            let rights = usize::from(p.x_right) + usize::from(p.y_right);
            match (p.xy_cut, rights) {
                (true, 1) => Ok(3),
                (true, 0) => Ok(7),
                (true, _) => bad("u is a singleton of its color"),
                (false, 2) => Ok(4),
                (false, 1) => Ok(6),
                (false, _) => Ok(8),
            }
        }
        _ => bad("a face around u has degree 4; the coloring is not a single cycle"),
    }
}
