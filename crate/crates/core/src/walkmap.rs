//! The walk bijection: a base walk from `D` to `D′`, the map `W → Ŵ` that
//! moves loops onto it, and its inverse.
//!
//! [`WalkMap`] is the graph-agnostic core: given `D` and a base walk `W′` it
//! moves the maximal loops of `W` onto `W′` and back. [`MapContext`] builds
//! `W′` on the grid dual for a pair of locally different paths.

use std::collections::hash_map::DefaultHasher;
use std::collections::{HashMap, HashSet, VecDeque};
use std::hash::{Hash, Hasher};

use serde::Serialize;

use crate::enumerate::{for_each_walk_with_erasure, DualWalk};
use crate::error::{Error, Result};
use crate::grid::{locally_different, DualEdge, DualVertex, GridDual, LocalDifference, SubgridWindow};
use crate::walks::{
    breakdown, loop_erase, loop_events, loop_sequence, loops_at_index, DirectedPath, EdgeLabel, VertexLabel, Walk,
};

/// A walk whose vertex positions remember whether they came from a splice.
struct TaggedWalk<V, E> {
    vertices: Vec<V>,
    edges: Vec<E>,
    original: Vec<bool>,
}

impl<V: VertexLabel, E: EdgeLabel> TaggedWalk<V, E> {
    fn from_walk(w: &Walk<V, E>) -> Self {
        TaggedWalk { vertices: w.vertices().to_vec(), edges: w.edges().to_vec(), original: vec![true; w.vertices().len()] }
    }

    fn first_original(&self, u: V) -> Option<usize> {
        (0..self.vertices.len()).find(|&k| self.original[k] && self.vertices[k] == u)
    }

    /// Splices the closed walk `m` after position `pos`, rotated to the first
    /// appearance of the vertex at `pos`.
    fn splice(&mut self, pos: usize, m: &Walk<V, E>) -> Result<()> {
        let u = self.vertices[pos];
        let t = m.vertices().iter().position(|&x| x == u).ok_or(Error::VertexNotOnLoop(pos))?;
        let rot = m.rotate_closed(t);
        let k = rot.len();
        self.vertices.splice(pos + 1..pos + 1, rot.vertices()[1..].iter().copied());
        self.original.splice(pos + 1..pos + 1, std::iter::repeat(false).take(k));
        self.edges.splice(pos..pos, rot.edges().iter().copied());
        Ok(())
    }

    fn into_walk(self) -> Walk<V, E> {
        Walk::new(self.vertices, self.edges).expect("tagged walk stays well formed")
    }
}

fn concat<V: VertexLabel, E: EdgeLabel>(parts: impl IntoIterator<Item = Walk<V, E>>) -> Option<Walk<V, E>> {
    let mut it = parts.into_iter();
    let mut out = it.next()?;
    for p in it {
        out.append(&p);
    }
    Some(out)
}

/// The loop-moving map for a fixed `D` and base walk `W′`.
#[derive(Debug, Clone)]
pub struct WalkMap<V, E> {
    d: DirectedPath<V, E>,
    base: Walk<V, E>,
    d_rank: HashMap<V, usize>,
    base_rank: HashMap<V, usize>,
    base_order: Vec<V>,
    /// Number of loops at the first appearance of each vertex of `W′`.
    base_loops: HashMap<V, usize>,
}

impl<V: VertexLabel, E: EdgeLabel> WalkMap<V, E> {
    pub fn new(d: DirectedPath<V, E>, base: Walk<V, E>) -> Result<Self> {
        if !d.is_simple() {
            return Err(Error::InvalidInput("D must be a simple path".into()));
        }
        if d.start() != base.start() || d.end() != base.end() {
            return Err(Error::InvalidInput("base walk must share the endpoints of D".into()));
        }
        let base_order = base.vertex_order();
        let base_rank: HashMap<V, usize> = base_order.iter().enumerate().map(|(k, &v)| (v, k)).collect();
        if let Some(v) = d.vertices().iter().find(|v| !base_rank.contains_key(v)) {
            return Err(Error::InvalidInput(format!("base walk misses vertex {v} of D")));
        }
        let d_rank = d.vertices().iter().enumerate().map(|(k, &v)| (v, k)).collect();
        let events = loop_events(&base);
        let first = base.first_appearance();
        let base_loops = first.iter().map(|(&v, &i)| (v, loops_at_index(&events, i).len())).collect();
        Ok(WalkMap { d, base, d_rank, base_rank, base_order, base_loops })
    }

    pub fn d(&self) -> &DirectedPath<V, E> {
        &self.d
    }

    pub fn base(&self) -> &Walk<V, E> {
        &self.base
    }

    /// Moves the maximal loops of `w` onto the base walk.
    pub fn map(&self, w: &Walk<V, E>) -> Result<Walk<V, E>> {
        let dec = loop_erase(w);
        if dec.erasure != self.d {
            return Err(Error::ErasureMismatch);
        }
        // Phase 1: assign loop runs to base vertices. Each list is kept in
        // insertion order; the front of the ordered set is the last entry.
        let mut assigned: HashMap<V, Vec<Walk<V, E>>> = HashMap::new();
        for loops in &dec.loops_at {
            if loops.is_empty() {
                continue;
            }
            let mats: Vec<Walk<V, E>> = loops.iter().map(|l| l.materialize(w)).collect();
            let mut us: Vec<V> = mats
                .iter()
                .flat_map(|m| m.vertices().iter().copied())
                .filter(|v| self.base_rank.contains_key(v))
                .collect::<HashSet<V>>()
                .into_iter()
                .collect();
            us.sort_by_key(|v| self.base_rank[v]);
            let mut jmax = mats.len();
            for u in us {
                if jmax == 0 {
                    break;
                }
                let Some(j) = (0..jmax).find(|&k| mats[k].vertices().contains(&u)) else { continue };
                let m = concat(mats[j..jmax].iter().cloned()).expect("nonempty run");
                assigned.entry(u).or_default().push(m);
                jmax = j;
            }
        }
        // Phase 2: splice, latest-assigned first, at the earliest original
        // appearance of each base vertex.
        let mut out = TaggedWalk::from_walk(&self.base);
        for u in &self.base_order {
            let Some(ms) = assigned.get(u) else { continue };
            for m in ms.iter().rev() {
                let j = out.first_original(*u).expect("base vertex is present");
                out.splice(j, m)?;
            }
        }
        Ok(out.into_walk())
    }

    /// Recovers `w` from `map(w)`.
    pub fn invert(&self, w_hat: &Walk<V, E>) -> Result<Walk<V, E>> {
        let not_in_image = |why: &str| Error::NotInImage(why.to_string());
        let mut wt = w_hat.clone();
        // Per D-vertex, the recovered runs tagged with the base rank of the
        // vertex they were spliced at.
        let mut runs: HashMap<V, Vec<(usize, Walk<V, E>)>> = HashMap::new();
        for u in &self.base_order {
            let lu = self.base_loops[u];
            let i = wt.vertices().iter().position(|x| x == u).ok_or_else(|| not_in_image("base vertex missing"))?;
            let chain = loops_at_index(&loop_events(&wt), i);
            if chain.len() <= lu {
                continue;
            }
            let take = chain.len() - lu;
            let ls: Vec<Walk<V, E>> = chain[..take].iter().map(|l| l.materialize(&wt)).collect();
            let seq = loop_sequence(&ls, &self.d_rank);
            let bd = breakdown(&seq);
            if bd.last() != Some(&(take - 1)) {
                return Err(not_in_image("loops at a base vertex do not end in a breakdown index"));
            }
            let mut prev = 0;
            for &jp in &bd {
                let n = concat(ls[prev..=jp].iter().cloned()).expect("nonempty group");
                let v = self.d.vertices()[seq[jp].expect("breakdown indices are not φ")];
                let last = n.vertices().iter().rposition(|&x| x == v).expect("v lies on its group");
                runs.entry(v).or_default().push((self.base_rank[u], n.rotate_closed(last)));
                prev = jp + 1;
            }
            let end = chain[take - 1].end;
            let mut vs = wt.vertices()[..=i].to_vec();
            vs.extend_from_slice(&wt.vertices()[end + 1..]);
            let mut es = wt.edges()[..i].to_vec();
            es.extend_from_slice(&wt.edges()[end..]);
            wt = Walk::new(vs, es)?;
        }
        if wt != self.base {
            return Err(not_in_image("stripped walk differs from the base walk"));
        }
        let mut out = TaggedWalk::from_walk(&self.d);
        for v in self.d.vertices() {
            let Some(rs) = runs.get_mut(v) else { continue };
            rs.sort_by(|a, b| b.0.cmp(&a.0));
            let m = concat(rs.iter().map(|(_, m)| m.clone())).expect("nonempty");
            let j = out.first_original(*v).expect("D vertex is present");
            out.splice(j, &m)?;
        }
        Ok(out.into_walk())
    }
}

/// Outcome of the no-flip check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NoFlipVerdict {
    /// Directed edges `(p, q)` of `D` whose reverse `(q, p)` is in `D′`.
    pub reversed: Vec<(String, String)>,
    /// The reversed edges with an endpoint outside the window.
    pub violations: Vec<(String, String)>,
    pub holds: bool,
}

/// Lists the edges traversed in opposite directions by `d` and `dp` and
/// checks that all their endpoints satisfy `inside`.
pub fn check_no_flip_with<V: VertexLabel, E: EdgeLabel>(
    d: &DirectedPath<V, E>,
    dp: &DirectedPath<V, E>,
    inside: impl Fn(&V) -> bool,
) -> NoFlipVerdict {
    let forward: HashSet<(V, V, E)> = dp.directed_edges().into_iter().collect();
    let mut reversed = Vec::new();
    let mut violations = Vec::new();
    for (p, q, e) in d.directed_edges() {
        if p != q && forward.contains(&(q, p, e)) {
            let pair = (p.to_string(), q.to_string());
            if !(inside(&p) && inside(&q)) {
                violations.push(pair.clone());
            }
            reversed.push(pair);
        }
    }
    let holds = violations.is_empty();
    NoFlipVerdict { reversed, violations, holds }
}

/// Number of walk edges incident to Outer, with multiplicity.
pub fn outer_edge_count(w: &DualWalk) -> usize {
    w.edges().iter().filter(|e| e.touches_outer()).count()
}

/// Size of the multiset symmetric difference of the directed edges.
pub fn edge_multiset_difference<V: VertexLabel, E: EdgeLabel>(a: &Walk<V, E>, b: &Walk<V, E>) -> usize {
    let mut count: HashMap<(V, V, E), i64> = HashMap::new();
    for t in a.directed_edges() {
        *count.entry(t).or_default() += 1;
    }
    for t in b.directed_edges() {
        *count.entry(t).or_default() -= 1;
    }
    count.values().map(|c| c.unsigned_abs() as usize).sum()
}

/// Natural log of the simple-random-walk probability of following `w`.
pub fn walk_log_probability(g: &GridDual, w: &DualWalk) -> f64 {
    w.vertices()[..w.len()].iter().map(|&v| -(g.dual_degree(v) as f64).ln()).sum()
}

/// Shortest path between two dual vertices through vertices accepted by
/// `allowed`, ties broken by neighbor order.
fn bfs_path(g: &GridDual, from: DualVertex, to: DualVertex, allowed: impl Fn(&DualVertex) -> bool) -> Option<DualWalk> {
    let n = g.dual_vertex_count();
    let (s, t) = (g.dual_index(from), g.dual_index(to));
    let mut prev: Vec<Option<(usize, usize)>> = vec![None; n];
    let mut seen = vec![false; n];
    seen[s] = true;
    let mut queue = VecDeque::from([s]);
    while let Some(x) = queue.pop_front() {
        if x == t {
            break;
        }
        for &(y, e) in g.dual_neighbors(x) {
            if !seen[y] && allowed(&g.dual_vertex(y)) {
                seen[y] = true;
                prev[y] = Some((x, e));
                queue.push_back(y);
            }
        }
    }
    if !seen[t] {
        return None;
    }
    let mut vs = vec![t];
    let mut es = Vec::new();
    let mut cur = t;
    while let Some((p, e)) = prev[cur] {
        vs.push(p);
        es.push(g.dual_edge(e));
        cur = p;
    }
    vs.reverse();
    es.reverse();
    Walk::new(vs.into_iter().map(|v| g.dual_vertex(v)).collect(), es).ok()
}

/// Builds the base walk `W′` for `D`, `D′` locally different in `window`:
/// follow `D` into the window, tour `D`'s inside segments joined along the
/// window perimeter, backtrack, then follow `D′`.
pub fn base_walk(g: &GridDual, d: &DualWalk, dp: &DualWalk, window: &SubgridWindow) -> Result<DualWalk> {
    let violation = |why: &str| Error::WindowViolation(why.to_string());
    for p in [d, dp] {
        if !p.is_simple() || !g.is_valid_walk(p.vertices(), p.edges()) {
            return Err(violation("paths must be simple walks on the dual"));
        }
    }
    if d.start() != dp.start() || d.end() != dp.end() {
        return Err(violation("paths must share endpoints"));
    }
    if window.contains(&d.start()) || window.contains(&d.end()) {
        return Err(violation("endpoints must lie outside the window"));
    }
    if let LocalDifference::Window(w) = locally_different(d.edges(), dp.edges()) {
        if !window.contains_window(&w) {
            return Err(violation("paths differ outside the window"));
        }
    }
    if d == dp {
        return Ok(d.clone());
    }
    if outer_edge_count(dp) > outer_edge_count(d) {
        return Err(Error::OuterDegreeIncrease);
    }
    let dv = d.vertices();
    let inside = |v: &DualVertex| window.contains(v);
    let p0 = dv.iter().position(inside).ok_or_else(|| violation("D never enters the window"))?;
    let last_in = dv.iter().rposition(inside).expect("p0 exists");
    let common = d.edges().iter().zip(dp.edges()).take_while(|(a, b)| a == b).count();

    // The tour from p0 and its modified reverse.
    let outer_in_dp = dp.vertices().contains(&DualVertex::Outer);
    let on_perimeter = |v: &DualVertex| window.on_perimeter(v);
    let mut pieces: Vec<(DualWalk, DualWalk)> = Vec::new();
    let mut k = p0;
    while k < last_in {
        if inside(&dv[k + 1]) {
            let piece = d.slice(k, k + 1);
            pieces.push((piece.clone(), piece.reversed()));
            k += 1;
            continue;
        }
        let r = (k + 1..=last_in).find(|&r| inside(&dv[r])).expect("last_in is inside");
        let perim = bfs_path(g, dv[k], dv[r], on_perimeter).ok_or_else(|| violation("perimeter path not found"))?;
        let fwd = if r == k + 2 && dv[k + 1].is_outer() && !outer_in_dp { d.slice(k, r) } else { perim.clone() };
        pieces.push((fwd, perim.reversed()));
        k = r;
    }
    let mut tour = Walk::trivial(dv[p0]);
    for (f, _) in &pieces {
        tour.append(f);
    }
    for (_, b) in pieces.iter().rev() {
        tour.append(b);
    }

    let w = if common >= p0 {
        let mut w = d.slice(0, p0);
        w.append(&tour);
        w.append(&dp.slice(p0, dp.len()));
        w
    } else {
        // The paths part at Outer just before D enters the window; D′ enters
        // at a different face, joined to p0 through the window.
        let q = dp.vertices()[common + 1];
        if !dv[common].is_outer() || p0 != common + 1 || !inside(&q) {
            return Err(violation("paths diverge outside the window"));
        }
        let conn = bfs_path(g, q, dv[p0], inside).ok_or_else(|| violation("window is not connected"))?;
        let mut w = dp.slice(0, common + 1);
        w.append(&conn);
        w.append(&tour);
        w.append(&conn.reversed());
        w.append(&dp.slice(common + 1, dp.len()));
        w
    };
    Ok(w)
}

/// A pair of locally different dual paths with their base walk.
#[derive(Debug, Clone)]
pub struct MapContext {
    pub d: DualWalk,
    pub d_prime: DualWalk,
    pub window: SubgridWindow,
    pub beta: usize,
    map: WalkMap<DualVertex, DualEdge>,
}

impl MapContext {
    pub fn new(g: &GridDual, d: DualWalk, d_prime: DualWalk, window: SubgridWindow) -> Result<Self> {
        let base = base_walk(g, &d, &d_prime, &window)?;
        if loop_erase(&base).erasure != d_prime {
            return Err(Error::WindowViolation("base walk does not erase to D′".into()));
        }
        let map = WalkMap::new(d.clone(), base)?;
        Ok(MapContext { d, d_prime, beta: window.edge_count(), window, map })
    }

    pub fn base_walk(&self) -> &DualWalk {
        self.map.base()
    }

    /// The `3β²` budget on edge differences.
    pub fn edge_bound(&self) -> usize {
        3 * self.beta * self.beta
    }

    pub fn check_no_flip(&self) -> NoFlipVerdict {
        check_no_flip_with(&self.d, &self.d_prime, |v| self.window.contains(v))
    }

    pub fn map_walk(&self, w: &DualWalk) -> Result<DualWalk> {
        self.map.map(w)
    }

    pub fn invert_map(&self, w_hat: &DualWalk) -> Result<DualWalk> {
        self.map.invert(w_hat)
    }
}

/// All simple paths from `d`'s start to its end that agree with `d` outside
/// `window`, in lexicographic edge order.
pub fn local_variants(g: &GridDual, d: &DualWalk, window: &SubgridWindow) -> Vec<DualWalk> {
    let d_edges: HashSet<usize> = d.edges().iter().map(|e| g.dual_edge_index(e)).collect();
    let allowed: Vec<bool> =
        (0..g.edge_count()).map(|e| d_edges.contains(&e) || window.holds_edge(&g.dual_edge(e))).collect();
    let (s, t) = (g.dual_index(d.start()), g.dual_index(d.end()));
    let mut out = Vec::new();
    let mut on_path = vec![false; g.dual_vertex_count()];
    let mut vs = vec![s];
    let mut es: Vec<usize> = Vec::new();
    on_path[s] = true;
    fn dfs(
        g: &GridDual,
        t: usize,
        allowed: &[bool],
        on_path: &mut [bool],
        vs: &mut Vec<usize>,
        es: &mut Vec<usize>,
        out: &mut Vec<DualWalk>,
    ) {
        let x = *vs.last().unwrap();
        if x == t {
            let w = Walk::new(vs.iter().map(|&v| g.dual_vertex(v)).collect(), es.iter().map(|&e| g.dual_edge(e)).collect());
            out.push(w.expect("well formed"));
            return;
        }
        for &(y, e) in g.dual_neighbors(x) {
            if allowed[e] && !on_path[y] {
                on_path[y] = true;
                vs.push(y);
                es.push(e);
                dfs(g, t, allowed, on_path, vs, es, out);
                es.pop();
                vs.pop();
                on_path[y] = false;
            }
        }
    }
    dfs(g, t, &allowed, &mut on_path, &mut vs, &mut es, &mut out);
    out.retain(|p| match locally_different(d.edges(), p.edges()) {
        LocalDifference::Identical => true,
        LocalDifference::Window(w) => window.contains_window(&w),
    });
    out
}

/// Aggregate of an exhaustive bijection check.
#[derive(Debug, Clone, Serialize)]
pub struct WalkmapReport {
    /// Number of `D′` paths checked.
    pub pairs: usize,
    /// Number of `(W, D′)` instances.
    pub instances: usize,
    pub injective: bool,
    pub erasure_ok: bool,
    pub roundtrip_ok: bool,
    pub outer_ok: bool,
    pub no_flip_ok: bool,
    pub max_edge_diff: usize,
    pub edge_bound: usize,
    /// Smallest `log_4 P(Ŵ)/P(W)` observed.
    pub min_log4_ratio: f64,
    pub ratio_floor: f64,
    pub violations: Vec<String>,
}

impl WalkmapReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

const MAX_REPORTED: usize = 20;

fn hash128<T: Hash>(x: &T) -> u128 {
    let mut a = DefaultHasher::new();
    x.hash(&mut a);
    let mut b = DefaultHasher::new();
    0x9e37_79b9_7f4a_7c15u64.hash(&mut b);
    x.hash(&mut b);
    (u128::from(a.finish()) << 64) | u128::from(b.finish())
}

/// Checks every walk of length `≤ max_len` with erasure `d` (ending at its
/// first visit to `d`'s end) against every local variant `D′` of `d` in
/// `window` whose Outer degree does not exceed that of `d`.
pub fn verify_exhaustive(g: &GridDual, d: &DualWalk, window: &SubgridWindow, max_len: usize) -> Result<WalkmapReport> {
    let variants: Vec<DualWalk> =
        local_variants(g, d, window).into_iter().filter(|p| outer_edge_count(p) <= outer_edge_count(d)).collect();
    let mut walks = Vec::new();
    for_each_walk_with_erasure(g, d, max_len, |w| walks.push(w.clone()));
    let beta = window.edge_count();
    let mut report = WalkmapReport {
        pairs: variants.len(),
        instances: 0,
        injective: true,
        erasure_ok: true,
        roundtrip_ok: true,
        outer_ok: true,
        no_flip_ok: true,
        max_edge_diff: 0,
        edge_bound: 3 * beta * beta,
        min_log4_ratio: 0.0,
        ratio_floor: -((3 * beta * beta) as f64),
        violations: Vec::new(),
    };
    let note = |report: &mut WalkmapReport, msg: String| {
        if report.violations.len() < MAX_REPORTED {
            report.violations.push(msg);
        }
    };
    let ln4 = 4f64.ln();
    for dp in &variants {
        let ctx = MapContext::new(g, d.clone(), dp.clone(), *window)?;
        let verdict = ctx.check_no_flip();
        if !verdict.holds {
            report.no_flip_ok = false;
            note(&mut report, format!("reversed edge outside window for D′:\n{}", dp.trace()));
        }
        let mut seen: HashSet<u128> = HashSet::with_capacity(walks.len());
        for w in &walks {
            report.instances += 1;
            let w_hat = match ctx.map_walk(w) {
                Ok(x) => x,
                Err(e) => {
                    report.roundtrip_ok = false;
                    note(&mut report, format!("map failed ({e}) on:\n{}", w.trace()));
                    continue;
                }
            };
            if !seen.insert(hash128(&w_hat)) {
                report.injective = false;
                note(&mut report, format!("output collision on:\n{}", w.trace()));
            }
            if loop_erase(&w_hat).erasure != *dp {
                report.erasure_ok = false;
                note(&mut report, format!("erasure is not D′ for:\n{}", w.trace()));
            }
            let diff = edge_multiset_difference(w, &w_hat);
            report.max_edge_diff = report.max_edge_diff.max(diff);
            if diff > report.edge_bound {
                note(&mut report, format!("edge difference {diff} for:\n{}", w.trace()));
            }
            if outer_edge_count(&w_hat) > outer_edge_count(w) {
                report.outer_ok = false;
                note(&mut report, format!("Outer degree increased for:\n{}", w.trace()));
            }
            let r = (walk_log_probability(g, &w_hat) - walk_log_probability(g, w)) / ln4;
            report.min_log4_ratio = report.min_log4_ratio.min(r);
            if r < report.ratio_floor - 1e-9 {
                note(&mut report, format!("probability ratio 4^{r:.3} for:\n{}", w.trace()));
            }
            match ctx.invert_map(&w_hat) {
                Ok(back) if back == *w => {}
                _ => {
                    report.roundtrip_ok = false;
                    note(&mut report, format!("inverse failed on:\n{}", w.trace()));
                }
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridDims;
    use crate::walks::tests::{named, Link};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    type Named = Walk<&'static str, Link>;

    fn example_map() -> WalkMap<&'static str, Link> {
        let d = named(&["x", "x1", "x2", "x3", "x6", "y"]);
        let base = named(&["x", "x1", "x2", "x1", "x5", "x4", "x2", "x3", "x6", "y"]);
        WalkMap::new(d, base).unwrap()
    }

    fn check_example(w: &[&'static str], expected: &[&'static str]) {
        let m = example_map();
        let w: Named = named(w);
        let out = m.map(&w).unwrap();
        assert_eq!(out, named(expected));
        assert_eq!(loop_erase(&out).erasure, named(&["x", "x1", "x5", "x4", "x2", "x3", "x6", "y"]));
        assert_eq!(m.invert(&out).unwrap(), w);
    }

    #[test]
    fn example_loops_in_order_at_x3() {
        check_example(
            &["x", "x1", "x2", "x3", "x5", "x3", "x4", "x3", "x6", "x5", "x6", "y"],
            &["x", "x1", "x2", "x1", "x5", "x3", "x4", "x3", "x5", "x6", "x5", "x4", "x2", "x3", "x6", "y"],
        );
    }

    #[test]
    fn example_loops_swapped_at_x3() {
        check_example(
            &["x", "x1", "x2", "x3", "x4", "x3", "x5", "x3", "x6", "x5", "x6", "y"],
            &["x", "x1", "x2", "x1", "x5", "x3", "x5", "x6", "x5", "x4", "x3", "x4", "x2", "x3", "x6", "y"],
        );
    }

    #[test]
    fn example_all_loops_at_x3() {
        check_example(
            &["x", "x1", "x2", "x3", "x4", "x3", "x5", "x6", "x5", "x3", "x6", "y"],
            &["x", "x1", "x2", "x1", "x5", "x6", "x5", "x3", "x5", "x4", "x3", "x4", "x2", "x3", "x6", "y"],
        );
    }

    #[test]
    fn loop_free_walk_maps_to_base() {
        let m = example_map();
        let d = m.d().clone();
        assert_eq!(&m.map(&d).unwrap(), m.base());
        assert_eq!(m.invert(m.base()).unwrap(), d);
    }

    #[test]
    fn wrong_erasure_is_rejected() {
        let m = example_map();
        assert!(matches!(m.map(&named(&["x", "x1", "x5"])), Err(Error::ErasureMismatch)));
        assert!(matches!(m.invert(&named(&["x", "x1", "x2", "x3", "x6", "y"])), Err(Error::NotInImage(_))));
    }

    #[test]
    fn no_flip_negative_control() {
        // A non-grid graph where the outside edge a1-a2 is reversed.
        let d = named(&["x", "h1", "h2", "a1", "a2", "h3", "h4", "y"]);
        let dp = named(&["x", "h1", "h3", "a2", "a1", "h2", "h4", "y"]);
        let inside = |v: &&str| v.starts_with('h');
        let verdict = check_no_flip_with(&d, &dp, inside);
        assert!(!verdict.holds);
        let pairs: Vec<(&str, &str)> = verdict.violations.iter().map(|(p, q)| (p.as_str(), q.as_str())).collect();
        assert_eq!(pairs, vec![("h2", "a1"), ("a1", "a2"), ("a2", "h3")]);
        let same = check_no_flip_with(&d, &d, inside);
        assert!(same.holds && same.reversed.is_empty());
    }

    fn grid(m: usize, n: usize) -> GridDual {
        GridDual::build(GridDims::new(m, n).unwrap()).unwrap()
    }

    fn path(g: &GridDual, vs: &[DualVertex]) -> DualWalk {
        let edges = vs
            .windows(2)
            .map(|p| {
                let a = g.dual_index(p[0]);
                let b = g.dual_index(p[1]);
                let (_, e) = *g.dual_neighbors(a).iter().find(|&&(w, _)| w == b).unwrap();
                g.dual_edge(e)
            })
            .collect();
        Walk::new(vs.to_vec(), edges).unwrap()
    }

    fn f(i: usize, j: usize) -> DualVertex {
        DualVertex::face(i, j)
    }

    #[test]
    fn identical_paths_give_d() {
        let g = grid(4, 4);
        let d = path(&g, &[f(1, 3), f(1, 2), f(2, 2), f(2, 3)]);
        let win = SubgridWindow::new(1, 2, 1, 2).unwrap();
        assert_eq!(base_walk(&g, &d, &d, &win).unwrap(), d);
        assert!(MapContext::new(&g, d.clone(), d.clone(), win).unwrap().check_no_flip().holds);
    }

    #[test]
    fn base_walk_through_outer_detour() {
        let g = grid(4, 4);
        let o = DualVertex::Outer;
        let d = path(&g, &[f(1, 3), f(1, 2), o, f(2, 1), f(2, 2), f(2, 3)]);
        let dp = path(&g, &[f(1, 3), f(1, 2), f(2, 2), f(2, 3)]);
        let win = SubgridWindow::new(1, 2, 1, 2).unwrap();
        let w = base_walk(&g, &d, &dp, &win).unwrap();
        assert_eq!(loop_erase(&w).erasure, dp);
        assert!(outer_edge_count(&w) <= outer_edge_count(&d));
        assert!(w.vertices().contains(&o));
        assert!(w.len() - d.len() <= 3 * win.edge_count().pow(2));
    }

    #[test]
    fn base_walk_anchored_past_outer() {
        // D and D′ leave Outer into different window faces.
        let g = grid(4, 4);
        let o = DualVertex::Outer;
        let d = path(&g, &[f(3, 3), o, f(1, 1), f(1, 2), f(2, 2), f(2, 3)]);
        let dp = path(&g, &[f(3, 3), o, f(2, 1), f(2, 2), f(2, 3)]);
        let win = SubgridWindow::new(1, 2, 1, 2).unwrap();
        let w = base_walk(&g, &d, &dp, &win).unwrap();
        assert_eq!(loop_erase(&w).erasure, dp);
        assert_eq!(outer_edge_count(&w), 2);
        for v in d.vertices().iter().chain(dp.vertices()) {
            assert!(w.vertices().contains(v));
        }
        let ctx = MapContext::new(&g, d.clone(), dp, win).unwrap();
        let mut walks = Vec::new();
        for_each_walk_with_erasure(&g, &d, 9, |w| walks.push(w.clone()));
        assert!(walks.len() > 1);
        for w in &walks {
            let h = ctx.map_walk(w).unwrap();
            assert_eq!(&ctx.invert_map(&h).unwrap(), w);
        }
    }

    #[test]
    fn outer_increase_is_rejected() {
        let g = grid(4, 4);
        let o = DualVertex::Outer;
        let d = path(&g, &[f(1, 3), f(1, 2), f(2, 2), f(2, 3)]);
        let dp = path(&g, &[f(1, 3), f(1, 2), o, f(2, 1), f(2, 2), f(2, 3)]);
        let win = SubgridWindow::new(1, 2, 1, 2).unwrap();
        assert!(matches!(base_walk(&g, &d, &dp, &win), Err(Error::OuterDegreeIncrease)));
        let far = path(&g, &[f(1, 3), f(2, 3)]);
        assert!(matches!(base_walk(&g, &d, &far, &SubgridWindow::new(1, 1, 1, 1).unwrap()), Err(Error::WindowViolation(_))));
    }

    #[test]
    fn small_exhaustive_check() {
        let g = grid(4, 4);
        let d = path(&g, &[f(1, 3), f(1, 2), f(2, 2), f(2, 3)]);
        let win = SubgridWindow::new(1, 2, 1, 2).unwrap();
        let r = verify_exhaustive(&g, &d, &win, 8).unwrap();
        assert!(r.pairs > 1);
        assert!(r.passed(), "{:?}", r.violations);
    }

    /// A random simple path between two faces, grown by a self-avoiding walk.
    fn random_path(g: &GridDual, rng: &mut impl Rng, from: usize, to: usize) -> Option<DualWalk> {
        let mut vs = vec![from];
        let mut es = Vec::new();
        let mut seen = vec![false; g.dual_vertex_count()];
        seen[from] = true;
        while *vs.last().unwrap() != to {
            let x = *vs.last().unwrap();
            let opts: Vec<(usize, usize)> = g.dual_neighbors(x).iter().copied().filter(|&(y, _)| !seen[y]).collect();
            if opts.is_empty() {
                return None;
            }
            let (y, e) = opts[rng.gen_range(0..opts.len())];
            seen[y] = true;
            vs.push(y);
            es.push(e);
        }
        Walk::new(vs.iter().map(|&v| g.dual_vertex(v)).collect(), es.iter().map(|&e| g.dual_edge(e)).collect()).ok()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn random_instances_round_trip(seed in any::<u64>(), size in 4usize..=5) {
            let g = grid(size, size);
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let faces = g.dims().face_count();
            let x = rng.gen_range(0..faces);
            let y = rng.gen_range(0..faces);
            prop_assume!(x != y);
            let d = random_path(&g, &mut rng, x, y);
            prop_assume!(d.is_some());
            let d = d.unwrap();
            let (lo, hi) = (rng.gen_range(1..size - 1), rng.gen_range(1..size - 1));
            let win = SubgridWindow::new(lo.min(hi), lo.max(hi), 1, size - 1).unwrap();
            prop_assume!(!win.contains(&d.start()) && !win.contains(&d.end()));
            let variants: Vec<DualWalk> = local_variants(&g, &d, &win)
                .into_iter()
                .filter(|p| outer_edge_count(p) <= outer_edge_count(&d))
                .collect();
            prop_assume!(!variants.is_empty());
            let dp = variants[rng.gen_range(0..variants.len())].clone();
            let ctx = MapContext::new(&g, d.clone(), dp.clone(), win).unwrap();
            prop_assert!(ctx.check_no_flip().holds);
            // A random walk conditioned on erasure d: insert random loops.
            let mut w = d.clone();
            for _ in 0..3 {
                let pos = rng.gen_range(0..w.vertices().len() - 1);
                let v = g.dual_index(w.vertices()[pos]);
                let nb = g.dual_neighbors(v);
                let (u, e) = nb[rng.gen_range(0..nb.len())];
                let lp = Walk::new(vec![g.dual_vertex(v), g.dual_vertex(u), g.dual_vertex(v)], vec![g.dual_edge(e), g.dual_edge(e)]).unwrap();
                let cand = crate::walks::splice(&w, &lp, pos).unwrap();
                if loop_erase(&cand).erasure == d && !cand.vertices()[..cand.len()].contains(&d.end()) {
                    w = cand;
                }
            }
            let h = ctx.map_walk(&w).unwrap();
            prop_assert_eq!(&loop_erase(&h).erasure, &dp);
            prop_assert!(outer_edge_count(&h) <= outer_edge_count(&w));
            prop_assert!(edge_multiset_difference(&w, &h) <= ctx.edge_bound());
            prop_assert_eq!(ctx.invert_map(&h).unwrap(), w);
        }
    }
}
