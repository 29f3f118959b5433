//! ReCom chain on node-weighted graphs: merge two adjacent districts, draw a
//! uniform spanning tree of the union, and cut one balanced tree edge.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridDual;
use crate::sampler::wilson_ust;

/// Trees drawn per step before giving up.
pub const STEP_RETRIES: usize = 100;
/// Trees drawn per carved district when building an initial plan.
pub const INIT_RETRIES: usize = 1000;
const WEIGHT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NodeId {
    Num(u64),
    Text(String),
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeId::Num(n) => write!(f, "{n}"),
            NodeId::Text(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: NodeId,
    pub weight: f64,
    /// Optional planar position, carried through untouched.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pos: Option<[f64; 2]>,
}

/// On-disk schema: `{nodes: [{id, weight}], edges: [[id, id]]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphFile {
    pub nodes: Vec<NodeRecord>,
    pub edges: Vec<[NodeId; 2]>,
}

/// A connected simple graph with nonnegative node weights.
#[derive(Debug, Clone)]
pub struct WeightedGraph {
    nodes: Vec<NodeRecord>,
    edges: Vec<(usize, usize)>,
    adj: Vec<Vec<(usize, usize)>>,
}

impl WeightedGraph {
    pub fn from_file(file: GraphFile) -> Result<Self> {
        let mut index = HashMap::new();
        for (k, n) in file.nodes.iter().enumerate() {
            if !(n.weight >= 0.0 && n.weight.is_finite()) {
                return Err(Error::Parse(format!("node {} has invalid weight {}", n.id, n.weight)));
            }
            if index.insert(n.id.clone(), k).is_some() {
                return Err(Error::Parse(format!("duplicate node id {}", n.id)));
            }
        }
        if file.nodes.is_empty() {
            return Err(Error::Parse("graph has no nodes".into()));
        }
        let mut seen = BTreeSet::new();
        let mut edges = Vec::with_capacity(file.edges.len());
        for [a, b] in &file.edges {
            let lookup = |id: &NodeId| index.get(id).copied().ok_or_else(|| Error::Parse(format!("unknown node id {id}")));
            let (x, y) = (lookup(a)?, lookup(b)?);
            if x == y {
                return Err(Error::Parse(format!("self-loop at {a}")));
            }
            if !seen.insert((x.min(y), x.max(y))) {
                return Err(Error::Parse(format!("duplicate edge {a}-{b}")));
            }
            edges.push((x, y));
        }
        let mut adj = vec![Vec::new(); file.nodes.len()];
        for (e, &(x, y)) in edges.iter().enumerate() {
            adj[x].push((y, e));
            adj[y].push((x, e));
        }
        let g = WeightedGraph { nodes: file.nodes, edges, adj };
        if !g.is_connected(&vec![true; g.node_count()]) {
            return Err(Error::DisconnectedGraph);
        }
        Ok(g)
    }

    /// The primal grid with unit weights, ids equal to vertex indices and
    /// positions `(i, j)`.
    pub fn from_grid(g: &GridDual) -> Self {
        let nodes = (0..g.vertex_count())
            .map(|v| {
                let p = g.vertex(v);
                NodeRecord { id: NodeId::Num(v as u64), weight: 1.0, pos: Some([p.i as f64, p.j as f64]) }
            })
            .collect();
        let edges = (0..g.edge_count())
            .map(|e| {
                let (a, b) = g.edge_ends(e);
                [NodeId::Num(a as u64), NodeId::Num(b as u64)]
            })
            .collect();
        WeightedGraph::from_file(GraphFile { nodes, edges }).expect("grids are connected and simple")
    }

    pub fn to_file(&self) -> GraphFile {
        GraphFile {
            nodes: self.nodes.clone(),
            edges: self.edges.iter().map(|&(a, b)| [self.nodes[a].id.clone(), self.nodes[b].id.clone()]).collect(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn id(&self, v: usize) -> &NodeId {
        &self.nodes[v].id
    }

    pub fn weight(&self, v: usize) -> f64 {
        self.nodes[v].weight
    }

    pub fn total_weight(&self) -> f64 {
        self.nodes.iter().map(|n| n.weight).sum()
    }

    pub fn neighbors(&self, v: usize) -> &[(usize, usize)] {
        &self.adj[v]
    }

    /// Whether the nodes with `member[v]` set induce a nonempty connected subgraph.
    pub fn is_connected(&self, member: &[bool]) -> bool {
        let Some(start) = member.iter().position(|&m| m) else { return false };
        let mut seen = vec![false; self.node_count()];
        seen[start] = true;
        let mut stack = vec![start];
        let mut reached = 1;
        while let Some(x) = stack.pop() {
            for &(y, _) in &self.adj[x] {
                if member[y] && !seen[y] {
                    seen[y] = true;
                    reached += 1;
                    stack.push(y);
                }
            }
        }
        reached == member.iter().filter(|&&m| m).count()
    }
}

pub fn load_graph(path: &Path) -> Result<WeightedGraph> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    parse_graph(&text)
}

pub fn parse_graph(text: &str) -> Result<WeightedGraph> {
    let file: GraphFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    WeightedGraph::from_file(file)
}

/// A district plan: `assignment[v]` is in `0..k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct KPartition {
    pub assignment: Vec<usize>,
    pub k: usize,
}

/// Weight bounds `(1 ± eps) · total / k`, slightly widened for rounding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Balance {
    pub lo: f64,
    pub hi: f64,
}

impl Balance {
    pub fn new(g: &WeightedGraph, k: usize, eps: f64) -> Self {
        let ideal = g.total_weight() / k as f64;
        let slack = WEIGHT_TOL * ideal.max(1.0);
        Balance { lo: (1.0 - eps) * ideal - slack, hi: (1.0 + eps) * ideal + slack }
    }

    pub fn admits(&self, w: f64) -> bool {
        w >= self.lo && w <= self.hi
    }
}

impl KPartition {
    pub fn district_weights(&self, g: &WeightedGraph) -> Vec<f64> {
        let mut w = vec![0.0; self.k];
        for (v, &d) in self.assignment.iter().enumerate() {
            w[d] += g.weight(v);
        }
        w
    }

    /// Contiguity and balance of every district.
    pub fn validate(&self, g: &WeightedGraph, eps: f64) -> Result<()> {
        if self.assignment.len() != g.node_count() {
            return Err(Error::InvalidInput("assignment length differs from node count".into()));
        }
        if let Some(&d) = self.assignment.iter().find(|&&d| d >= self.k) {
            return Err(Error::InvalidInput(format!("district {d} out of range for k = {}", self.k)));
        }
        let bal = Balance::new(g, self.k, eps);
        for (d, w) in self.district_weights(g).into_iter().enumerate() {
            let member: Vec<bool> = self.assignment.iter().map(|&a| a == d).collect();
            if !g.is_connected(&member) {
                return Err(Error::InvalidInput(format!("district {d} is empty or disconnected")));
            }
            if !bal.admits(w) {
                return Err(Error::InvalidInput(format!("district {d} weight {w} outside [{}, {}]", bal.lo, bal.hi)));
            }
        }
        Ok(())
    }

    /// Whether edge `e` joins two districts.
    pub fn cuts(&self, g: &WeightedGraph, e: usize) -> bool {
        let (a, b) = g.edges()[e];
        self.assignment[a] != self.assignment[b]
    }

    /// Adjacent district pairs `(a, b)` with `a < b`, sorted.
    pub fn adjacent_pairs(&self, g: &WeightedGraph) -> Vec<(usize, usize)> {
        let set: BTreeSet<(usize, usize)> = g
            .edges()
            .iter()
            .filter_map(|&(x, y)| {
                let (a, b) = (self.assignment[x], self.assignment[y]);
                (a != b).then(|| (a.min(b), a.max(b)))
            })
            .collect();
        set.into_iter().collect()
    }
}

/// A uniform spanning tree of the nodes in `members`, as adjacency lists
/// over positions in `members`.
fn region_tree(g: &WeightedGraph, members: &[usize], rng: &mut impl Rng) -> Result<Vec<Vec<usize>>> {
    let mut local = vec![usize::MAX; g.node_count()];
    for (k, &v) in members.iter().enumerate() {
        local[v] = k;
    }
    let adj: Vec<Vec<(usize, usize)>> = members
        .iter()
        .map(|&v| {
            g.neighbors(v).iter().filter(|&&(w, _)| local[w] != usize::MAX).map(|&(w, e)| (local[w], e)).collect()
        })
        .collect();
    let n = members.len() as u64;
    let root = rng.gen_range(0..members.len());
    let tree = wilson_ust(&adj, root, rng, 64 * n * n + 64)?;
    let mut out = vec![Vec::new(); members.len()];
    for e in tree {
        let (a, b) = g.edges()[e];
        let (x, y) = (local[a], local[b]);
        out[x].push(y);
        out[y].push(x);
    }
    Ok(out)
}

/// Parent pointers, a preorder, and subtree weights of a tree rooted at 0.
fn subtree_weights(tree: &[Vec<usize>], weight: impl Fn(usize) -> f64) -> (Vec<usize>, Vec<usize>, Vec<f64>) {
    let n = tree.len();
    let mut parent = vec![usize::MAX; n];
    let mut order = Vec::with_capacity(n);
    let mut stack = vec![0];
    parent[0] = 0;
    while let Some(x) = stack.pop() {
        order.push(x);
        for &y in &tree[x] {
            if parent[y] == usize::MAX {
                parent[y] = x;
                stack.push(y);
            }
        }
    }
    let mut sub: Vec<f64> = (0..n).map(&weight).collect();
    for &x in order.iter().rev().take(n.saturating_sub(1)) {
        sub[parent[x]] += sub[x];
    }
    (parent, order, sub)
}

fn subtree_members(tree: &[Vec<usize>], parent: &[usize], child: usize) -> Vec<bool> {
    let mut inside = vec![false; tree.len()];
    inside[child] = true;
    let mut stack = vec![child];
    while let Some(x) = stack.pop() {
        for &y in &tree[x] {
            if y != parent[x] && !inside[y] {
                inside[y] = true;
                stack.push(y);
            }
        }
    }
    inside
}

/// One ReCom move. The split edge is uniform among the tree edges whose two
/// sides both satisfy the balance bounds.
pub fn recom_step(g: &WeightedGraph, p: &KPartition, eps: f64, rng: &mut impl Rng) -> Result<KPartition> {
    let pairs = p.adjacent_pairs(g);
    if pairs.is_empty() {
        return Err(Error::StepFailed("no adjacent districts".into()));
    }
    let (a, b) = pairs[rng.gen_range(0..pairs.len())];
    let members: Vec<usize> = (0..g.node_count()).filter(|&v| p.assignment[v] == a || p.assignment[v] == b).collect();
    let bal = Balance::new(g, p.k, eps);
    let total: f64 = members.iter().map(|&v| g.weight(v)).sum();
    for _ in 0..STEP_RETRIES {
        let tree = region_tree(g, &members, rng)?;
        let (parent, order, sub) = subtree_weights(&tree, |x| g.weight(members[x]));
        let cuts: Vec<usize> = order[1..].iter().copied().filter(|&x| bal.admits(sub[x]) && bal.admits(total - sub[x])).collect();
        if cuts.is_empty() {
            continue;
        }
        let child = cuts[rng.gen_range(0..cuts.len())];
        let inside = subtree_members(&tree, &parent, child);
        // The side holding the first merged node keeps label `a`.
        let (label_in, label_out) = if inside[0] { (a, b) } else { (b, a) };
        let mut next = p.clone();
        for (x, &v) in members.iter().enumerate() {
            next.assignment[v] = if inside[x] { label_in } else { label_out };
        }
        return Ok(next);
    }
    Err(Error::StepFailed(format!("no balanced split of districts {a} and {b} in {STEP_RETRIES} trees")))
}

/// Builds a plan by carving off one balanced district at a time from
/// uniform spanning trees of the remaining region.
pub fn initial_partition(g: &WeightedGraph, k: usize, eps: f64, rng: &mut impl Rng) -> Result<KPartition> {
    if k == 0 || k > g.node_count() {
        return Err(Error::InvalidInput(format!("k = {k} must lie in 1..={}", g.node_count())));
    }
    let bal = Balance::new(g, k, eps);
    let mut assignment = vec![k - 1; g.node_count()];
    let mut remaining: Vec<usize> = (0..g.node_count()).collect();
    for d in 0..k - 1 {
        let left = (k - d - 1) as f64;
        let total: f64 = remaining.iter().map(|&v| g.weight(v)).sum();
        let rest_ok = |w: f64| w >= left * bal.lo && w <= left * bal.hi;
        let mut carved = None;
        for _ in 0..INIT_RETRIES {
            let tree = region_tree(g, &remaining, rng)?;
            let (parent, order, sub) = subtree_weights(&tree, |x| g.weight(remaining[x]));
            // Candidate pieces: a subtree or its complement.
            let mut cands = Vec::new();
            for &x in &order[1..] {
                if bal.admits(sub[x]) && rest_ok(total - sub[x]) {
                    cands.push((x, true));
                }
                if bal.admits(total - sub[x]) && rest_ok(sub[x]) {
                    cands.push((x, false));
                }
            }
            if cands.is_empty() {
                continue;
            }
            let (x, take_subtree) = cands[rng.gen_range(0..cands.len())];
            let inside = subtree_members(&tree, &parent, x);
            carved = Some(remaining.iter().enumerate().filter(|&(i, _)| inside[i] == take_subtree).map(|(_, &v)| v).collect::<Vec<_>>());
            break;
        }
        let piece = carved.ok_or_else(|| Error::StepFailed(format!("could not carve district {d} in {INIT_RETRIES} trees")))?;
        for &v in &piece {
            assignment[v] = d;
        }
        remaining.retain(|v| assignment[*v] != d);
    }
    let p = KPartition { assignment, k };
    p.validate(g, eps)?;
    Ok(p)
}

/// The chain as a stream: yields `(step, state)` for the initial state and
/// then every `thin`-th state up to `steps`.
pub struct Chain<'g, R> {
    g: &'g WeightedGraph,
    eps: f64,
    state: KPartition,
    rng: R,
    step: usize,
    steps: usize,
    thin: usize,
    started: bool,
    failed: bool,
}

pub fn run_chain<R: Rng>(g: &WeightedGraph, init: KPartition, eps: f64, steps: usize, thin: usize, rng: R) -> Chain<'_, R> {
    Chain { g, eps, state: init, rng, step: 0, steps, thin: thin.max(1), started: false, failed: false }
}

impl<R: Rng> Iterator for Chain<'_, R> {
    type Item = Result<(usize, KPartition)>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        if !self.started {
            self.started = true;
            return Some(Ok((0, self.state.clone())));
        }
        while self.step < self.steps {
            match recom_step(self.g, &self.state, self.eps, &mut self.rng) {
                Ok(next) => self.state = next,
                Err(e) => {
                    self.failed = true;
                    return Some(Err(e));
                }
            }
            self.step += 1;
            if self.step % self.thin == 0 {
                return Some(Ok((self.step, self.state.clone())));
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridDims;
    use crate::oracle;
    use crate::sampler::seeded_rng;

    fn path(n: usize) -> WeightedGraph {
        let nodes = (0..n).map(|i| NodeRecord { id: NodeId::Num(i as u64), weight: 1.0, pos: None }).collect();
        let edges = (1..n).map(|i| [NodeId::Num(i as u64 - 1), NodeId::Num(i as u64)]).collect();
        WeightedGraph::from_file(GraphFile { nodes, edges }).unwrap()
    }

    fn grid_graph(m: usize, n: usize) -> WeightedGraph {
        WeightedGraph::from_grid(&GridDual::build(GridDims::new(m, n).unwrap()).unwrap())
    }

    #[test]
    fn parses_small_graphs() {
        let g = parse_graph(r#"{"nodes":[{"id":"a","weight":2},{"id":"b","weight":3}],"edges":[["a","b"]]}"#).unwrap();
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.total_weight(), 5.0);
        assert!(matches!(parse_graph("{not json"), Err(Error::Parse(_))));
        let split = r#"{"nodes":[{"id":1,"weight":1},{"id":2,"weight":1}],"edges":[]}"#;
        assert_eq!(parse_graph(split).unwrap_err(), Error::DisconnectedGraph);
        let dup = r#"{"nodes":[{"id":1,"weight":1},{"id":2,"weight":1}],"edges":[[1,2],[2,1]]}"#;
        assert!(matches!(parse_graph(dup), Err(Error::Parse(_))));
        let unknown = r#"{"nodes":[{"id":1,"weight":1}],"edges":[[1,7]]}"#;
        assert!(matches!(parse_graph(unknown), Err(Error::Parse(_))));
    }

    #[test]
    fn grid_export_round_trip() {
        let gd = GridDual::build(GridDims::new(3, 4).unwrap()).unwrap();
        let g = WeightedGraph::from_grid(&gd);
        let text = serde_json::to_string(&g.to_file()).unwrap();
        let back = parse_graph(&text).unwrap();
        assert_eq!(back.node_count(), 12);
        let edges: BTreeSet<(usize, usize)> = back.edges().iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
        let expected: BTreeSet<(usize, usize)> = (0..gd.edge_count())
            .map(|e| {
                let (a, b) = gd.edge_ends(e);
                (a.min(b), a.max(b))
            })
            .collect();
        assert_eq!(edges, expected);
    }

    #[test]
    fn path_split_is_the_middle_edge() {
        let g = path(4);
        let p = KPartition { assignment: vec![0, 0, 0, 1], k: 2 };
        let mut rng = seeded_rng(1, 0);
        for _ in 0..50 {
            let next = recom_step(&g, &p, 0.0, &mut rng).unwrap();
            assert_eq!(next.assignment, vec![0, 0, 1, 1]);
        }
    }

    #[test]
    fn odd_merge_with_zero_tolerance_fails() {
        let g = path(3);
        let p = KPartition { assignment: vec![0, 0, 1], k: 2 };
        let err = recom_step(&g, &p, 0.0, &mut seeded_rng(1, 0)).unwrap_err();
        assert!(matches!(err, Error::StepFailed(_)));
    }

    #[test]
    fn chain_states_stay_valid() {
        let g = grid_graph(12, 12);
        let eps = 0.05;
        let mut rng = seeded_rng(7, 0);
        let init = initial_partition(&g, 4, eps, &mut rng).unwrap();
        let mut prev = init.clone();
        let mut count = 0;
        for item in run_chain(&g, init, eps, 400, 1, rng) {
            let (_, state) = item.unwrap();
            state.validate(&g, eps).unwrap();
            let changed: BTreeSet<usize> = (0..g.node_count())
                .filter(|&v| state.assignment[v] != prev.assignment[v])
                .flat_map(|v| [state.assignment[v], prev.assignment[v]])
                .collect();
            assert!(changed.len() <= 2);
            prev = state;
            count += 1;
        }
        assert_eq!(count, 401);
    }

    #[test]
    fn chain_thinning_and_determinism() {
        let g = grid_graph(6, 6);
        let init = initial_partition(&g, 3, 0.1, &mut seeded_rng(3, 0)).unwrap();
        let only: Vec<_> = run_chain(&g, init.clone(), 0.1, 0, 5, seeded_rng(3, 1)).collect();
        assert_eq!(only.len(), 1);
        let a: Vec<_> = run_chain(&g, init.clone(), 0.1, 50, 10, seeded_rng(3, 1)).map(|r| r.unwrap()).collect();
        let b: Vec<_> = run_chain(&g, init, 0.1, 50, 10, seeded_rng(3, 1)).map(|r| r.unwrap()).collect();
        assert_eq!(a, b);
        assert_eq!(a.iter().map(|x| x.0).collect::<Vec<_>>(), vec![0, 10, 20, 30, 40, 50]);
    }

    #[test]
    fn two_district_resplit_matches_tree_edge_weights() {
        // With k = 2 and no balance constraint each move redraws the whole
        // plan as a uniform tree minus a uniform edge, so a plan appears with
        // probability proportional to sp(X)·sp(Y)·|cut|.
        let gd = GridDual::build(GridDims::new(3, 3).unwrap()).unwrap();
        let g = WeightedGraph::from_grid(&gd);
        let dist = oracle::exact_distribution(&gd, 0.0).unwrap();
        let weights: Vec<f64> = dist
            .entries
            .iter()
            .map(|e| {
                let s: f64 = e.score.to_string().parse().unwrap();
                s * e.partition.cut_edges(&gd).len() as f64
            })
            .collect();
        let z: f64 = weights.iter().sum();
        let mut counts = vec![0usize; weights.len()];
        let mut state = KPartition { assignment: (0..9).map(|v| usize::from(v >= 3)).collect(), k: 2 };
        let mut rng = seeded_rng(11, 0);
        let n = 100_000;
        for _ in 0..n {
            state = recom_step(&g, &state, 1e9, &mut rng).unwrap();
            let mask: Vec<bool> = state.assignment.iter().map(|&d| d == 0).collect();
            let p = crate::grid::Partition2::from_mask(&gd, &mask).unwrap();
            counts[dist.index_of(&p).unwrap()] += 1;
        }
        let tv: f64 = counts.iter().zip(&weights).map(|(&c, &w)| (c as f64 / n as f64 - w / z).abs()).sum::<f64>() / 2.0;
        assert!(tv < 0.05, "tv {tv}");
    }
}
