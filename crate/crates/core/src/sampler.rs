//! Randomized samplers: Wilson's algorithm, the dual random-walk partition
//! sampler with its two acceptance stages, the spanning-tree split sampler,
//! and λ-smooth rejection.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{partition_to_cycle, DualCycle, DualEdge, GridDual, Partition2};
use crate::oracle;

/// The generator behind every randomized routine.
pub type SimRng = ChaCha8Rng;

/// A generator for `(seed, stream)`; streams are independent.
pub fn seeded_rng(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerMode {
    /// Random walk on the dual, conditioned on a uniformly drawn dual edge.
    Alg2,
    /// Uniform spanning tree of the primal, split at a uniform tree edge.
    UstSplit,
}

/// What the walk sampler does when the loop-erasure is the conditioned edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RestartPolicy {
    /// `Walk` within the enumeration cap, `Edge` beyond it.
    Auto,
    /// Redraw only the walk and accept with the per-edge normalizer.
    Walk,
    /// Redraw the edge as well; no normalizer is needed.
    Edge,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub lambda: f64,
    pub seed: u64,
    pub max_restarts: u64,
    pub mode: SamplerMode,
    pub restart: RestartPolicy,
    /// Grids with at most this many vertices use enumerated normalizers.
    pub oracle_cap: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            lambda: 0.0,
            seed: 0,
            max_restarts: 100_000_000,
            mode: SamplerMode::Alg2,
            restart: RestartPolicy::Auto,
            oracle_cap: oracle::DEFAULT_CAP,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidInput("lambda must be a finite nonnegative number".into()));
        }
        if self.max_restarts == 0 {
            return Err(Error::InvalidInput("max_restarts must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleOutcome {
    pub partition: Partition2,
    pub cycle: DualCycle,
    pub start_dual_edge: DualEdge,
    /// Failed attempts before the accepted one.
    pub restarts: u64,
    /// Random-walk steps over all attempts for this sample.
    pub walk_steps: u64,
}

impl SampleOutcome {
    /// One JSON object summarizing the sample.
    pub fn summary(&self) -> serde_json::Value {
        serde_json::json!({
            "cut": self.cycle.canonical_cut(),
            "start_edge": self.start_dual_edge.crossing().to_pairs(),
            "interior_size": self.partition.interior_len(),
            "imbalance": self.partition.imbalance(),
            "restarts": self.restarts,
            "steps": self.walk_steps,
        })
    }
}

/// Accepts with probability `exp(-λ·imb(p))`.
pub fn smooth_accept(p: &Partition2, lambda: f64, rng: &mut impl Rng) -> bool {
    accept_imbalance(p.imbalance2(), lambda, rng)
}

fn accept_imbalance(imbalance2: usize, lambda: f64, rng: &mut impl Rng) -> bool {
    if lambda == 0.0 || imbalance2 == 0 {
        return true;
    }
    rng.gen::<f64>() < (-lambda * imbalance2 as f64 / 2.0).exp()
}

/// Wilson's algorithm on a multigraph given as `(neighbor, edge)` lists.
/// Returns the edge labels of a uniform spanning tree.
pub fn wilson_ust(adj: &[Vec<(usize, usize)>], root: usize, rng: &mut impl Rng, step_budget: u64) -> Result<Vec<usize>> {
    let n = adj.len();
    let mut in_tree = vec![false; n];
    let mut next: Vec<(usize, usize)> = vec![(usize::MAX, usize::MAX); n];
    in_tree[root] = true;
    let mut steps = 0u64;
    let mut tree = Vec::with_capacity(n.saturating_sub(1));
    for s in 0..n {
        let mut u = s;
        while !in_tree[u] {
            let nb = &adj[u];
            if nb.is_empty() {
                return Err(Error::DisconnectedGraph);
            }
            next[u] = nb[rng.gen_range(0..nb.len())];
            u = next[u].0;
            steps += 1;
            if steps > step_budget {
                return Err(Error::BudgetExceeded(format!("Wilson walk exceeded {step_budget} steps")));
            }
        }
        let mut u = s;
        while !in_tree[u] {
            in_tree[u] = true;
            tree.push(next[u].1);
            u = next[u].0;
        }
    }
    Ok(tree)
}

fn step_budget(g: &GridDual) -> u64 {
    let mn = g.vertex_count() as u64;
    64 * mn * mn
}

fn primal_adjacency(g: &GridDual) -> Vec<Vec<(usize, usize)>> {
    (0..g.vertex_count()).map(|v| g.primal_neighbors(v).to_vec()).collect()
}

/// Uniform spanning tree of the primal grid drawn on the dual: a uniform
/// dual tree rooted at Outer, complemented. Returns primal edge indices.
pub fn wilson_dual_tree(g: &GridDual, rng: &mut impl Rng) -> Result<Vec<usize>> {
    let adj: Vec<Vec<(usize, usize)>> = (0..g.dual_vertex_count()).map(|d| g.dual_neighbors(d).to_vec()).collect();
    let dual_tree = wilson_ust(&adj, g.outer_index(), rng, step_budget(g))?;
    let mut in_dual = vec![false; g.edge_count()];
    for e in dual_tree {
        in_dual[e] = true;
    }
    Ok((0..g.edge_count()).filter(|&e| !in_dual[e]).collect())
}

/// A reusable sampler bound to one grid and one random stream.
pub struct Sampler<'g> {
    g: &'g GridDual,
    cfg: SamplerConfig,
    /// Per-edge acceptance factor of the walk-restart policy.
    edge_factor: Option<Vec<f64>>,
    rng: SimRng,
    primal_adj: Vec<Vec<(usize, usize)>>,
    slot: Vec<usize>,
    stack: Vec<usize>,
    stack_edges: Vec<usize>,
    walls: Vec<bool>,
    label: Vec<u8>,
    queue: Vec<usize>,
}

impl<'g> Sampler<'g> {
    /// A sampler on stream 0 of `cfg.seed`.
    pub fn new(g: &'g GridDual, cfg: SamplerConfig) -> Result<Self> {
        Self::with_stream(g, cfg, 0)
    }

    pub fn with_stream(g: &'g GridDual, cfg: SamplerConfig, stream: u64) -> Result<Self> {
        cfg.validate()?;
        let policy = match cfg.restart {
            RestartPolicy::Auto if g.vertex_count() <= cfg.oracle_cap => RestartPolicy::Walk,
            RestartPolicy::Auto => RestartPolicy::Edge,
            p => p,
        };
        let edge_factor = match (cfg.mode, policy) {
            (SamplerMode::Alg2, RestartPolicy::Walk) => {
                let norm = if g.vertex_count() <= cfg.oracle_cap {
                    oracle::enumerated_normalizers(g, cfg.oracle_cap)?
                } else {
                    oracle::kirchhoff_normalizers(g)
                };
                Some(norm.ratios())
            }
            _ => None,
        };
        Ok(Sampler {
            g,
            cfg,
            edge_factor,
            rng: seeded_rng(cfg.seed, stream),
            primal_adj: primal_adjacency(g),
            slot: vec![usize::MAX; g.dual_vertex_count()],
            stack: Vec::new(),
            stack_edges: Vec::new(),
            walls: vec![false; g.edge_count()],
            label: vec![0; g.vertex_count()],
            queue: Vec::with_capacity(g.vertex_count()),
        })
    }

    /// Whether Step-3 restarts keep the drawn edge.
    pub fn restarts_keep_edge(&self) -> bool {
        self.edge_factor.is_some()
    }

    pub fn config(&self) -> &SamplerConfig {
        &self.cfg
    }

    pub fn rng(&mut self) -> &mut SimRng {
        &mut self.rng
    }

    pub fn sample(&mut self) -> Result<SampleOutcome> {
        match self.cfg.mode {
            SamplerMode::Alg2 => self.sample_alg2(),
            SamplerMode::UstSplit => self.sample_ust_split(),
        }
    }

    /// Loop-erased walk from dual vertex `x` until it first hits `y`. Leaves
    /// the erased path in `stack`/`stack_edges` (ending at `y`) and returns
    /// the number of steps.
    fn lerw(&mut self, x: usize, y: usize) -> Result<u64> {
        for &v in &self.stack {
            self.slot[v] = usize::MAX;
        }
        self.stack.clear();
        self.stack_edges.clear();
        self.stack.push(x);
        self.slot[x] = 0;
        let budget = step_budget(self.g);
        let mut steps = 0u64;
        let mut cur = x;
        while cur != y {
            let nb = self.g.dual_neighbors(cur);
            let (w, e) = nb[self.rng.gen_range(0..nb.len())];
            steps += 1;
            if steps > budget {
                return Err(Error::BudgetExceeded(format!("walk exceeded {budget} steps")));
            }
            let k = self.slot[w];
            if k != usize::MAX {
                while self.stack.len() > k + 1 {
                    let v = self.stack.pop().unwrap();
                    self.stack_edges.pop();
                    self.slot[v] = usize::MAX;
                }
            } else {
                self.slot[w] = self.stack.len();
                self.stack.push(w);
                self.stack_edges.push(e);
            }
            cur = w;
        }
        Ok(steps)
    }

    /// Labels the two sides of the current wall set; returns the size of the
    /// side holding vertex 0, or `None` if the walls do not cut the grid in two.
    fn split_by_walls(&mut self) -> Option<usize> {
        self.label.iter_mut().for_each(|l| *l = 0);
        let mut sizes = [0usize; 3];
        let mut comp = 0u8;
        for s in 0..self.label.len() {
            if self.label[s] != 0 {
                continue;
            }
            comp += 1;
            if comp > 2 {
                return None;
            }
            self.label[s] = comp;
            self.queue.clear();
            self.queue.push(s);
            let mut head = 0;
            while head < self.queue.len() {
                let x = self.queue[head];
                head += 1;
                for &(y, e) in &self.primal_adj[x] {
                    if !self.walls[e] && self.label[y] == 0 {
                        self.label[y] = comp;
                        self.queue.push(y);
                    }
                }
            }
            sizes[comp as usize] = self.queue.len();
        }
        (comp == 2).then_some(sizes[1])
    }

    fn sample_alg2(&mut self) -> Result<SampleOutcome> {
        let g = self.g;
        let ne = g.edge_count();
        let mut restarts = 0u64;
        let mut walk_steps = 0u64;
        let nv = g.vertex_count();
        'attempt: loop {
            if restarts >= self.cfg.max_restarts {
                return Err(Error::BudgetExceeded(format!("no sample after {restarts} restarts")));
            }
            let e = self.rng.gen_range(0..ne);
            let (x, y) = g.dual_ends(e);
            // Step 2-3: walk until the erasure is not the conditioned edge.
            loop {
                walk_steps += self.lerw(x, y)?;
                if !(self.stack_edges.len() == 1 && self.stack_edges[0] == e) {
                    break;
                }
                restarts += 1;
                if self.edge_factor.is_none() {
                    continue 'attempt;
                }
                if restarts >= self.cfg.max_restarts {
                    return Err(Error::BudgetExceeded(format!("no sample after {restarts} restarts")));
                }
            }
            for &c in &self.stack_edges {
                self.walls[c] = true;
            }
            self.walls[e] = true;
            let cut_len = self.stack_edges.len() + 1;
            let side0 = self.split_by_walls();
            let mut accepted = false;
            let mut mask = Vec::new();
            if let Some(a) = side0 {
                let factor = self.edge_factor.as_ref().map_or(1.0, |f| f[e]);
                let imbalance2 = a.abs_diff(nv - a);
                if self.rng.gen::<f64>() < factor / cut_len as f64
                    && accept_imbalance(imbalance2, self.cfg.lambda, &mut self.rng)
                {
                    accepted = true;
                    mask = self.label.iter().map(|&l| l == 1).collect();
                }
            }
            for &c in &self.stack_edges {
                self.walls[c] = false;
            }
            self.walls[e] = false;
            if side0.is_none() {
                return Err(Error::NotACycle("walk erasure and edge did not form a simple cycle".into()));
            }
            if !accepted {
                restarts += 1;
                continue;
            }
            let partition = Partition2::oriented(g, &mask);
            let cycle = partition_to_cycle(g, &partition)?;
            return Ok(SampleOutcome { partition, cycle, start_dual_edge: g.dual_edge(e), restarts, walk_steps });
        }
    }

    fn sample_ust_split(&mut self) -> Result<SampleOutcome> {
        let g = self.g;
        let nv = g.vertex_count();
        let budget = step_budget(g);
        let mut restarts = 0u64;
        let mut walk_steps = 0u64;
        loop {
            if restarts >= self.cfg.max_restarts {
                return Err(Error::BudgetExceeded(format!("no sample after {restarts} restarts")));
            }
            let root = self.rng.gen_range(0..nv);
            let tree = wilson_ust(&self.primal_adj, root, &mut self.rng, budget)?;
            walk_steps += tree.len() as u64;
            let cut_edge = tree[self.rng.gen_range(0..tree.len())];
            // Walls are every non-tree edge plus the chosen tree edge.
            self.walls.iter_mut().for_each(|w| *w = true);
            for &t in &tree {
                self.walls[t] = false;
            }
            self.walls[cut_edge] = true;
            let side0 = self.split_by_walls().expect("a tree minus an edge has two components");
            let mask: Vec<bool> = self.label.iter().map(|&l| l == 1).collect();
            let cut_len = (0..g.edge_count())
                .filter(|&e| {
                    let (a, b) = g.edge_ends(e);
                    mask[a] != mask[b]
                })
                .count();
            let imbalance2 = side0.abs_diff(nv - side0);
            if self.rng.gen::<f64>() < 1.0 / cut_len as f64
                && accept_imbalance(imbalance2, self.cfg.lambda, &mut self.rng)
            {
                let partition = Partition2::oriented(g, &mask);
                let cycle = partition_to_cycle(g, &partition)?;
                return Ok(SampleOutcome {
                    partition,
                    cycle,
                    start_dual_edge: g.dual_edge(cut_edge),
                    restarts,
                    walk_steps,
                });
            }
            restarts += 1;
        }
    }
}

/// One walk-sampler draw; builds the normalizers on every call. Prefer
/// [`Sampler`] for repeated draws.
pub fn sample_alg2(g: &GridDual, cfg: SamplerConfig, stream: u64) -> Result<SampleOutcome> {
    Sampler::with_stream(g, SamplerConfig { mode: SamplerMode::Alg2, ..cfg }, stream)?.sample()
}

/// One spanning-tree split draw.
pub fn sample_ust_split(g: &GridDual, cfg: SamplerConfig, stream: u64) -> Result<SampleOutcome> {
    Sampler::with_stream(g, SamplerConfig { mode: SamplerMode::UstSplit, ..cfg }, stream)?.sample()
}

/// `n` samples split across `workers` independent streams; the output order
/// depends only on `(seed, n, workers)`.
pub fn sample_many(g: &GridDual, cfg: SamplerConfig, n: usize, workers: usize) -> Result<Vec<SampleOutcome>> {
    let workers = workers.max(1);
    let shares: Vec<usize> = (0..workers).map(|w| n / workers + usize::from(w < n % workers)).collect();
    let results: Vec<Result<Vec<SampleOutcome>>> = std::thread::scope(|s| {
        let handles: Vec<_> = shares
            .iter()
            .enumerate()
            .map(|(w, &count)| {
                s.spawn(move || {
                    let mut sampler = Sampler::with_stream(g, cfg, w as u64)?;
                    (0..count).map(|_| sampler.sample()).collect::<Result<Vec<_>>>()
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("sampler worker panicked")).collect()
    });
    let mut out = Vec::with_capacity(n);
    for r in results {
        out.extend(r?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{cycle_to_partition, GridDims};
    use crate::walks::{loop_erase, Walk};

    fn grid(m: usize, n: usize) -> GridDual {
        GridDual::build(GridDims::new(m, n).unwrap()).unwrap()
    }

    fn three_sigma(p: f64, n: f64) -> f64 {
        3.0 * (p * (1.0 - p) / n).sqrt()
    }

    #[test]
    fn tree_input_returns_itself() {
        // A path 0-1-2-3 with edge labels 10, 11, 12.
        let adj = vec![vec![(1, 10)], vec![(0, 10), (2, 11)], vec![(1, 11), (3, 12)], vec![(2, 12)]];
        let mut rng = seeded_rng(1, 0);
        let mut t = wilson_ust(&adj, 2, &mut rng, 10_000).unwrap();
        t.sort();
        assert_eq!(t, vec![10, 11, 12]);
    }

    #[test]
    fn wilson_uniform_on_square() {
        let g = grid(2, 2);
        let adj = primal_adjacency(&g);
        let mut rng = seeded_rng(7, 0);
        let runs = 100_000;
        let mut counts = std::collections::HashMap::new();
        for _ in 0..runs {
            let mut t = wilson_ust(&adj, 0, &mut rng, 1_000_000).unwrap();
            t.sort();
            *counts.entry(t).or_insert(0usize) += 1;
        }
        assert_eq!(counts.len(), 4);
        for c in counts.values() {
            let f = *c as f64 / runs as f64;
            assert!((f - 0.25).abs() < three_sigma(0.25, runs as f64), "{f}");
        }
    }

    #[test]
    fn dual_wilson_uniform_on_square() {
        let g = grid(2, 2);
        let mut rng = seeded_rng(8, 0);
        let runs = 100_000;
        let mut counts = std::collections::HashMap::new();
        for _ in 0..runs {
            let t = wilson_dual_tree(&g, &mut rng).unwrap();
            assert_eq!(t.len(), 3);
            *counts.entry(t).or_insert(0usize) += 1;
        }
        assert_eq!(counts.len(), 4);
        for c in counts.values() {
            let f = *c as f64 / runs as f64;
            assert!((f - 0.25).abs() < three_sigma(0.25, runs as f64));
        }
    }

    #[test]
    fn seeded_runs_reproduce() {
        let g = grid(4, 4);
        let cfg = SamplerConfig { seed: 11, ..Default::default() };
        let a = sample_many(&g, cfg, 20, 2).unwrap();
        let b = sample_many(&g, cfg, 20, 2).unwrap();
        assert_eq!(a, b);
        let adj = primal_adjacency(&g);
        let t1 = wilson_ust(&adj, 0, &mut seeded_rng(3, 1), 1 << 30).unwrap();
        let t2 = wilson_ust(&adj, 0, &mut seeded_rng(3, 1), 1 << 30).unwrap();
        assert_eq!(t1, t2);
    }

    #[test]
    fn smooth_accept_basics() {
        let g = grid(3, 3);
        let mut rng = seeded_rng(5, 0);
        let p = Partition2::from_mask(&g, &[true, true, true, true, true, true, true, false, false]).unwrap();
        assert!((0..100).all(|_| smooth_accept(&p, 0.0, &mut rng)));
        let g2 = grid(2, 2);
        let bal = Partition2::from_mask(&g2, &[true, true, false, false]).unwrap();
        assert!((0..100).all(|_| smooth_accept(&bal, 5.0, &mut rng)));
        // imb = 2 on a 2x3 grid with a 1/5 split.
        let g3 = grid(2, 3);
        let p = Partition2::from_mask(&g3, &[true, false, false, false, false, false]).unwrap();
        assert_eq!(p.imbalance(), 2.0);
        let n = 100_000;
        let hits = (0..n).filter(|_| smooth_accept(&p, 1.0, &mut rng)).count();
        let f = hits as f64 / n as f64;
        let e2 = (-2.0f64).exp();
        assert!((f - e2).abs() < three_sigma(e2, n as f64));
    }

    #[test]
    fn outcomes_are_consistent() {
        for mode in [SamplerMode::Alg2, SamplerMode::UstSplit] {
            for (m, n) in [(2, 2), (3, 4), (5, 5)] {
                let g = grid(m, n);
                let cfg = SamplerConfig { seed: 3, mode, lambda: 0.3, ..Default::default() };
                let mut s = Sampler::new(&g, cfg).unwrap();
                for _ in 0..200 {
                    let o = s.sample().unwrap();
                    assert_eq!(partition_to_cycle(&g, &o.partition).unwrap(), o.cycle);
                    assert_eq!(cycle_to_partition(&g, &o.cycle).unwrap(), o.partition);
                    assert!(o.cycle.contains(&o.start_dual_edge));
                }
            }
        }
    }

    #[test]
    fn restart_fires_only_on_the_conditioned_edge() {
        // On a 2x2 grid every walk from the face hits Outer in one step, so the
        // erasure is a single edge: a restart iff it is the drawn edge.
        let g = grid(2, 2);
        let cfg = SamplerConfig { seed: 9, restart: RestartPolicy::Walk, ..Default::default() };
        let mut s = Sampler::new(&g, cfg).unwrap();
        assert!(s.restarts_keep_edge());
        let mut total_restarts = 0;
        let runs = 20_000;
        for _ in 0..runs {
            let o = s.sample().unwrap();
            assert_eq!(o.cycle.len(), 2);
            total_restarts += o.restarts;
        }
        // Each attempt: restart w.p. 1/4 per walk; acceptance after a good walk
        // is (ratio 1/2) * (1/2).
        assert!(total_restarts > runs as u64);
    }

    #[test]
    fn lerw_matches_generic_erasure() {
        let g = grid(4, 5);
        let cfg = SamplerConfig { seed: 21, ..Default::default() };
        let mut s = Sampler::new(&g, cfg).unwrap();
        for trial in 0..200 {
            let x = trial % g.dual_vertex_count();
            let y = (trial * 7 + 3) % g.dual_vertex_count();
            if x == y {
                continue;
            }
            // Replay the walk with a cloned generator to get the raw steps.
            let mut replay = s.rng().clone();
            s.lerw(x, y).unwrap();
            let mut vs = vec![g.dual_vertex(x)];
            let mut es = Vec::new();
            let mut cur = x;
            while cur != y {
                let nb = g.dual_neighbors(cur);
                let (w, e) = nb[replay.gen_range(0..nb.len())];
                vs.push(g.dual_vertex(w));
                es.push(g.dual_edge(e));
                cur = w;
            }
            let d = loop_erase(&Walk::new(vs, es).unwrap()).erasure;
            let got: Vec<_> = s.stack_edges.iter().map(|&e| g.dual_edge(e)).collect();
            assert_eq!(d.edges(), &got[..]);
        }
    }

    #[test]
    fn balanced_edge_floor() {
        let g = grid(4, 4);
        let adj = primal_adjacency(&g);
        let mut rng = seeded_rng(4, 0);
        let draws = 20_000;
        let mut balanced = 0;
        for _ in 0..draws {
            let tree = wilson_ust(&adj, 0, &mut rng, 1 << 30).unwrap();
            let cut = tree[rng.gen_range(0..tree.len())];
            let mut walls = vec![true; g.edge_count()];
            for &t in &tree {
                walls[t] = t == cut;
            }
            let (label, _) = g.components_without(&walls);
            if label.iter().filter(|&&l| l == 0).count() == 8 {
                balanced += 1;
            }
        }
        assert!(balanced as f64 / draws as f64 > 1.0 / 256.0);
    }

    fn tv_to_exact(g: &GridDual, cfg: SamplerConfig, n: usize) -> f64 {
        let dist = oracle::exact_distribution(g, cfg.lambda).unwrap();
        let probs = dist.probabilities();
        let mut counts = vec![0usize; probs.len()];
        let mut s = Sampler::new(g, cfg).unwrap();
        for _ in 0..n {
            let o = s.sample().unwrap();
            counts[dist.index_of(&o.partition).unwrap()] += 1;
        }
        0.5 * probs.iter().zip(&counts).map(|(p, &c)| (p - c as f64 / n as f64).abs()).sum::<f64>()
    }

    #[test]
    fn every_variant_matches_the_oracle() {
        let g = grid(2, 3);
        for lambda in [0.0, 1.0] {
            for (mode, restart) in [
                (SamplerMode::Alg2, RestartPolicy::Walk),
                (SamplerMode::Alg2, RestartPolicy::Edge),
                (SamplerMode::UstSplit, RestartPolicy::Auto),
            ] {
                let cfg = SamplerConfig { lambda, seed: 17, mode, restart, ..Default::default() };
                let tv = tv_to_exact(&g, cfg, 30_000);
                assert!(tv < 0.03, "{mode:?} {restart:?} λ={lambda}: tv {tv}");
            }
        }
        // Kirchhoff normalizers take over when the cap is lowered.
        let cfg = SamplerConfig { seed: 5, restart: RestartPolicy::Walk, oracle_cap: 4, ..Default::default() };
        assert!(tv_to_exact(&g, cfg, 30_000) < 0.03);
    }

    #[test]
    fn config_validation() {
        let g = grid(2, 2);
        assert!(Sampler::new(&g, SamplerConfig { max_restarts: 0, ..Default::default() }).is_err());
        assert!(Sampler::new(&g, SamplerConfig { lambda: -1.0, ..Default::default() }).is_err());
        let tight = SamplerConfig { max_restarts: 1, lambda: 50.0, seed: 2, ..Default::default() };
        let g3 = grid(3, 3);
        let mut s = Sampler::new(&g3, tight).unwrap();
        let errs = (0..50).filter(|_| matches!(s.sample(), Err(Error::BudgetExceeded(_)))).count();
        assert!(errs > 0);
    }
}
