//! Exact ground truth on small grids: spanning-tree counts, all feasible
//! 2-partitions, and the exact spanning-tree and λ-smooth distributions.

use num_bigint::{BigInt, BigUint, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::grid::{GridDual, Partition2, PrimalEdge};

/// Default enumeration cap in primal vertices.
pub const DEFAULT_CAP: usize = 20;

/// Largest cap the bitmask enumerator supports.
pub const HARD_CAP: usize = 40;

/// Number of spanning trees of an undirected graph on `n` vertices.
///
/// Parallel edges count separately; self-loops are ignored. A disconnected
/// graph has zero spanning trees.
pub fn count_spanning_trees(n: usize, edges: &[(usize, usize)]) -> BigUint {
    if n <= 1 {
        return BigUint::one();
    }
    let size = n - 1;
    let mut lap = vec![vec![BigInt::zero(); size]; size];
    let mut bump = |r: usize, c: usize, d: i64| {
        if r < size && c < size {
            lap[r][c] += d;
        }
    };
    for &(a, b) in edges {
        if a == b {
            continue;
        }
        bump(a, a, 1);
        bump(b, b, 1);
        bump(a, b, -1);
        bump(b, a, -1);
    }
    let det = bareiss_determinant(lap);
    match det.sign() {
        Sign::Minus => unreachable!("Laplacian minors are positive semidefinite"),
        _ => det.magnitude().clone(),
    }
}

/// Fraction-free Gaussian elimination; exact over the integers.
fn bareiss_determinant(mut a: Vec<Vec<BigInt>>) -> BigInt {
    let n = a.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&r| !a[r][k].is_zero()) {
                Some(r) => {
                    a.swap(k, r);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = (&a[i][j] * &a[k][k] - &a[i][k] * &a[k][j]) / &prev;
                a[i][j] = v;
            }
        }
        prev = a[k][k].clone();
    }
    sign * a[n - 1][n - 1].clone()
}

/// Spanning trees of the subgraph induced by `mask[v] == side`.
pub fn induced_spanning_trees(g: &GridDual, mask: &[bool], side: bool) -> BigUint {
    let mut relabel = vec![usize::MAX; mask.len()];
    let mut n = 0;
    for (v, &s) in mask.iter().enumerate() {
        if s == side {
            relabel[v] = n;
            n += 1;
        }
    }
    let edges: Vec<(usize, usize)> = (0..g.edge_count())
        .map(|e| g.edge_ends(e))
        .filter(|&(a, b)| mask[a] == side && mask[b] == side)
        .map(|(a, b)| (relabel[a], relabel[b]))
        .collect();
    count_spanning_trees(n, &edges)
}

/// Spanning trees of the whole primal grid.
pub fn grid_spanning_trees(g: &GridDual) -> BigUint {
    let edges: Vec<_> = (0..g.edge_count()).map(|e| g.edge_ends(e)).collect();
    count_spanning_trees(g.vertex_count(), &edges)
}

/// Bit-parallel connectivity over grids with at most 64 vertices.
pub(crate) struct BitGrid {
    cols: usize,
    full: u64,
    not_first_col: u64,
    not_last_col: u64,
}

impl BitGrid {
    pub(crate) fn new(g: &GridDual) -> Self {
        let (m, n) = (g.dims().rows, g.dims().cols);
        let nv = m * n;
        let full = if nv == 64 { u64::MAX } else { (1u64 << nv) - 1 };
        let mut first = 0u64;
        let mut last = 0u64;
        for i in 0..m {
            first |= 1 << (i * n);
            last |= 1 << (i * n + n - 1);
        }
        BitGrid { cols: n, full, not_first_col: full & !first, not_last_col: full & !last }
    }

    fn expand(&self, s: u64) -> u64 {
        (s | ((s << 1) & self.not_first_col) | ((s >> 1) & self.not_last_col) | (s << self.cols) | (s >> self.cols))
            & self.full
    }

    /// Whether `set` is nonempty and induces a connected subgraph.
    pub(crate) fn connected(&self, set: u64) -> bool {
        if set == 0 {
            return false;
        }
        let mut reach = set & set.wrapping_neg();
        loop {
            let next = self.expand(reach) & set;
            if next == reach {
                return reach == set;
            }
            reach = next;
        }
    }

    pub(crate) fn full(&self) -> u64 {
        self.full
    }
}

fn check_cap(g: &GridDual, cap: usize) -> Result<()> {
    let nv = g.vertex_count();
    if nv > cap.min(HARD_CAP) {
        return Err(Error::TooLarge { vertices: nv, cap: cap.min(HARD_CAP) });
    }
    Ok(())
}

/// Bitmasks of the side not containing vertex index 0, for every feasible
/// 2-partition, in increasing order.
pub fn enumerate_partition_masks(g: &GridDual, cap: usize) -> Result<Vec<u64>> {
    check_cap(g, cap)?;
    let bits = BitGrid::new(g);
    let nv = g.vertex_count();
    let mut out = Vec::new();
    for half in 1u64..(1u64 << (nv - 1)) {
        let side = half << 1;
        if bits.connected(side) && bits.connected(bits.full() & !side) {
            out.push(side);
        }
    }
    Ok(out)
}

pub(crate) fn mask_to_bools(bits: u64, nv: usize) -> Vec<bool> {
    (0..nv).map(|v| bits >> v & 1 == 1).collect()
}

/// All feasible 2-partitions, each once, in canonical order.
pub fn enumerate_partitions(g: &GridDual) -> Result<Vec<Partition2>> {
    enumerate_partitions_capped(g, DEFAULT_CAP)
}

pub fn enumerate_partitions_capped(g: &GridDual, cap: usize) -> Result<Vec<Partition2>> {
    let nv = g.vertex_count();
    Ok(enumerate_partition_masks(g, cap)?
        .into_iter()
        .map(|b| Partition2::oriented(g, &mask_to_bools(b, nv)))
        .collect())
}

/// One partition together with its spanning-tree score.
#[derive(Debug, Clone)]
pub struct DistEntry {
    pub partition: Partition2,
    /// sp(X)·sp(Y).
    pub score: BigUint,
    /// `||X| - |Y||`, twice the imbalance.
    pub imbalance2: usize,
}

/// The exact λ-smooth spanning-tree distribution over feasible partitions.
///
/// Weights are `score · exp(-λ·imb)`. For λ = 0 they are exact integers;
/// otherwise probabilities are computed in `f64` with compensated summation.
#[derive(Debug, Clone)]
pub struct ExactDistribution {
    pub lambda: f64,
    pub entries: Vec<DistEntry>,
}

impl ExactDistribution {
    /// Σ score, the normalizer of the λ = 0 distribution.
    pub fn total_score(&self) -> BigUint {
        self.entries.iter().map(|e| &e.score).sum()
    }

    /// Exact probabilities; only available when λ = 0.
    pub fn exact_probabilities(&self) -> Option<Vec<BigRational>> {
        if self.lambda != 0.0 {
            return None;
        }
        let total = BigInt::from(self.total_score());
        Some(
            self.entries
                .iter()
                .map(|e| BigRational::new(BigInt::from(e.score.clone()), total.clone()))
                .collect(),
        )
    }

    /// Unnormalized weights scaled so the largest score is 1 and the smallest
    /// imbalance contributes factor 1.
    fn scaled_weights(&self) -> Vec<f64> {
        let max_score = self.entries.iter().map(|e| &e.score).max().cloned().unwrap_or_else(BigUint::one);
        let min_imb = self.entries.iter().map(|e| e.imbalance2).min().unwrap_or(0);
        let max_score = BigInt::from(max_score);
        self.entries
            .iter()
            .map(|e| {
                let ratio = BigRational::new(BigInt::from(e.score.clone()), max_score.clone());
                let r = ratio.to_f64().unwrap_or(0.0);
                r * (-self.lambda * (e.imbalance2 - min_imb) as f64 / 2.0).exp()
            })
            .collect()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        if let Some(exact) = self.exact_probabilities() {
            return exact.iter().map(|p| p.to_f64().unwrap_or(0.0)).collect();
        }
        let w = self.scaled_weights();
        let z = neumaier_sum(w.iter().copied());
        w.iter().map(|x| x / z).collect()
    }

    pub fn index_of(&self, p: &Partition2) -> Option<usize> {
        self.entries.iter().position(|e| &e.partition == p)
    }
}

/// Compensated summation.
pub fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for x in values {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

pub fn exact_distribution(g: &GridDual, lambda: f64) -> Result<ExactDistribution> {
    exact_distribution_capped(g, lambda, DEFAULT_CAP)
}

pub fn exact_distribution_capped(g: &GridDual, lambda: f64, cap: usize) -> Result<ExactDistribution> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidInput("lambda must be a finite nonnegative number".into()));
    }
    let entries = enumerate_partitions_capped(g, cap)?
        .into_iter()
        .map(|p| {
            let score = induced_spanning_trees(g, p.mask(), true) * induced_spanning_trees(g, p.mask(), false);
            let imbalance2 = p.imbalance2();
            DistEntry { partition: p, score, imbalance2 }
        })
        .collect();
    Ok(ExactDistribution { lambda, entries })
}

/// Probability that each primal edge is cut, indexed by edge index.
pub fn separation_probabilities(g: &GridDual, dist: &ExactDistribution) -> Vec<f64> {
    let probs = dist.probabilities();
    (0..g.edge_count())
        .map(|e| {
            let (a, b) = g.edge_ends(e);
            neumaier_sum(
                dist.entries
                    .iter()
                    .zip(&probs)
                    .filter(|(en, _)| en.partition.separates(a, b))
                    .map(|(_, &p)| p),
            )
        })
        .collect()
}

pub fn exact_separation_probability(g: &GridDual, lambda: f64, e: &PrimalEdge) -> Result<f64> {
    let dist = exact_distribution(g, lambda)?;
    Ok(separation_probabilities(g, &dist)[g.edge_index(e)])
}

/// The λ = 0 separation probability as an exact fraction.
pub fn exact_separation_ratio(g: &GridDual, e: &PrimalEdge) -> Result<BigRational> {
    let dist = exact_distribution(g, 0.0)?;
    let (a, b) = g.edge_ends(g.edge_index(e));
    let cut: BigUint = dist.entries.iter().filter(|en| en.partition.separates(a, b)).map(|en| &en.score).sum();
    Ok(BigRational::new(BigInt::from(cut), BigInt::from(dist.total_score())))
}

/// Per-edge normalizers of the walk sampler.
///
/// `per_edge[e]` sums sp(X)·sp(Y) over partitions cutting edge `e`, which is
/// also the number of spanning trees containing `e`; `total` sums over all
/// partitions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Normalizers {
    pub per_edge: Vec<BigUint>,
    pub total: BigUint,
}

impl Normalizers {
    /// `per_edge[e] / total` for every edge.
    pub fn ratios(&self) -> Vec<f64> {
        let total = BigInt::from(self.total.clone());
        self.per_edge
            .iter()
            .map(|x| BigRational::new(BigInt::from(x.clone()), total.clone()).to_f64().unwrap_or(0.0))
            .collect()
    }
}

/// Normalizers from exhaustive enumeration.
pub fn enumerated_normalizers(g: &GridDual, cap: usize) -> Result<Normalizers> {
    let dist = exact_distribution_capped(g, 0.0, cap)?;
    let mut per_edge = vec![BigUint::zero(); g.edge_count()];
    for en in &dist.entries {
        for e in en.partition.cut_edges(g) {
            per_edge[e] += &en.score;
        }
    }
    Ok(Normalizers { per_edge, total: dist.total_score() })
}

/// Per-edge tree counts from the Matrix-Tree theorem; `total` is the number
/// of spanning trees of the grid.
pub fn kirchhoff_normalizers(g: &GridDual) -> Normalizers {
    let all: Vec<_> = (0..g.edge_count()).map(|e| g.edge_ends(e)).collect();
    let total = count_spanning_trees(g.vertex_count(), &all);
    let per_edge = (0..g.edge_count())
        .map(|skip| {
            let rest: Vec<_> = all.iter().enumerate().filter(|&(k, _)| k != skip).map(|(_, &x)| x).collect();
            &total - count_spanning_trees(g.vertex_count(), &rest)
        })
        .collect();
    Normalizers { per_edge, total }
}

/// Whether a rational is strictly between 0 and 1.
pub fn is_proper_fraction(r: &BigRational) -> bool {
    r.is_positive() && r < &BigRational::one()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{GridDims, PrimalVertex};

    fn grid(m: usize, n: usize) -> GridDual {
        GridDual::build(GridDims::new(m, n).unwrap()).unwrap()
    }

    fn find(parent: &mut Vec<usize>, x: usize) -> usize {
        let mut r = x;
        while parent[r] != r {
            r = parent[r];
        }
        parent[x] = r;
        r
    }

    /// Brute force: edge subsets of size n-1 without cycles.
    fn brute_trees(n: usize, edges: &[(usize, usize)]) -> u64 {
        if n <= 1 {
            return 1;
        }
        let k = edges.len();
        let mut count = 0;
        for bits in 0u32..(1 << k) {
            if bits.count_ones() as usize != n - 1 {
                continue;
            }
            let mut parent: Vec<usize> = (0..n).collect();
            let mut ok = true;
            for (t, &(a, b)) in edges.iter().enumerate() {
                if bits >> t & 1 == 1 {
                    let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                    if ra == rb {
                        ok = false;
                        break;
                    }
                    parent[ra] = rb;
                }
            }
            if ok {
                count += 1;
            }
        }
        count
    }

    fn grid_edges(g: &GridDual) -> Vec<(usize, usize)> {
        (0..g.edge_count()).map(|e| g.edge_ends(e)).collect()
    }

    #[test]
    fn small_counts() {
        assert_eq!(count_spanning_trees(2, &[(0, 1)]), BigUint::from(1u32));
        let g = grid(2, 2);
        assert_eq!(count_spanning_trees(4, &grid_edges(&g)), BigUint::from(4u32));
        assert_eq!(brute_trees(4, &grid_edges(&g)), 4);
        let g = grid(2, 3);
        assert_eq!(count_spanning_trees(6, &grid_edges(&g)), BigUint::from(15u32));
        assert_eq!(brute_trees(6, &grid_edges(&g)), 15);
        assert_eq!(count_spanning_trees(3, &[(0, 1)]), BigUint::zero());
        assert_eq!(count_spanning_trees(1, &[]), BigUint::one());
    }

    #[test]
    fn matrix_tree_matches_brute_force_on_induced_subgraphs() {
        let g = grid(3, 3);
        for bits in 1u32..(1 << 9) {
            let mask: Vec<bool> = (0..9).map(|v| bits >> v & 1 == 1).collect();
            if !g.side_connected(&mask, true) {
                continue;
            }
            let mut relabel = vec![0; 9];
            let mut n = 0;
            for v in 0..9 {
                if mask[v] {
                    relabel[v] = n;
                    n += 1;
                }
            }
            let edges: Vec<_> = grid_edges(&g)
                .into_iter()
                .filter(|&(a, b)| mask[a] && mask[b])
                .map(|(a, b)| (relabel[a], relabel[b]))
                .collect();
            assert_eq!(induced_spanning_trees(&g, &mask, true), BigUint::from(brute_trees(n, &edges)));
        }
    }

    #[test]
    fn larger_grid_counts() {
        // Known values for the 3x3 and 4x4 grids.
        assert_eq!(grid_spanning_trees(&grid(3, 3)), BigUint::from(192u32));
        assert_eq!(grid_spanning_trees(&grid(4, 4)), BigUint::from(100352u32));
    }

    /// Independent enumerator: plain vectors and breadth-first search.
    fn brute_partition_count(g: &GridDual) -> usize {
        let nv = g.vertex_count();
        let mut seen = std::collections::HashSet::new();
        for bits in 0u64..(1 << nv) {
            let mask: Vec<bool> = (0..nv).map(|v| bits >> v & 1 == 1).collect();
            let conn = |side: bool| {
                let members: Vec<usize> = (0..nv).filter(|&v| mask[v] == side).collect();
                if members.is_empty() {
                    return false;
                }
                let mut reached = vec![members[0]];
                let mut i = 0;
                while i < reached.len() {
                    let x = reached[i];
                    for &(y, _) in g.primal_neighbors(x) {
                        if mask[y] == side && !reached.contains(&y) {
                            reached.push(y);
                        }
                    }
                    i += 1;
                }
                reached.len() == members.len()
            };
            if conn(true) && conn(false) {
                let key: Vec<bool> = mask.iter().map(|&s| s == mask[0]).collect();
                seen.insert(key);
            }
        }
        seen.len()
    }

    #[test]
    fn partition_counts() {
        let g = grid(2, 2);
        let parts = enumerate_partitions(&g).unwrap();
        assert_eq!(parts.len(), 6);
        assert_eq!(parts.iter().filter(|p| p.interior_len() == 1).count(), 4);
        for (m, n) in [(2, 3), (3, 3), (3, 4)] {
            let g = grid(m, n);
            assert_eq!(enumerate_partitions(&g).unwrap().len(), brute_partition_count(&g));
        }
    }

    #[test]
    fn partitions_are_distinct() {
        let g = grid(3, 4);
        let parts = enumerate_partitions(&g).unwrap();
        let set: std::collections::HashSet<_> = parts.iter().cloned().collect();
        assert_eq!(set.len(), parts.len());
    }

    #[test]
    fn cap_is_enforced() {
        let g = grid(6, 6);
        assert_eq!(enumerate_partitions(&g).unwrap_err(), Error::TooLarge { vertices: 36, cap: 20 });
    }

    #[test]
    fn two_by_two_uniform() {
        let g = grid(2, 2);
        let dist = exact_distribution(&g, 0.0).unwrap();
        assert!(dist.entries.iter().all(|e| e.score == BigUint::one()));
        let probs = dist.exact_probabilities().unwrap();
        let sixth = BigRational::new(BigInt::one(), BigInt::from(6));
        assert!(probs.iter().all(|p| *p == sixth));
    }

    #[test]
    fn large_lambda_prefers_balance() {
        let g = grid(2, 2);
        let dist = exact_distribution(&g, 40.0).unwrap();
        let probs = dist.probabilities();
        let balanced: f64 =
            dist.entries.iter().zip(&probs).filter(|(e, _)| e.imbalance2 == 0).map(|(_, p)| p).sum();
        assert!(balanced > 1.0 - 1e-12);
        assert_eq!(dist.entries.iter().filter(|e| e.imbalance2 == 0).count(), 2);
    }

    #[test]
    fn probabilities_sum_to_one() {
        for lambda in [0.0, 0.5, 1.0, 3.0] {
            let dist = exact_distribution(&grid(3, 4), lambda).unwrap();
            let s = neumaier_sum(dist.probabilities());
            assert!((s - 1.0).abs() < 1e-12);
        }
        let dist = exact_distribution(&grid(3, 3), 0.0).unwrap();
        let s: BigRational = dist.exact_probabilities().unwrap().into_iter().sum();
        assert_eq!(s, BigRational::one());
    }

    #[test]
    fn two_by_two_separation_is_half() {
        let g = grid(2, 2);
        for e in g.primal_edges() {
            let r = exact_separation_ratio(&g, e).unwrap();
            assert_eq!(r, BigRational::new(BigInt::one(), BigInt::from(2)));
            assert!((exact_separation_probability(&g, 0.0, e).unwrap() - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn symmetric_edges_agree() {
        let g = grid(3, 3);
        let probs = separation_probabilities(&g, &exact_distribution(&g, 0.0).unwrap());
        let rotate = |p: PrimalVertex| PrimalVertex::new(p.j, 4 - p.i);
        for e in g.primal_edges() {
            let (a, b) = e.endpoints();
            let r = PrimalEdge::new(rotate(a), rotate(b)).unwrap();
            assert!((probs[g.edge_index(e)] - probs[g.edge_index(&r)]).abs() < 1e-15);
        }
    }

    #[test]
    fn center_edge_regression() {
        let g = grid(3, 3);
        let e = PrimalEdge::new(PrimalVertex::new(2, 2), PrimalVertex::new(2, 3)).unwrap();
        let r = exact_separation_ratio(&g, &e).unwrap();
        let p = exact_separation_probability(&g, 0.0, &e).unwrap();
        assert!((p - r.to_f64().unwrap()).abs() < 1e-15);
        assert_eq!(r, BigRational::new(BigInt::from(CENTER_NUM), BigInt::from(CENTER_DEN)));
        assert!((p - CENTER_VALUE).abs() < 1e-12);
    }

    const CENTER_NUM: u64 = 14;
    const CENTER_DEN: u64 = 69;
    const CENTER_VALUE: f64 = 0.202898550725;

    #[test]
    fn tree_edge_removal_splits_the_grid() {
        let g = grid(2, 3);
        let edges = grid_edges(&g);
        for bits in 0u32..(1 << edges.len()) {
            if bits.count_ones() != 5 {
                continue;
            }
            let tree: Vec<usize> = (0..edges.len()).filter(|&k| bits >> k & 1 == 1).collect();
            if brute_trees(6, &tree.iter().map(|&k| edges[k]).collect::<Vec<_>>()) != 1 {
                continue;
            }
            for &cut in &tree {
                let mut walls = vec![true; edges.len()];
                for &k in &tree {
                    walls[k] = k == cut;
                }
                let (label, count) = g.components_without(&walls);
                assert_eq!(count, 2);
                let a = label.iter().filter(|&&l| l == 0).count();
                assert_eq!(a + label.iter().filter(|&&l| l == 1).count(), 6);
                let mask: Vec<bool> = label.iter().map(|&l| l == 0).collect();
                assert!(Partition2::from_mask(&g, &mask).is_ok());
            }
        }
    }

    #[test]
    fn fairness_floor_positive() {
        for (m, n) in [(2, 2), (2, 3), (3, 3), (3, 4), (4, 4)] {
            let g = grid(m, n);
            for lambda in [0.0, 0.5, 1.0] {
                let probs = separation_probabilities(&g, &exact_distribution(&g, lambda).unwrap());
                let worst = probs.iter().cloned().fold(0.0, f64::max);
                assert!(1.0 - worst > 0.0, "{m}x{n} lambda {lambda}");
            }
        }
    }

    #[test]
    fn normalizers_agree_with_kirchhoff() {
        for (m, n) in [(2, 2), (2, 3), (3, 3), (3, 4)] {
            let g = grid(m, n);
            let a = enumerated_normalizers(&g, DEFAULT_CAP).unwrap();
            let b = kirchhoff_normalizers(&g);
            assert_eq!(a.per_edge, b.per_edge);
            assert!(a.per_edge.iter().all(|x| x <= &a.total));
        }
    }
}
