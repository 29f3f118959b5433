//! Per-edge separation frequencies and histogram summaries.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridDual, Partition2};
use crate::recom::{KPartition, WeightedGraph};
use crate::sampler::{sample_many, SamplerConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsMeta {
    pub source: String,
    pub seed: u64,
    pub params: serde_json::Value,
}

/// Separation counts per edge. Stats over the same edges merge by addition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SepStats {
    /// Edge labels, `a-b` in the source graph's vertex naming.
    pub edges: Vec<String>,
    pub sampled: Vec<u64>,
    pub separated: Vec<u64>,
    pub meta: StatsMeta,
}

impl SepStats {
    pub fn new(edges: Vec<String>, meta: StatsMeta) -> Self {
        let n = edges.len();
        SepStats { edges, sampled: vec![0; n], separated: vec![0; n], meta }
    }

    pub fn for_grid(g: &GridDual, meta: StatsMeta) -> Self {
        let labels = (0..g.edge_count())
            .map(|e| {
                let (a, b) = g.primal_edge(e).endpoints();
                format!("{a}-{b}")
            })
            .collect();
        SepStats::new(labels, meta)
    }

    pub fn for_graph(g: &WeightedGraph, meta: StatsMeta) -> Self {
        let labels = g.edges().iter().map(|&(a, b)| format!("{}-{}", g.id(a), g.id(b))).collect();
        SepStats::new(labels, meta)
    }

    /// Records one observation; `cut(e)` says whether edge `e` is separated.
    pub fn record(&mut self, cut: impl Fn(usize) -> bool) {
        for e in 0..self.edges.len() {
            self.sampled[e] += 1;
            if cut(e) {
                self.separated[e] += 1;
            }
        }
    }

    pub fn record_partition(&mut self, g: &GridDual, p: &Partition2) {
        self.record(|e| {
            let (a, b) = g.edge_ends(e);
            p.separates(a, b)
        });
    }

    pub fn record_plan(&mut self, g: &WeightedGraph, p: &KPartition) {
        self.record(|e| p.cuts(g, e));
    }

    pub fn merge(&mut self, other: &SepStats) -> Result<()> {
        if self.edges != other.edges {
            return Err(Error::InvalidInput("cannot merge stats over different edge sets".into()));
        }
        for e in 0..self.edges.len() {
            self.sampled[e] += other.sampled[e];
            self.separated[e] += other.separated[e];
        }
        Ok(())
    }

    pub fn observations(&self) -> u64 {
        self.sampled.iter().copied().max().unwrap_or(0)
    }

    /// Separated fraction per edge; edges never sampled are skipped.
    pub fn frequencies(&self) -> Vec<f64> {
        self.sampled
            .iter()
            .zip(&self.separated)
            .filter(|(&s, _)| s > 0)
            .map(|(&s, &c)| c as f64 / s as f64)
            .collect()
    }
}

/// Separation stats from `n` sampler draws split across `workers` streams.
pub fn estimate_separation(g: &GridDual, cfg: SamplerConfig, n: usize, workers: usize) -> Result<SepStats> {
    if n == 0 {
        return Err(Error::InvalidInput("need at least one sample".into()));
    }
    let meta = StatsMeta {
        source: "sample".into(),
        seed: cfg.seed,
        params: serde_json::json!({
            "rows": g.dims().rows,
            "cols": g.dims().cols,
            "lambda": cfg.lambda,
            "mode": cfg.mode,
            "n": n,
            "workers": workers,
        }),
    };
    let mut stats = SepStats::for_grid(g, meta);
    for s in sample_many(g, cfg, n, workers)? {
        stats.record_partition(g, &s.partition);
    }
    Ok(stats)
}

/// Separation stats over a stream of plans, such as a ReCom chain.
pub fn estimate_from_plans(
    g: &WeightedGraph,
    plans: impl IntoIterator<Item = Result<KPartition>>,
    meta: StatsMeta,
) -> Result<SepStats> {
    let mut stats = SepStats::for_graph(g, meta);
    for p in plans {
        stats.record_plan(g, &p?);
    }
    if stats.observations() == 0 {
        return Err(Error::EmptyStats);
    }
    Ok(stats)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bin {
    pub bin_lo: f64,
    pub bin_hi: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bins: Vec<Bin>,
    pub edges: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    /// One minus the largest separation frequency.
    pub alpha_hat: f64,
}

impl Histogram {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_lo,bin_hi,count\n");
        for b in &self.bins {
            out.push_str(&format!("{},{},{}\n", b.bin_lo, b.bin_hi, b.count));
        }
        out
    }
}

/// Equal-width bins over `[0, 1]`; the last bin includes 1.
pub fn emit_histogram(s: &SepStats, bins: usize) -> Result<Histogram> {
    if bins == 0 {
        return Err(Error::InvalidInput("need at least one bin".into()));
    }
    let freqs = s.frequencies();
    if freqs.is_empty() {
        return Err(Error::EmptyStats);
    }
    let mut counts = vec![0usize; bins];
    for &f in &freqs {
        let k = ((f * bins as f64 + 1e-9).floor() as usize).min(bins - 1);
        counts[k] += 1;
    }
    let min = freqs.iter().copied().fold(f64::INFINITY, f64::min);
    let max = freqs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = freqs.iter().sum::<f64>() / freqs.len() as f64;
    Ok(Histogram {
        bins: counts
            .into_iter()
            .enumerate()
            .map(|(k, count)| Bin { bin_lo: k as f64 / bins as f64, bin_hi: (k + 1) as f64 / bins as f64, count })
            .collect(),
        edges: freqs.len(),
        min,
        max,
        mean,
        alpha_hat: 1.0 - max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridDims;
    use crate::oracle;

    fn grid(m: usize, n: usize) -> GridDual {
        GridDual::build(GridDims::new(m, n).unwrap()).unwrap()
    }

    fn meta() -> StatsMeta {
        StatsMeta { source: "test".into(), seed: 0, params: serde_json::Value::Null }
    }

    #[test]
    fn two_by_two_edges_are_fair_coins() {
        let g = grid(2, 2);
        let s = estimate_separation(&g, SamplerConfig { seed: 5, ..Default::default() }, 100_000, 1).unwrap();
        for f in s.frequencies() {
            assert!((f - 0.5).abs() < 0.01, "{f}");
        }
    }

    #[test]
    fn single_sample_frequencies_are_binary() {
        let g = grid(3, 3);
        let s = estimate_separation(&g, SamplerConfig::default(), 1, 1).unwrap();
        assert!(s.frequencies().iter().all(|&f| f == 0.0 || f == 1.0));
    }

    #[test]
    fn shards_merge_to_the_joint_run() {
        let g = grid(3, 3);
        let cfg = SamplerConfig { seed: 9, ..Default::default() };
        let joint = estimate_separation(&g, cfg, 400, 4).unwrap();
        let mut merged = SepStats::for_grid(&g, joint.meta.clone());
        for s in sample_many(&g, cfg, 400, 4).unwrap().chunks(100) {
            let mut shard = SepStats::for_grid(&g, meta());
            for x in s {
                shard.record_partition(&g, &x.partition);
            }
            merged.merge(&shard).unwrap();
        }
        assert_eq!(merged.sampled, joint.sampled);
        assert_eq!(merged.separated, joint.separated);
        let other = SepStats::for_grid(&grid(2, 3), meta());
        assert!(merged.merge(&other).is_err());
    }

    #[test]
    fn histogram_of_constant_frequencies() {
        let mut s = SepStats::new(vec!["a".into(), "b".into(), "c".into()], meta());
        s.sampled = vec![10; 3];
        s.separated = vec![5; 3];
        let h = emit_histogram(&s, 10).unwrap();
        let occupied: Vec<&Bin> = h.bins.iter().filter(|b| b.count > 0).collect();
        assert_eq!(occupied.len(), 1);
        assert_eq!((occupied[0].bin_lo, occupied[0].bin_hi), (0.5, 0.6));
        assert_eq!(h.alpha_hat, 0.5);
        assert!(h.to_csv().starts_with("bin_lo,bin_hi,count\n0,0.1,0\n"));
        let empty = SepStats::new(vec!["a".into()], meta());
        assert_eq!(emit_histogram(&empty, 10).unwrap_err(), Error::EmptyStats);
        assert!(emit_histogram(&s, 0).is_err());
    }

    #[test]
    fn histogram_counts_sum_to_edges() {
        let g = grid(4, 4);
        let s = estimate_separation(&g, SamplerConfig { seed: 2, ..Default::default() }, 200, 1).unwrap();
        let h = emit_histogram(&s, 7).unwrap();
        assert_eq!(h.bins.iter().map(|b| b.count).sum::<usize>(), g.edge_count());
        let max = s.frequencies().into_iter().fold(0.0, f64::max);
        assert_eq!(h.alpha_hat, 1.0 - max);
    }

    #[test]
    fn frequencies_track_exact_values() {
        let g = grid(3, 3);
        let n = 20_000;
        let s = estimate_separation(&g, SamplerConfig { seed: 4, lambda: 1.0, ..Default::default() }, n, 1).unwrap();
        let dist = oracle::exact_distribution(&g, 1.0).unwrap();
        let exact = oracle::separation_probabilities(&g, &dist);
        for (f, p) in s.frequencies().iter().zip(exact) {
            let sigma = (p * (1.0 - p) / n as f64).sqrt();
            assert!((f - p).abs() <= 4.0 * sigma + 1e-12, "{f} vs {p}");
        }
    }
}
