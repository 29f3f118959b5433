//! Local reconnection of separated neighbors: given a feasible partition that
//! puts adjacent `u` and `v` on different sides, find a nearby feasible
//! partition that keeps them together, and audit the resulting mapping from
//! separating cycles to non-separating ones.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{locally_different, GridDims, GridDual, Partition2, PrimalVertex, SubgridWindow};
use crate::oracle::{self, BitGrid};
use crate::structures::{classify_case, Coloring};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ReconnectConfig {
    /// Flipped vertices stay within this Manhattan distance of `u` or `v`.
    pub gamma: usize,
    /// Minimum side size and grid dimension accepted.
    pub n0: usize,
    /// Largest flip set tried before giving up.
    pub max_flips: usize,
}

impl Default for ReconnectConfig {
    fn default() -> Self {
        ReconnectConfig { gamma: 10, n0: 1, max_flips: 6 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReconnectResult {
    pub partition: Partition2,
    /// Recolored vertices in increasing index order.
    pub flipped: Vec<PrimalVertex>,
    /// Growth of the side that ends up holding both `u` and `v`.
    pub delta_size: i64,
    pub outer_degree_before: usize,
    pub outer_degree_after: usize,
    /// Local case of the recolored endpoint, when it is far enough from the border.
    pub case: Option<u8>,
}

/// Precomputed adjacency data for fast feasibility checks.
struct Board<'g> {
    g: &'g GridDual,
    bits: Option<BitGrid>,
    boundary: Vec<(usize, usize)>,
    king: Vec<Vec<usize>>,
}

impl<'g> Board<'g> {
    fn new(g: &'g GridDual) -> Self {
        let dims = g.dims();
        let bits = (g.vertex_count() <= 64).then(|| BitGrid::new(g));
        let boundary = (0..g.edge_count()).filter(|&e| g.is_boundary_edge(e)).map(|e| g.edge_ends(e)).collect();
        let king = (0..g.vertex_count())
            .map(|v| {
                let (i, j) = ((v / dims.cols) as isize, (v % dims.cols) as isize);
                let mut out = Vec::new();
                for di in -1..=1 {
                    for dj in -1..=1 {
                        let (a, b) = (i + di, j + dj);
                        if (di, dj) != (0, 0) && a >= 0 && b >= 0 && (a as usize) < dims.rows && (b as usize) < dims.cols {
                            out.push(a as usize * dims.cols + b as usize);
                        }
                    }
                }
                out
            })
            .collect();
        Board { g, bits, boundary, king }
    }

    fn outer_degree(&self, red: &[bool]) -> usize {
        self.boundary.iter().filter(|&&(a, b)| red[a] != red[b]).count()
    }

    fn feasible(&self, red: &[bool]) -> bool {
        match &self.bits {
            Some(bits) => {
                let mask = red.iter().enumerate().fold(0u64, |acc, (v, &r)| acc | (u64::from(r) << v));
                bits.connected(mask) && bits.connected(bits.full() & !mask)
            }
            None => {
                red.iter().any(|&r| r)
                    && red.iter().any(|&r| !r)
                    && self.g.side_connected(red, true)
                    && self.g.side_connected(red, false)
            }
        }
    }
}

fn manhattan(dims: GridDims, a: usize, b: usize) -> usize {
    (a / dims.cols).abs_diff(b / dims.cols) + (a % dims.cols).abs_diff(b % dims.cols)
}

fn to_vertex(dims: GridDims, v: usize) -> PrimalVertex {
    PrimalVertex::new(v / dims.cols + 1, v % dims.cols + 1)
}

struct Candidate {
    flips: Vec<usize>,
    delta: i64,
    outer_after: usize,
}

struct Search<'a, 'g> {
    board: &'a Board<'g>,
    red: &'a [bool],
    u: usize,
    v: usize,
    pool: Vec<bool>,
    outer_before: usize,
}

impl Search<'_, '_> {
    /// Checks one flip set; `seed` is the endpoint being recolored.
    fn evaluate(&self, seed: usize, flips: &[usize], scratch: &mut Vec<bool>) -> Option<Candidate> {
        scratch.clear();
        scratch.extend_from_slice(self.red);
        for &w in flips {
            scratch[w] = !scratch[w];
        }
        let target = !self.red[seed];
        let before = self.red.iter().filter(|&&r| r == target).count() as i64;
        let after = scratch.iter().filter(|&&r| r == target).count() as i64;
        let delta = after - before;
        if delta.abs() > 3 {
            return None;
        }
        let outer_after = self.board.outer_degree(scratch);
        if outer_after > self.outer_before || !self.board.feasible(scratch) {
            return None;
        }
        Some(Candidate { flips: flips.to_vec(), delta, outer_after })
    }

    /// King-connected flip sets containing `seed`, grown one vertex at a time.
    fn grow(&self, level: &[Vec<usize>], seed: usize) -> Vec<Vec<usize>> {
        let other = if seed == self.u { self.v } else { self.u };
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for set in level {
            for &w in set {
                for &x in &self.board.king[w] {
                    if x == other || !self.pool[x] || set.contains(&x) {
                        continue;
                    }
                    let mut next = set.clone();
                    let at = next.partition_point(|&y| y < x);
                    next.insert(at, x);
                    if seen.insert(next.clone()) {
                        out.push(next);
                    }
                }
            }
        }
        out.sort();
        out
    }
}

/// Finds a feasible partition keeping `u` and `v` together by recoloring
/// exactly one of them plus a few nearby vertices.
///
/// Flip sets are tried by increasing size, then by the absolute size change,
/// then lexicographically.
pub fn unseparate(
    g: &GridDual,
    p: &Partition2,
    u: PrimalVertex,
    v: PrimalVertex,
    cfg: &ReconnectConfig,
) -> Result<ReconnectResult> {
    let board = Board::new(g);
    unseparate_on(&board, p.mask(), u, v, cfg).map(|r| {
        let red = mask_after(p.mask(), &r.flips, g.dims());
        finish(g, &red, r)
    })
}

struct Found {
    flips: Vec<usize>,
    delta: i64,
    outer_before: usize,
    outer_after: usize,
    case: Option<u8>,
}

fn mask_after(red: &[bool], flips: &[usize], _dims: GridDims) -> Vec<bool> {
    let mut out = red.to_vec();
    for &w in flips {
        out[w] = !out[w];
    }
    out
}

fn finish(g: &GridDual, red: &[bool], f: Found) -> ReconnectResult {
    let dims = g.dims();
    ReconnectResult {
        partition: Partition2::from_mask(g, red).expect("search only accepts feasible colorings"),
        flipped: f.flips.iter().map(|&w| to_vertex(dims, w)).collect(),
        delta_size: f.delta,
        outer_degree_before: f.outer_before,
        outer_degree_after: f.outer_after,
        case: f.case,
    }
}

fn unseparate_on(
    board: &Board<'_>,
    red: &[bool],
    u: PrimalVertex,
    v: PrimalVertex,
    cfg: &ReconnectConfig,
) -> Result<Found> {
    let g = board.g;
    let dims = g.dims();
    if !g.contains_vertex(u) || !g.contains_vertex(v) || !u.is_adjacent(&v) {
        return Err(Error::InvalidInput(format!("{u} and {v} are not adjacent grid vertices")));
    }
    if dims.rows < cfg.n0 || dims.cols < cfg.n0 {
        return Err(Error::InvalidInput(format!("grid is smaller than n0 = {}", cfg.n0)));
    }
    let (ui, vi) = (g.vertex_index(u), g.vertex_index(v));
    if red[ui] == red[vi] {
        return Err(Error::InvalidInput(format!("{u} and {v} are not separated")));
    }
    let reds = red.iter().filter(|&&r| r).count();
    if reds.min(red.len() - reds) < cfg.n0 {
        return Err(Error::InvalidInput(format!("a side has fewer than n0 = {} vertices", cfg.n0)));
    }
    let pool = (0..red.len()).map(|w| manhattan(dims, w, ui).min(manhattan(dims, w, vi)) <= cfg.gamma).collect();
    let search = Search { board, red, u: ui, v: vi, pool, outer_before: board.outer_degree(red) };
    let mut scratch = Vec::with_capacity(red.len());
    let mut levels: Vec<(usize, Vec<Vec<usize>>)> = vec![(ui, vec![vec![ui]]), (vi, vec![vec![vi]])];
    for k in 1..=cfg.max_flips {
        if k > 1 {
            for (seed, level) in levels.iter_mut() {
                *level = search.grow(level, *seed);
            }
        }
        let mut best: Option<(usize, Candidate)> = None;
        for (seed, level) in &levels {
            for set in level {
                let Some(c) = search.evaluate(*seed, set, &mut scratch) else { continue };
                let better = match &best {
                    None => true,
                    Some((_, b)) => (c.delta.abs(), &c.flips) < (b.delta.abs(), &b.flips),
                };
                if better {
                    best = Some((*seed, c));
                }
            }
        }
        if let Some((seed, c)) = best {
            let other = if seed == ui { vi } else { ui };
            let coloring = Coloring::new(dims, red.to_vec()).expect("mask length matches");
            return Ok(Found {
                flips: c.flips,
                delta: c.delta,
                outer_before: search.outer_before,
                outer_after: c.outer_after,
                case: classify_case(&coloring, seed, other).ok(),
            });
        }
    }
    Err(Error::NoCandidateFound(format!(
        "no flip set of size <= {} within distance {} reconnects {u} and {v}",
        cfg.max_flips, cfg.gamma
    )))
}

/// Outcome of the exhaustive reconnection sweep.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SweepReport {
    pub partitions: usize,
    pub instances: usize,
    pub max_flips: usize,
    pub max_abs_delta: i64,
    pub flips_histogram: BTreeMap<usize, usize>,
    /// Failing instances as `coloring | u | v | reason`, capped.
    pub failures: Vec<String>,
    pub failure_count: usize,
}

impl SweepReport {
    pub fn passed(&self) -> bool {
        self.failure_count == 0
    }

    fn merge(&mut self, other: SweepReport) {
        self.partitions += other.partitions;
        self.instances += other.instances;
        self.max_flips = self.max_flips.max(other.max_flips);
        self.max_abs_delta = self.max_abs_delta.max(other.max_abs_delta);
        for (k, c) in other.flips_histogram {
            *self.flips_histogram.entry(k).or_default() += c;
        }
        self.failure_count += other.failure_count;
        self.failures.extend(other.failures);
        self.failures.truncate(MAX_FAILURES);
    }
}

const MAX_FAILURES: usize = 20;

/// Largest grid the unseparating-map audit enumerates.
pub const MAP_CAP: usize = 25;

/// Runs [`unseparate`] on every feasible partition and every separated
/// adjacent pair, re-checking each result independently.
pub fn sweep_all(g: &GridDual, cfg: &ReconnectConfig, workers: usize) -> Result<SweepReport> {
    let masks = oracle::enumerate_partition_masks(g, oracle::HARD_CAP)?;
    let workers = workers.max(1);
    let chunk = masks.len().div_ceil(workers).max(1);
    let parts: Vec<SweepReport> = std::thread::scope(|s| {
        let handles: Vec<_> = masks.chunks(chunk).map(|share| s.spawn(move || sweep_chunk(g, cfg, share))).collect();
        handles.into_iter().map(|h| h.join().expect("sweep worker panicked")).collect()
    });
    let mut report = SweepReport::default();
    for p in parts {
        report.merge(p);
    }
    Ok(report)
}

fn sweep_chunk(g: &GridDual, cfg: &ReconnectConfig, masks: &[u64]) -> SweepReport {
    let board = Board::new(g);
    let dims = g.dims();
    let nv = g.vertex_count();
    let mut report = SweepReport::default();
    for &bits in masks {
        report.partitions += 1;
        let red = oracle::mask_to_bools(bits, nv);
        for e in 0..g.edge_count() {
            let (a, b) = g.edge_ends(e);
            if red[a] == red[b] {
                continue;
            }
            report.instances += 1;
            let (u, v) = (to_vertex(dims, a), to_vertex(dims, b));
            let outcome = unseparate_on(&board, &red, u, v, cfg).and_then(|f| {
                let after = mask_after(&red, &f.flips, dims);
                audit_result(&board, &red, &after, a, b, &f, cfg)?;
                Ok(f)
            });
            match outcome {
                Ok(f) => {
                    report.max_flips = report.max_flips.max(f.flips.len());
                    report.max_abs_delta = report.max_abs_delta.max(f.delta.abs());
                    *report.flips_histogram.entry(f.flips.len()).or_default() += 1;
                }
                Err(err) => {
                    report.failure_count += 1;
                    if report.failures.len() < MAX_FAILURES {
                        let c = Coloring::new(dims, red.clone()).expect("mask length matches");
                        report.failures.push(format!("{} | {u} | {v} | {err}", c.to_string().replace('\n', "/")));
                    }
                }
            }
        }
    }
    report
}

/// Independent re-check of the four reconnection guarantees.
fn audit_result(
    board: &Board<'_>,
    before: &[bool],
    after: &[bool],
    u: usize,
    v: usize,
    f: &Found,
    cfg: &ReconnectConfig,
) -> Result<()> {
    let g = board.g;
    let dims = g.dims();
    let fail = |why: &str| Err(Error::NoCandidateFound(why.to_string()));
    if after[u] != after[v] {
        return fail("u and v still separated");
    }
    if !g.side_connected(after, true) || !g.side_connected(after, false) {
        return fail("result is not feasible");
    }
    for w in 0..before.len() {
        if before[w] != after[w] && manhattan(dims, w, u).min(manhattan(dims, w, v)) > cfg.gamma {
            return fail("a flip lies outside the gamma ball");
        }
    }
    let side = after[u];
    let grown = after.iter().filter(|&&r| r == side).count() as i64 - before.iter().filter(|&&r| r == side).count() as i64;
    if grown != f.delta || grown.abs() > 3 {
        return fail("size change out of bounds");
    }
    if board.outer_degree(after) > board.outer_degree(before) {
        return fail("outer degree increased");
    }
    Ok(())
}

/// Per-cycle details of the unseparating map.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnsepRecord {
    pub cycle_len: usize,
    pub window_edges: usize,
    pub imbalance_delta: f64,
    pub outer_before: usize,
    pub outer_after: usize,
    pub flips: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnsepReport {
    pub rows: usize,
    pub cols: usize,
    pub u: PrimalVertex,
    pub v: PrimalVertex,
    pub min_len: usize,
    pub gamma: usize,
    /// Number of separating cycles in the domain.
    pub cycles: usize,
    pub images: usize,
    /// Largest window edge count over the domain.
    pub beta_observed: usize,
    /// Largest absolute imbalance change.
    pub delta_observed: f64,
    /// Number of cycles whose imbalance changes by more than 2.
    pub delta_flagged: usize,
    pub max_preimage: usize,
    pub outer_monotone: bool,
    pub within_gamma: bool,
    pub preimage_bound_ok: bool,
    /// Histogram of window edge counts.
    pub window_sizes: BTreeMap<usize, usize>,
    pub records: Vec<UnsepRecord>,
    pub failures: Vec<String>,
    pub passes: bool,
}

/// Builds the map over every feasible partition whose cut separates `u`
/// and `v` and has at least `min_len` edges, then checks locality, Outer
/// monotonicity, imbalance change, and preimage sizes.
pub fn verify_unseparating_map(
    g: &GridDual,
    u: PrimalVertex,
    v: PrimalVertex,
    min_len: usize,
    cfg: &ReconnectConfig,
    keep_records: bool,
) -> Result<UnsepReport> {
    if !g.contains_vertex(u) || !g.contains_vertex(v) || !u.is_adjacent(&v) {
        return Err(Error::InvalidInput(format!("{u} and {v} are not adjacent grid vertices")));
    }
    let masks = oracle::enumerate_partition_masks(g, MAP_CAP)?;
    Ok(verify_on(&Board::new(g), &masks, u, v, min_len, cfg, keep_records))
}

/// [`verify_unseparating_map`] for every edge not on the grid border,
/// sharing one partition enumeration.
pub fn verify_interior_edges(g: &GridDual, min_len: usize, cfg: &ReconnectConfig) -> Result<Vec<UnsepReport>> {
    let masks = oracle::enumerate_partition_masks(g, MAP_CAP)?;
    let board = Board::new(g);
    Ok((0..g.edge_count())
        .filter(|&e| !g.is_boundary_edge(e))
        .map(|e| {
            let (a, b) = g.edge_ends(e);
            verify_on(&board, &masks, g.vertex(a), g.vertex(b), min_len, cfg, false)
        })
        .collect())
}

fn verify_on(
    board: &Board<'_>,
    masks: &[u64],
    u: PrimalVertex,
    v: PrimalVertex,
    min_len: usize,
    cfg: &ReconnectConfig,
    keep_records: bool,
) -> UnsepReport {
    let g = board.g;
    let dims = g.dims();
    let nv = g.vertex_count();
    let (ui, vi) = (g.vertex_index(u), g.vertex_index(v));
    let ball = gamma_window(dims, u, v, cfg.gamma);
    let mut report = UnsepReport {
        rows: dims.rows,
        cols: dims.cols,
        u,
        v,
        min_len,
        gamma: cfg.gamma,
        cycles: 0,
        images: 0,
        beta_observed: 0,
        delta_observed: 0.0,
        delta_flagged: 0,
        max_preimage: 0,
        outer_monotone: true,
        within_gamma: true,
        preimage_bound_ok: true,
        window_sizes: BTreeMap::new(),
        records: Vec::new(),
        failures: Vec::new(),
        passes: true,
    };
    let mut preimages: HashMap<u64, usize> = HashMap::new();
    let mut failure_count = 0usize;
    for &bits in masks {
        let red = oracle::mask_to_bools(bits, nv);
        if red[ui] == red[vi] {
            continue;
        }
        let cut: Vec<usize> = (0..g.edge_count())
            .filter(|&e| {
                let (a, b) = g.edge_ends(e);
                red[a] != red[b]
            })
            .collect();
        if cut.len() < min_len {
            continue;
        }
        report.cycles += 1;
        let found = match unseparate_on(board, &red, u, v, cfg) {
            Ok(f) => f,
            Err(err) => {
                failure_count += 1;
                if report.failures.len() < MAX_FAILURES {
                    let c = Coloring::new(dims, red.clone()).expect("mask length matches");
                    report.failures.push(format!("{} | {err}", c.to_string().replace('\n', "/")));
                }
                continue;
            }
        };
        let after = mask_after(&red, &found.flips, dims);
        let cut_after: Vec<usize> = (0..g.edge_count())
            .filter(|&e| {
                let (a, b) = g.edge_ends(e);
                after[a] != after[b]
            })
            .collect();
        let de: Vec<_> = cut.iter().map(|&e| g.dual_edge(e)).collect();
        let de_after: Vec<_> = cut_after.iter().map(|&e| g.dual_edge(e)).collect();
        let diff = locally_different(&de, &de_after);
        let window_edges = diff.edge_count();
        if let Some(w) = diff.window() {
            if !ball.contains_window(&w) {
                report.within_gamma = false;
            }
        }
        let imb = |m: &[bool]| {
            let r = m.iter().filter(|&&x| x).count();
            r.abs_diff(m.len() - r) as f64 / 2.0
        };
        let imbalance_delta = (imb(&red) - imb(&after)).abs();
        let outer_before = board.outer_degree(&red);
        let outer_after = board.outer_degree(&after);
        if outer_after > outer_before {
            report.outer_monotone = false;
        }
        report.beta_observed = report.beta_observed.max(window_edges);
        report.delta_observed = report.delta_observed.max(imbalance_delta);
        if imbalance_delta > 2.0 {
            report.delta_flagged += 1;
        }
        *report.window_sizes.entry(window_edges).or_default() += 1;
        // Both orientations of a coloring are the same partition.
        let key = after.iter().enumerate().fold(0u64, |acc, (w, &r)| acc | (u64::from(r != after[0]) << w));
        *preimages.entry(key).or_default() += 1;
        if keep_records {
            report.records.push(UnsepRecord {
                cycle_len: cut.len(),
                window_edges,
                imbalance_delta,
                outer_before,
                outer_after,
                flips: found.flips.len(),
            });
        }
    }
    report.images = preimages.len();
    report.max_preimage = preimages.values().copied().max().unwrap_or(0);
    let bound = 1u128 << report.beta_observed.min(127);
    report.preimage_bound_ok = (report.max_preimage as u128) <= bound;
    report.passes = failure_count == 0
        && report.outer_monotone
        && report.within_gamma
        && report.preimage_bound_ok
        && report.delta_observed <= 3.0;
    report
}

/// Faces within distance `gamma` of the faces around `u` and `v`.
fn gamma_window(dims: GridDims, u: PrimalVertex, v: PrimalVertex, gamma: usize) -> SubgridWindow {
    let (ilo, ihi) = (u.i.min(v.i), u.i.max(v.i));
    let (jlo, jhi) = (u.j.min(v.j), u.j.max(v.j));
    SubgridWindow {
        row_lo: ilo.saturating_sub(1).max(1),
        row_hi: ihi.min(dims.rows - 1),
        col_lo: jlo.saturating_sub(1).max(1),
        col_hi: jhi.min(dims.cols - 1),
    }
    .dilate(gamma, dims)
}
