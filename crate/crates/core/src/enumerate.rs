//! Exhaustive enumerators over the grid dual: bounded walks, simple cycles,
//! and colorings. All streams are deterministic.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::grid::{DualCycle, DualEdge, DualVertex, GridDual};
use crate::oracle;
use crate::walks::Walk;

pub type DualWalk = Walk<DualVertex, DualEdge>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumBudget {
    pub max_walk_len: usize,
    pub max_cycle_len: usize,
    pub max_vertices: usize,
    pub wall_clock_cap: Option<Duration>,
}

impl Default for EnumBudget {
    fn default() -> Self {
        EnumBudget {
            max_walk_len: 12,
            max_cycle_len: usize::MAX,
            max_vertices: oracle::DEFAULT_CAP,
            wall_clock_cap: None,
        }
    }
}

impl EnumBudget {
    pub fn walks(max_walk_len: usize) -> Self {
        EnumBudget { max_walk_len, ..Default::default() }
    }

    pub fn cycles(max_cycle_len: usize) -> Self {
        EnumBudget { max_cycle_len, ..Default::default() }
    }

    fn validate(&self) -> Result<()> {
        if self.max_walk_len == 0 || self.max_cycle_len == 0 || self.max_vertices == 0 {
            return Err(Error::InvalidInput("enumeration budgets must be positive".into()));
        }
        Ok(())
    }
}

struct Clock {
    deadline: Option<Instant>,
    ticks: u32,
}

impl Clock {
    fn new(cap: Option<Duration>) -> Self {
        Clock { deadline: cap.map(|d| Instant::now() + d), ticks: 0 }
    }

    fn expired(&mut self) -> bool {
        self.ticks = self.ticks.wrapping_add(1);
        if self.ticks % 1024 != 0 {
            return false;
        }
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }
}

/// Walks from `from` to `to` of length at most `max_walk_len`, in
/// lexicographic order of their edge sequences.
pub struct WalkIter<'g> {
    g: &'g GridDual,
    to: usize,
    max_len: usize,
    vertices: Vec<usize>,
    edges: Vec<usize>,
    cursor: Vec<usize>,
    pending_emit: bool,
    clock: Clock,
    done: bool,
}

impl<'g> Iterator for WalkIter<'g> {
    type Item = Result<DualWalk>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        loop {
            if self.clock.expired() {
                self.done = true;
                return Some(Err(Error::BudgetExceeded("walk enumeration hit the wall-clock cap".into())));
            }
            if self.pending_emit {
                self.pending_emit = false;
                if *self.vertices.last().unwrap() == self.to {
                    return Some(Ok(self.materialize()));
                }
            }
            let depth = self.edges.len();
            let top = *self.vertices.last().unwrap();
            let nbrs = self.g.dual_neighbors(top);
            let c = self.cursor[depth];
            if depth < self.max_len && c < nbrs.len() {
                self.cursor[depth] += 1;
                let (w, e) = nbrs[c];
                self.vertices.push(w);
                self.edges.push(e);
                self.cursor[depth + 1] = 0;
                self.pending_emit = true;
                continue;
            }
            if depth == 0 {
                self.done = true;
                return None;
            }
            self.vertices.pop();
            self.edges.pop();
        }
    }
}

impl<'g> WalkIter<'g> {
    fn materialize(&self) -> DualWalk {
        let vs = self.vertices.iter().map(|&v| self.g.dual_vertex(v)).collect();
        let es = self.edges.iter().map(|&e| self.g.dual_edge(e)).collect();
        Walk::new(vs, es).expect("well formed")
    }
}

pub fn enumerate_walks(g: &GridDual, from: DualVertex, to: DualVertex, budget: EnumBudget) -> Result<WalkIter<'_>> {
    budget.validate()?;
    let mut cursor = vec![0; budget.max_walk_len + 2];
    cursor[0] = 0;
    Ok(WalkIter {
        g,
        to: g.dual_index(to),
        max_len: budget.max_walk_len,
        vertices: vec![g.dual_index(from)],
        edges: Vec::new(),
        cursor,
        pending_emit: true,
        clock: Clock::new(budget.wall_clock_cap),
        done: false,
    })
}

/// Simple dual cycles of length at most `max_cycle_len`, each exactly once.
///
/// A cycle is found from its smallest dual vertex and reported in the
/// direction whose first edge is smaller than its last.
pub struct CycleIter<'g> {
    g: &'g GridDual,
    max_len: usize,
    start: usize,
    path: Vec<usize>,
    edges: Vec<usize>,
    on_path: Vec<bool>,
    cursor: Vec<usize>,
    clock: Clock,
    done: bool,
}

impl<'g> Iterator for CycleIter<'g> {
    type Item = Result<DualCycle>;

    fn next(&mut self) -> Option<Self::Item> {
        while !self.done {
            if self.clock.expired() {
                self.done = true;
                return Some(Err(Error::BudgetExceeded("cycle enumeration hit the wall-clock cap".into())));
            }
            if self.path.is_empty() {
                if self.start >= self.g.dual_vertex_count() {
                    self.done = true;
                    return None;
                }
                self.path.push(self.start);
                self.on_path[self.start] = true;
                self.cursor[0] = 0;
            }
            let depth = self.edges.len();
            let top = *self.path.last().unwrap();
            let nbrs = self.g.dual_neighbors(top);
            let c = self.cursor[depth];
            if c < nbrs.len() {
                self.cursor[depth] += 1;
                let (w, e) = nbrs[c];
                if w == self.start && depth >= 1 && e != self.edges[depth - 1] && self.edges[0] < e && depth < self.max_len {
                    let mut es: Vec<usize> = self.edges.clone();
                    es.push(e);
                    let set: BTreeSet<DualEdge> = es.iter().map(|&x| self.g.dual_edge(x)).collect();
                    if set.len() == 2 || depth >= 2 {
                        return Some(DualCycle::new(set));
                    }
                    continue;
                }
                if w > self.start && !self.on_path[w] && depth + 1 < self.max_len {
                    self.path.push(w);
                    self.edges.push(e);
                    self.on_path[w] = true;
                    self.cursor[depth + 1] = 0;
                }
                continue;
            }
            let v = self.path.pop().unwrap();
            self.on_path[v] = false;
            if self.edges.pop().is_none() {
                self.start += 1;
            }
        }
        None
    }
}

pub fn enumerate_cycles(g: &GridDual, budget: EnumBudget) -> Result<CycleIter<'_>> {
    budget.validate()?;
    let n = g.dual_vertex_count();
    Ok(CycleIter {
        g,
        max_len: budget.max_cycle_len,
        start: 0,
        path: Vec::new(),
        edges: Vec::new(),
        on_path: vec![false; n],
        cursor: vec![0; n + 2],
        clock: Clock::new(budget.wall_clock_cap),
        done: false,
    })
}

/// Every red/blue coloring of the primal vertices (`true` = red), in
/// increasing bitmask order.
pub fn all_colorings(g: &GridDual, budget: EnumBudget) -> Result<impl Iterator<Item = Vec<bool>>> {
    budget.validate()?;
    let nv = g.vertex_count();
    if nv > budget.max_vertices.min(oracle::HARD_CAP) {
        return Err(Error::TooLarge { vertices: nv, cap: budget.max_vertices.min(oracle::HARD_CAP) });
    }
    Ok((0u64..(1u64 << nv)).map(move |b| oracle::mask_to_bools(b, nv)))
}

/// Every feasible coloring: both color assignments of each feasible partition.
pub fn feasible_colorings(g: &GridDual, budget: EnumBudget) -> Result<impl Iterator<Item = Vec<bool>>> {
    budget.validate()?;
    let nv = g.vertex_count();
    let masks = oracle::enumerate_partition_masks(g, budget.max_vertices)?;
    Ok(masks.into_iter().flat_map(move |b| {
        let m = oracle::mask_to_bools(b, nv);
        let inv: Vec<bool> = m.iter().map(|&x| !x).collect();
        [m, inv]
    }))
}

/// Calls `visit` on every walk from `d.start()` of length at most `max_len`
/// whose loop-erasure is the simple path `d` and which visits `d.end()` only
/// at its last step.
pub fn for_each_walk_with_erasure(
    g: &GridDual,
    d: &DualWalk,
    max_len: usize,
    mut visit: impl FnMut(&DualWalk),
) {
    let target: Vec<usize> = d.vertices().iter().map(|&v| g.dual_index(v)).collect();
    let target_edges: Vec<usize> = d.edges().iter().map(|e| g.dual_edge_index(e)).collect();
    let y = *target.last().unwrap();
    let n = g.dual_vertex_count();
    let mut st = ErasureState {
        slot: vec![usize::MAX; n],
        stack: vec![target[0]],
        stack_edges: Vec::new(),
        common: 1,
    };
    st.slot[target[0]] = 0;
    let mut walk_v = vec![target[0]];
    let mut walk_e: Vec<usize> = Vec::new();
    if target.len() == 1 {
        visit(&to_walk(g, &walk_v, &walk_e));
        return;
    }
    dfs(g, &target, &target_edges, y, max_len, &mut st, &mut walk_v, &mut walk_e, &mut visit);
}

struct ErasureState {
    slot: Vec<usize>,
    stack: Vec<usize>,
    stack_edges: Vec<usize>,
    /// Length of the common prefix of `stack` with the target path.
    common: usize,
}

fn to_walk(g: &GridDual, vs: &[usize], es: &[usize]) -> DualWalk {
    Walk::new(vs.iter().map(|&v| g.dual_vertex(v)).collect(), es.iter().map(|&e| g.dual_edge(e)).collect())
        .expect("well formed")
}

#[allow(clippy::too_many_arguments)]
fn dfs(
    g: &GridDual,
    target: &[usize],
    target_edges: &[usize],
    y: usize,
    max_len: usize,
    st: &mut ErasureState,
    walk_v: &mut Vec<usize>,
    walk_e: &mut Vec<usize>,
    visit: &mut impl FnMut(&DualWalk),
) {
    let top = *walk_v.last().unwrap();
    for &(w, e) in g.dual_neighbors(top) {
        let used = walk_e.len() + 1;
        if used > max_len {
            return;
        }
        // Apply the step to the erasure state, remembering how to undo it.
        let old_common = st.common;
        let step = if st.slot[w] != usize::MAX {
            let k = st.slot[w];
            let mut popped = Vec::new();
            while st.stack.len() > k + 1 {
                let v = st.stack.pop().unwrap();
                let ed = st.stack_edges.pop().unwrap();
                st.slot[v] = usize::MAX;
                popped.push((v, ed));
            }
            st.common = st.common.min(st.stack.len());
            Step::Returned(popped)
        } else {
            st.slot[w] = st.stack.len();
            st.stack.push(w);
            st.stack_edges.push(e);
            let l = st.stack.len();
            if st.common == l - 1 && l <= target.len() && target[l - 1] == w && target_edges[l - 2] == e {
                st.common = l;
            }
            Step::Pushed
        };
        walk_v.push(w);
        walk_e.push(e);
        if w == y {
            if st.common == target.len() && st.stack.len() == target.len() {
                visit(&to_walk(g, walk_v, walk_e));
            }
        } else {
            let extra = if st.stack.len() > st.common { 1 } else { 0 };
            let need = extra + (target.len() - st.common);
            if used + need <= max_len {
                dfs(g, target, target_edges, y, max_len, st, walk_v, walk_e, visit);
            }
        }
        walk_v.pop();
        walk_e.pop();
        match step {
            Step::Pushed => {
                st.stack.pop();
                st.stack_edges.pop();
                st.slot[w] = usize::MAX;
            }
            Step::Returned(popped) => {
                for &(v, ed) in popped.iter().rev() {
                    st.slot[v] = st.stack.len();
                    st.stack.push(v);
                    st.stack_edges.push(ed);
                }
            }
        }
        st.common = old_common;
    }
}

enum Step {
    Pushed,
    Returned(Vec<(usize, usize)>),
}
