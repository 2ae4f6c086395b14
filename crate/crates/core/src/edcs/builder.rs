//! Static damaged-EDCS construction as a resumable state machine.
//!
//! Each call to [`StaticBuilder::step`] examines at most one edge, so the
//! batch scheduler can spread a rebuild over many update steps. Running the
//! machine to completion is the plain static construction.

use std::collections::BTreeSet;

use crate::graph::{DynamicGraph, Edge, VertexId};

/// Per-run statistics of the static construction.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BuildStats {
    /// Outer iterations, including the final one.
    pub iterations: usize,
    /// Potential `Phi = |H|(2 beta - 1) - sum_{e in H} deg_H(e)` at the end
    /// of each outer iteration; the last entry is taken after stripping.
    pub phi_trace: Vec<f64>,
    /// `|E'|` of each outer iteration.
    pub edges_added_per_iteration: Vec<usize>,
    /// True when the run used the narrow-gap thresholds of [`Thresholds`].
    pub narrow_gap: bool,
}

impl BuildStats {
    /// Guaranteed potential gain of a non-final iteration:
    /// `lambda^2 beta^2 delta n / 16`.
    pub fn min_gain(beta: f64, lambda: f64, delta: f64, n: usize) -> f64 {
        lambda * lambda * beta * beta * delta * n as f64 / 16.0
    }

    /// `ceil(16 / (lambda^2 delta)) + 1`.
    pub fn iteration_bound(lambda: f64, delta: f64) -> usize {
        (16.0 / (lambda * lambda * delta)).ceil() as usize + 1
    }
}

/// Degree thresholds of one run: an edge outside `H` is added iff its
/// degree is below `add_below`, an edge of `H` is removed iff its degree is
/// above `remove_above`.
///
/// The nominal values are `beta (1 - lambda/2)` and `beta (1 - lambda/4)`.
/// Adding an edge of degree `d` changes `Phi_b = |H|(2b - 1) - sum deg_H(e)`
/// by `2b - 2d - 3` and removing one by `2d - 2b - 1`, so the loop only has
/// to terminate when some integer `b` makes both positive, i.e. when the
/// largest addable degree and the smallest removable degree are at least 3
/// apart. Otherwise edges cycle in and out forever (a single edge with
/// `beta = 2` already does). In that narrow-gap case the thresholds become
/// `d <= b - 2` to add and `d >= b + 1` to remove with
/// `b = floor(beta) - 2 floor(lambda beta / 8)`, which keeps the degree cap
/// of the stripped output at `beta`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Thresholds {
    pub add_below: f64,
    pub remove_above: f64,
    pub narrow_gap: bool,
}

impl Thresholds {
    pub fn new(beta: f64, lambda: f64) -> Self {
        let add_below = beta * (1.0 - lambda / 2.0);
        let remove_above = beta * (1.0 - lambda / 4.0);
        let max_add = add_below.ceil() - 1.0;
        let min_remove = remove_above.floor() + 1.0;
        if min_remove - max_add >= 3.0 {
            return Thresholds { add_below, remove_above, narrow_gap: false };
        }
        let b = beta.floor() - 2.0 * (lambda * beta / 8.0).floor();
        Thresholds { add_below: b - 1.0, remove_above: b, narrow_gap: true }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Phase {
    Add,
    Remove,
    Strip,
    Cover,
    Done,
}

/// Resumable run of the static construction on a fixed graph.
#[derive(Clone, Debug)]
pub struct StaticBuilder {
    beta: f64,
    lambda: f64,
    delta: f64,
    n: usize,
    thresholds: Thresholds,
    h: DynamicGraph,
    /// `sum_v deg_H(v)^2`, equal to `sum_{e in H} deg_H(e)`.
    sum_sq: u64,
    phase: Phase,
    cursor: Option<Edge>,
    added: Vec<Edge>,
    deg_added: Vec<usize>,
    strip_idx: usize,
    damaged: BTreeSet<VertexId>,
    /// Underfull edges left after stripping, found by the cover scan.
    uncovered: Vec<Edge>,
    stats: BuildStats,
}

impl StaticBuilder {
    pub fn new(n: usize, beta: f64, lambda: f64, delta: f64) -> Self {
        let thresholds = Thresholds::new(beta, lambda);
        StaticBuilder {
            beta,
            lambda,
            delta,
            n,
            thresholds,
            h: DynamicGraph::new(n),
            sum_sq: 0,
            phase: Phase::Add,
            cursor: None,
            added: Vec::new(),
            deg_added: vec![0; n],
            strip_idx: 0,
            damaged: BTreeSet::new(),
            uncovered: Vec::new(),
            stats: BuildStats { narrow_gap: thresholds.narrow_gap, ..BuildStats::default() },
        }
    }

    fn phi(&self) -> f64 {
        self.h.edge_count() as f64 * (2.0 * self.beta - 1.0) - self.sum_sq as f64
    }

    fn add(&mut self, e: Edge) {
        let du = self.h.degree(e.u) as u64;
        let dv = self.h.degree(e.v) as u64;
        self.h.insert(e).expect("builder add");
        self.sum_sq += 2 * du + 1 + 2 * dv + 1;
    }

    fn remove(&mut self, e: Edge) {
        self.h.delete(e).expect("builder remove");
        let du = self.h.degree(e.u) as u64;
        let dv = self.h.degree(e.v) as u64;
        self.sum_sq -= 2 * du + 1 + 2 * dv + 1;
    }

    pub fn is_done(&self) -> bool {
        self.phase == Phase::Done
    }

    /// Advance by one edge examination. `g` must not change between calls.
    /// Returns true once the construction has finished.
    pub fn step(&mut self, g: &DynamicGraph) -> bool {
        match self.phase {
            Phase::Add => match g.next_edge_after(self.cursor) {
                Some(e) => {
                    self.cursor = Some(e);
                    if !self.h.has_edge(e) && (self.h.edge_degree(e) as f64) < self.thresholds.add_below {
                        self.add(e);
                        self.added.push(e);
                        self.deg_added[e.u] += 1;
                        self.deg_added[e.v] += 1;
                    }
                }
                None => {
                    self.stats.iterations += 1;
                    self.stats.edges_added_per_iteration.push(self.added.len());
                    let guard = self.delta * self.lambda * self.beta * self.n as f64 / 16.0;
                    if self.added.len() as f64 <= guard {
                        let cut = self.lambda * self.beta / 8.0;
                        self.damaged = (0..self.n).filter(|&v| self.deg_added[v] as f64 > cut).collect();
                        self.strip_idx = 0;
                        self.phase = Phase::Strip;
                    } else {
                        self.cursor = None;
                        self.phase = Phase::Remove;
                    }
                }
            },
            Phase::Remove => match self.h.next_edge_after(self.cursor) {
                Some(e) => {
                    self.cursor = Some(e);
                    if self.h.edge_degree(e) as f64 > self.thresholds.remove_above {
                        self.remove(e);
                    }
                }
                None => {
                    self.stats.phi_trace.push(self.phi());
                    for e in std::mem::take(&mut self.added) {
                        self.deg_added[e.u] = 0;
                        self.deg_added[e.v] = 0;
                    }
                    self.cursor = None;
                    self.phase = Phase::Add;
                }
            },
            Phase::Strip => {
                if let Some(&e) = self.added.get(self.strip_idx) {
                    self.strip_idx += 1;
                    if self.damaged.contains(&e.u) || self.damaged.contains(&e.v) {
                        self.remove(e);
                    }
                } else {
                    self.stats.phi_trace.push(self.phi());
                    self.cursor = None;
                    self.phase = Phase::Cover;
                }
            }
            // Thresholds that cannot reach the lower bound (narrow gap with
            // small lambda * beta), and strip removals, can leave underfull
            // edges between undamaged vertices. Damage a greedy cover of them.
            Phase::Cover => match g.next_edge_after(self.cursor) {
                Some(e) => {
                    self.cursor = Some(e);
                    let lower = self.beta * (1.0 - self.lambda);
                    if !self.h.has_edge(e)
                        && (self.h.edge_degree(e) as f64) < lower
                        && !self.damaged.contains(&e.u)
                        && !self.damaged.contains(&e.v)
                    {
                        self.uncovered.push(e);
                    }
                }
                None => {
                    let mut pending = std::mem::take(&mut self.uncovered);
                    while !pending.is_empty() {
                        let mut count = vec![0usize; self.n];
                        for e in &pending {
                            count[e.u] += 1;
                            count[e.v] += 1;
                        }
                        let pick = (0..self.n).max_by(|&a, &b| count[a].cmp(&count[b]).then(b.cmp(&a))).expect("n > 0");
                        self.damaged.insert(pick);
                        pending.retain(|e| !e.touches(pick));
                    }
                    self.phase = Phase::Done;
                }
            },
            Phase::Done => {}
        }
        self.phase == Phase::Done
    }

    /// Finished sparsifier, damaged set and statistics.
    pub fn into_parts(self) -> (DynamicGraph, BTreeSet<VertexId>, BuildStats) {
        debug_assert!(self.is_done());
        (self.h, self.damaged, self.stats)
    }

    pub fn sparsifier(&self) -> &DynamicGraph {
        &self.h
    }
}

/// Output of the static construction.
#[derive(Clone, Debug)]
pub struct StaticBuild {
    pub h: DynamicGraph,
    pub witness: BTreeSet<VertexId>,
    pub stats: BuildStats,
}

/// Build a `(beta, lambda, delta)`-damaged EDCS of `g` from scratch.
pub fn static_build(g: &DynamicGraph, beta: f64, lambda: f64, delta: f64) -> StaticBuild {
    let mut b = StaticBuilder::new(g.n(), beta, lambda, delta);
    while !b.step(g) {}
    let (h, witness, stats) = b.into_parts();
    StaticBuild { h, witness, stats }
}
