//! (1+eps)-approximate matching inside a bounded-degree sparsifier.
//!
//! The static routine removes every augmenting path of length at most
//! `2 ceil(1/eps) - 1`, which leaves a matching within `1 + eps` of optimal.
//! The dynamic state drops deleted matched edges lazily and recomputes once
//! more than `floor(eps * last_size)` updates have passed, i.e. after every
//! update while the matching is smaller than `1/eps`.
//! Rebuilds are lumpy; this module makes no worst-case claim on its own.

use crate::graph::{DynamicGraph, UpdateEvent, UpdateKind};
use crate::oracle::{adjacency, Blossom, Matching};
use crate::work;

const NONE: usize = usize::MAX;

/// Node budget of one bounded search before falling back to a full blossom
/// search from the same root.
pub const SEARCH_BUDGET: usize = 20_000;

/// `2 ceil(1/eps) - 1`.
pub fn max_path_len(eps: f64) -> usize {
    2 * (1.0 / eps).ceil() as usize - 1
}

fn greedy_mates(h: &DynamicGraph) -> Vec<usize> {
    let mut mate = vec![NONE; h.n()];
    for e in h.edges() {
        work::tick(1);
        if mate[e.u] == NONE && mate[e.v] == NONE {
            mate[e.u] = e.v;
            mate[e.v] = e.u;
        }
    }
    mate
}

struct PathSearch<'a> {
    h: &'a DynamicGraph,
    mate: &'a [usize],
    on_path: Vec<bool>,
    path: Vec<usize>,
    max_len: usize,
    budget: usize,
    exhausted: bool,
}

impl<'a> PathSearch<'a> {
    fn new(h: &'a DynamicGraph, mate: &'a [usize], max_len: usize, budget: usize) -> Self {
        PathSearch { h, mate, on_path: vec![false; h.n()], path: Vec::new(), max_len, budget, exhausted: false }
    }

    /// Depth-first search over simple alternating paths from the free vertex
    /// `v`, `len` edges used so far. On success `path` holds the vertices.
    fn dfs(&mut self, v: usize, len: usize) -> bool {
        self.path.push(v);
        self.on_path[v] = true;
        if len < self.max_len {
            for w in self.h.neighbors(v) {
                if self.budget == 0 {
                    self.exhausted = true;
                    break;
                }
                self.budget -= 1;
                work::tick(1);
                if self.on_path[w] {
                    continue;
                }
                let m = self.mate[w];
                if m == NONE {
                    self.path.push(w);
                    return true;
                }
                if self.on_path[m] || len + 2 >= self.max_len {
                    continue;
                }
                self.path.push(w);
                self.on_path[w] = true;
                if self.dfs(m, len + 2) {
                    return true;
                }
                self.on_path[w] = false;
                self.path.pop();
            }
        }
        self.on_path[v] = false;
        self.path.pop();
        false
    }
}

/// Outcome of a bounded search from one root.
enum Found {
    Path(Vec<usize>),
    None,
    OutOfBudget,
}

fn search(h: &DynamicGraph, mate: &[usize], root: usize, max_len: usize, budget: usize) -> Found {
    let mut s = PathSearch::new(h, mate, max_len, budget);
    if s.dfs(root, 0) {
        Found::Path(s.path)
    } else if s.exhausted {
        Found::OutOfBudget
    } else {
        Found::None
    }
}

fn flip(mate: &mut [usize], path: &[usize]) {
    for pair in path.chunks_exact(2) {
        mate[pair[0]] = pair[1];
        mate[pair[1]] = pair[0];
    }
}

/// A matching of `h` with no augmenting path of length `<= 2 ceil(1/eps) - 1`.
pub fn static_approx_matching(h: &DynamicGraph, eps: f64) -> Matching {
    let max_len = max_path_len(eps);
    let mut mate = greedy_mates(h);
    let mut adj: Option<Vec<Vec<usize>>> = None;
    loop {
        let mut changed = false;
        for r in 0..h.n() {
            if mate[r] != NONE || h.degree(r) == 0 {
                continue;
            }
            match search(h, &mate, r, max_len, SEARCH_BUDGET) {
                Found::Path(p) => {
                    flip(&mut mate, &p);
                    changed = true;
                }
                Found::None => {}
                Found::OutOfBudget => {
                    let adj = adj.get_or_insert_with(|| adjacency(h));
                    let mut b = Blossom::new(adj, std::mem::take(&mut mate));
                    changed |= b.augment_from(r);
                    mate = b.mate;
                }
            }
        }
        if !changed {
            break;
        }
    }
    Matching::from_mates(&mate)
}

/// Exhaustive check for an augmenting path of at most `max_len` edges.
pub fn has_short_augmenting_path(h: &DynamicGraph, m: &Matching, max_len: usize) -> bool {
    let mate = m.mates(h.n());
    (0..h.n()).any(|r| mate[r] == NONE && matches!(search(h, &mate, r, max_len, usize::MAX), Found::Path(_)))
}

/// Lazily maintained approximate matching of a changing host graph.
#[derive(Clone, Debug)]
pub struct MatcherState {
    eps: f64,
    delta_cap: usize,
    m: Matching,
    updates_since_rebuild: usize,
    last_size: usize,
    rebuilds: usize,
}

impl MatcherState {
    /// `delta_cap` is the declared maximum degree of the host, kept for
    /// reporting.
    pub fn new(h: &DynamicGraph, eps: f64, delta_cap: usize) -> Self {
        let m = static_approx_matching(h, eps);
        MatcherState { eps, delta_cap, last_size: m.len(), m, updates_since_rebuild: 0, rebuilds: 0 }
    }

    pub fn matching(&self) -> &Matching {
        &self.m
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn delta_cap(&self) -> usize {
        self.delta_cap
    }

    pub fn rebuilds(&self) -> usize {
        self.rebuilds
    }

    pub fn updates_since_rebuild(&self) -> usize {
        self.updates_since_rebuild
    }

    /// `floor(eps * last_size)`: the number of updates tolerated before the
    /// next one triggers a rebuild.
    pub fn period(&self) -> usize {
        (self.eps * self.last_size as f64).floor() as usize
    }

    /// Account for `ev`, already applied to `host`. Returns true if the
    /// matching was recomputed.
    pub fn apply(&mut self, host: &DynamicGraph, ev: &UpdateEvent) -> bool {
        if ev.kind == UpdateKind::Delete {
            self.m.remove(&ev.edge);
        }
        self.updates_since_rebuild += 1;
        if self.updates_since_rebuild > self.period() {
            self.rebuild(host);
            return true;
        }
        false
    }

    pub fn rebuild(&mut self, host: &DynamicGraph) {
        self.m = static_approx_matching(host, self.eps);
        self.last_size = self.m.len();
        self.updates_since_rebuild = 0;
        self.rebuilds += 1;
    }
}
