//! Ground truth: exact maximum matching, brute-force enumeration and
//! validity checkers for matchings and damaged EDCS sparsifiers.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::graph::{DynamicGraph, Edge, VertexId};
use crate::vsparsify::{concatenate, PartitioningFamily};

const NONE: usize = usize::MAX;

/// A set of pairwise vertex-disjoint edges.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Matching {
    edges: BTreeSet<Edge>,
}

impl Matching {
    pub fn new() -> Self {
        Matching::default()
    }

    /// Build from edges without validating disjointness.
    pub fn from_edges(edges: impl IntoIterator<Item = Edge>) -> Self {
        Matching { edges: edges.into_iter().collect() }
    }

    /// Build from a mate array (`mate[v] == usize::MAX` when unmatched).
    pub fn from_mates(mate: &[usize]) -> Self {
        let edges = mate
            .iter()
            .enumerate()
            .filter(|&(v, &m)| m != NONE && v < m)
            .map(|(v, &m)| Edge::of(v, m))
            .collect();
        Matching { edges }
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn contains(&self, e: &Edge) -> bool {
        self.edges.contains(e)
    }

    pub fn insert(&mut self, e: Edge) -> bool {
        self.edges.insert(e)
    }

    pub fn remove(&mut self, e: &Edge) -> bool {
        self.edges.remove(e)
    }

    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_set(&self) -> &BTreeSet<Edge> {
        &self.edges
    }

    /// Mate array over `n` vertices.
    pub fn mates(&self, n: usize) -> Vec<usize> {
        let mut mate = vec![NONE; n];
        for e in &self.edges {
            mate[e.u] = e.v;
            mate[e.v] = e.u;
        }
        mate
    }
}

/// True iff `m` is vertex-disjoint and every edge is present in `g`.
pub fn check_matching(g: &DynamicGraph, m: &Matching) -> bool {
    let mut seen = BTreeSet::new();
    m.edges().all(|e| g.has_edge(e) && seen.insert(e.u) && seen.insert(e.v))
}

/// `(alpha, delta)`-approximation certificate of a matching against the exact optimum.
#[derive(Clone, Debug, PartialEq)]
pub struct ApproxCertificate {
    pub mu_exact: usize,
    pub matching_size: usize,
    pub alpha: f64,
    pub delta: f64,
    pub n: usize,
    pub satisfied: bool,
}

impl ApproxCertificate {
    pub fn new(mu_exact: usize, matching_size: usize, alpha: f64, delta: f64, n: usize) -> Self {
        let satisfied = matching_size as f64 * alpha + delta * n as f64 >= mu_exact as f64;
        ApproxCertificate { mu_exact, matching_size, alpha, delta, n, satisfied }
    }
}

/// Edmonds' blossom algorithm over a fixed adjacency list.
///
/// Also usable as an augmenting-path search from a single root on top of an
/// arbitrary starting matching.
pub struct Blossom<'a> {
    adj: &'a [Vec<usize>],
    pub mate: Vec<usize>,
    parent: Vec<usize>,
    base: Vec<usize>,
    used: Vec<bool>,
    in_blossom: Vec<bool>,
    queue: Vec<usize>,
}

impl<'a> Blossom<'a> {
    pub fn new(adj: &'a [Vec<usize>], mate: Vec<usize>) -> Self {
        let n = adj.len();
        Blossom {
            adj,
            mate,
            parent: vec![NONE; n],
            base: (0..n).collect(),
            used: vec![false; n],
            in_blossom: vec![false; n],
            queue: Vec::with_capacity(n),
        }
    }

    fn lca(&self, mut a: usize, mut b: usize) -> usize {
        let mut seen = vec![false; self.adj.len()];
        loop {
            a = self.base[a];
            seen[a] = true;
            if self.mate[a] == NONE {
                break;
            }
            a = self.parent[self.mate[a]];
        }
        loop {
            b = self.base[b];
            if seen[b] {
                return b;
            }
            b = self.parent[self.mate[b]];
        }
    }

    fn mark_path(&mut self, mut v: usize, b: usize, mut child: usize) {
        while self.base[v] != b {
            self.in_blossom[self.base[v]] = true;
            self.in_blossom[self.base[self.mate[v]]] = true;
            self.parent[v] = child;
            child = self.mate[v];
            v = self.parent[self.mate[v]];
        }
    }

    /// Search an augmenting path from the free vertex `root`; returns its
    /// other endpoint.
    fn find_path(&mut self, root: usize) -> Option<usize> {
        let n = self.adj.len();
        self.used.iter_mut().for_each(|x| *x = false);
        self.parent.iter_mut().for_each(|x| *x = NONE);
        for (i, b) in self.base.iter_mut().enumerate() {
            *b = i;
        }
        self.used[root] = true;
        self.queue.clear();
        self.queue.push(root);
        let mut head = 0;
        while head < self.queue.len() {
            let v = self.queue[head];
            head += 1;
            for &to in &self.adj[v] {
                crate::work::tick(1);
                if self.base[v] == self.base[to] || self.mate[v] == to {
                    continue;
                }
                if to == root || (self.mate[to] != NONE && self.parent[self.mate[to]] != NONE) {
                    let cur = self.lca(v, to);
                    self.in_blossom.iter_mut().for_each(|x| *x = false);
                    self.mark_path(v, cur, to);
                    self.mark_path(to, cur, v);
                    for i in 0..n {
                        if self.in_blossom[self.base[i]] {
                            self.base[i] = cur;
                            if !self.used[i] {
                                self.used[i] = true;
                                self.queue.push(i);
                            }
                        }
                    }
                } else if self.parent[to] == NONE {
                    self.parent[to] = v;
                    if self.mate[to] == NONE {
                        return Some(to);
                    }
                    self.used[self.mate[to]] = true;
                    self.queue.push(self.mate[to]);
                }
            }
        }
        None
    }

    /// Augment from `root` if an augmenting path exists. Returns whether the
    /// matching grew.
    pub fn augment_from(&mut self, root: usize) -> bool {
        if self.mate[root] != NONE {
            return false;
        }
        let Some(mut v) = self.find_path(root) else {
            return false;
        };
        while v != NONE {
            let pv = self.parent[v];
            let ppv = self.mate[pv];
            self.mate[v] = pv;
            self.mate[pv] = v;
            v = ppv;
        }
        true
    }

    /// Run to optimality from the current matching.
    pub fn solve(&mut self) {
        for v in 0..self.adj.len() {
            if self.mate[v] == NONE {
                self.augment_from(v);
            }
        }
    }
}

pub(crate) fn adjacency(g: &DynamicGraph) -> Vec<Vec<usize>> {
    (0..g.n()).map(|v| g.neighbors(v).collect()).collect()
}

/// A maximum cardinality matching of `g`.
pub fn max_matching_exact(g: &DynamicGraph) -> Matching {
    let adj = adjacency(g);
    // greedy start keeps the number of blossom searches small
    let mut mate = vec![NONE; g.n()];
    for e in g.edges() {
        if mate[e.u] == NONE && mate[e.v] == NONE {
            mate[e.u] = e.v;
            mate[e.v] = e.u;
        }
    }
    let mut b = Blossom::new(&adj, mate);
    b.solve();
    Matching::from_mates(&b.mate)
}

/// `mu(g)`.
pub fn mu(g: &DynamicGraph) -> usize {
    max_matching_exact(g).len()
}

/// Maximum matching size by exhaustive enumeration over vertex subsets.
/// Exponential; intended for `n <= 20` as an independent check on the
/// blossom implementation.
pub fn brute_force_mu(g: &DynamicGraph) -> usize {
    let n = g.n();
    assert!(n <= 20, "brute force limited to n <= 20");
    let nb: Vec<u32> = (0..n).map(|v| g.neighbors(v).fold(0u32, |acc, w| acc | (1 << w))).collect();
    let full = if n == 0 { 0 } else { (1u32 << n) - 1 };
    let mut memo = vec![u8::MAX; 1usize << n];

    fn go(free: u32, nb: &[u32], memo: &mut [u8]) -> u8 {
        if free == 0 {
            return 0;
        }
        if memo[free as usize] != u8::MAX {
            return memo[free as usize];
        }
        let v = free.trailing_zeros() as usize;
        let rest = free & !(1 << v);
        // v stays unmatched
        let mut best = go(rest, nb, memo);
        let mut cand = nb[v] & rest;
        while cand != 0 {
            let w = cand.trailing_zeros();
            cand &= cand - 1;
            best = best.max(1 + go(rest & !(1 << w), nb, memo));
        }
        memo[free as usize] = best;
        best
    }

    go(full, &nb, &mut memo) as usize
}

/// One violated clause of the damaged-EDCS definition.
#[derive(Clone, Debug, PartialEq)]
pub enum EdcsViolation {
    /// Sparsifier edge absent from the host graph.
    NotInGraph(Edge),
    /// Witness larger than `delta * n`.
    WitnessTooLarge { size: usize, bound: f64 },
    /// Sparsifier edge with degree above `beta`.
    DegreeCap { edge: Edge, degree: usize },
    /// Undamaged non-sparsifier edge with degree below `beta * (1 - lambda)`.
    Underfull { edge: Edge, degree: usize },
}

impl fmt::Display for EdcsViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EdcsViolation::NotInGraph(e) => write!(f, "subset {} {}", e.u, e.v),
            EdcsViolation::WitnessTooLarge { size, bound } => write!(f, "witness {size} > {bound}"),
            EdcsViolation::DegreeCap { edge, degree } => write!(f, "cap {} {} deg={degree}", edge.u, edge.v),
            EdcsViolation::Underfull { edge, degree } => write!(f, "underfull {} {} deg={degree}", edge.u, edge.v),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EdcsReport {
    pub witness: BTreeSet<VertexId>,
    pub violations: Vec<EdcsViolation>,
}

impl EdcsReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    /// Line-oriented diagnostic: one line per violation after a summary line.
    pub fn to_text(&self) -> String {
        let mut out = format!("violations {} witness {}\n", self.violations.len(), self.witness.len());
        for v in &self.violations {
            out.push_str(&v.to_string());
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CheckError {
    #[error("no witness supplied and fallback search disabled")]
    WitnessMissing,
}

/// Thresholds of a damaged EDCS.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdcsBounds {
    pub beta: f64,
    pub lambda: f64,
    pub delta: f64,
}

fn underfull_edges(g: &DynamicGraph, h: &DynamicGraph, b: EdcsBounds) -> Vec<(Edge, usize)> {
    let lower = b.beta * (1.0 - b.lambda);
    g.edges()
        .filter(|&e| !h.has_edge(e))
        .filter_map(|e| {
            let d = h.edge_degree(e);
            ((d as f64) < lower).then_some((e, d))
        })
        .collect()
}

/// Greedy witness: repeatedly take the vertex touching the most uncovered
/// underfull edges. Diagnostic only; not guaranteed to be minimum.
pub fn greedy_witness(g: &DynamicGraph, h: &DynamicGraph, b: EdcsBounds) -> BTreeSet<VertexId> {
    let mut pending: Vec<Edge> = underfull_edges(g, h, b).into_iter().map(|(e, _)| e).collect();
    let mut witness = BTreeSet::new();
    while !pending.is_empty() {
        let mut count: BTreeMap<VertexId, usize> = BTreeMap::new();
        for e in &pending {
            *count.entry(e.u).or_default() += 1;
            *count.entry(e.v).or_default() += 1;
        }
        // highest count, lowest id on ties
        let (&pick, _) = count.iter().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0))).unwrap();
        witness.insert(pick);
        pending.retain(|e| !e.touches(pick));
    }
    witness
}

/// Check the three damaged-EDCS clauses of `h` in `g` against `witness`.
/// With no witness, `fallback` enables the greedy search.
pub fn check_damaged_edcs(
    g: &DynamicGraph,
    h: &DynamicGraph,
    bounds: EdcsBounds,
    witness: Option<&BTreeSet<VertexId>>,
    fallback: bool,
) -> Result<EdcsReport, CheckError> {
    let witness = match witness {
        Some(w) => w.clone(),
        None if fallback => greedy_witness(g, h, bounds),
        None => return Err(CheckError::WitnessMissing),
    };
    let mut violations = Vec::new();
    for e in h.edges() {
        if !g.has_edge(e) {
            violations.push(EdcsViolation::NotInGraph(e));
        }
    }
    let bound = bounds.delta * g.n() as f64;
    if witness.len() as f64 > bound {
        violations.push(EdcsViolation::WitnessTooLarge { size: witness.len(), bound });
    }
    for e in h.edges() {
        let d = h.edge_degree(e);
        if d as f64 > bounds.beta {
            violations.push(EdcsViolation::DegreeCap { edge: e, degree: d });
        }
    }
    for (e, d) in underfull_edges(g, h, bounds) {
        if !witness.contains(&e.u) && !witness.contains(&e.v) {
            violations.push(EdcsViolation::Underfull { edge: e, degree: d });
        }
    }
    Ok(EdcsReport { witness, violations })
}

/// Plain `(beta, lambda)`-EDCS check (no damaged vertices).
pub fn is_edcs(g: &DynamicGraph, h: &DynamicGraph, beta: f64, lambda: f64) -> bool {
    let empty = BTreeSet::new();
    check_damaged_edcs(g, h, EdcsBounds { beta, lambda, delta: 0.0 }, Some(&empty), false)
        .map(|r| r.is_valid())
        .unwrap_or(false)
}

/// True iff some member of `family` yields a concatenation whose maximum
/// matching has at least `(1 - eps) * |planted|` edges.
pub fn check_matching_preserving(g: &DynamicGraph, family: &PartitioningFamily, planted: &Matching, eps: f64) -> bool {
    let need = (1.0 - eps) * planted.len() as f64;
    family.members.iter().any(|p| mu(&concatenate(g, p).simple_view) as f64 >= need)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn e(a: usize, b: usize) -> Edge {
        Edge::of(a, b)
    }

    fn random_graph(n: usize, m: usize, seed: u64) -> DynamicGraph {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut g = DynamicGraph::new(n);
        let max = n * (n - 1) / 2;
        while g.edge_count() < m.min(max) {
            let a = rng.gen_range(0..n);
            let b = rng.gen_range(0..n);
            if a != b {
                let _ = g.insert(e(a, b));
            }
        }
        g
    }

    #[test]
    fn small_exact_examples() {
        let k3 = DynamicGraph::from_edges(3, [e(0, 1), e(1, 2), e(0, 2)]).unwrap();
        assert_eq!(mu(&k3), 1);
        let p4 = DynamicGraph::from_edges(4, [e(0, 1), e(1, 2), e(2, 3)]).unwrap();
        assert_eq!(mu(&p4), 2);
        assert_eq!(mu(&DynamicGraph::new(0)), 0);
    }

    #[test]
    fn blossom_needed() {
        // odd cycle 0-1-2-3-4 with pendant 5 on 0 and 6 on 3; greedy picks (0,1),(2,3)
        let g = DynamicGraph::from_edges(7, [e(0, 1), e(1, 2), e(2, 3), e(3, 4), e(4, 0), e(0, 5), e(3, 6)]).unwrap();
        assert_eq!(mu(&g), 3);
        assert_eq!(brute_force_mu(&g), 3);
    }

    #[test]
    fn seeded_n16_matches_enumeration() {
        let g = random_graph(16, 40, 7);
        let m = max_matching_exact(&g);
        assert!(check_matching(&g, &m));
        assert_eq!(m.len(), brute_force_mu(&g));
    }

    #[test]
    fn check_matching_examples() {
        let g = DynamicGraph::from_edges(3, [e(0, 1), e(1, 2)]).unwrap();
        assert!(check_matching(&g, &Matching::new()));
        assert!(!check_matching(&g, &Matching::from_edges([e(0, 1), e(1, 2)])));
        let h = DynamicGraph::from_edges(3, [e(1, 2)]).unwrap();
        assert!(!check_matching(&h, &Matching::from_edges([e(0, 1)])));
    }

    fn k4() -> DynamicGraph {
        DynamicGraph::from_edges(4, (0..4).flat_map(|a| (a + 1..4).map(move |b| e(a, b)))).unwrap()
    }

    #[test]
    fn damaged_edcs_examples() {
        let g = k4();
        let none = BTreeSet::new();
        let r = check_damaged_edcs(&g, &g, EdcsBounds { beta: 6.0, lambda: 0.25, delta: 0.25 }, Some(&none), false).unwrap();
        assert!(r.is_valid());

        let empty = DynamicGraph::new(4);
        let r = check_damaged_edcs(&g, &empty, EdcsBounds { beta: 4.0, lambda: 0.25, delta: 0.25 }, Some(&none), false).unwrap();
        assert_eq!(r.violations.len(), 6);
        assert!(r.violations.iter().all(|v| matches!(v, EdcsViolation::Underfull { degree: 0, .. })));
        assert!(r.to_text().starts_with("violations 6 witness 0\n"));

        assert_eq!(
            check_damaged_edcs(&g, &empty, EdcsBounds { beta: 4.0, lambda: 0.25, delta: 0.25 }, None, false),
            Err(CheckError::WitnessMissing)
        );
    }

    #[test]
    fn greedy_witness_covers_violations() {
        let g = k4();
        let empty = DynamicGraph::new(4);
        let b = EdcsBounds { beta: 4.0, lambda: 0.25, delta: 1.0 };
        let r = check_damaged_edcs(&g, &empty, b, None, true).unwrap();
        assert!(r.is_valid());
        // vertex cover of K4 needs three vertices
        assert_eq!(r.witness.len(), 3);
    }

    #[test]
    fn witness_too_large_and_cap() {
        let g = k4();
        let all: BTreeSet<_> = (0..4).collect();
        let r = check_damaged_edcs(&g, &g, EdcsBounds { beta: 5.0, lambda: 0.25, delta: 0.5 }, Some(&all), false).unwrap();
        assert!(r.violations.iter().any(|v| matches!(v, EdcsViolation::WitnessTooLarge { size: 4, .. })));
        assert_eq!(r.violations.iter().filter(|v| matches!(v, EdcsViolation::DegreeCap { degree: 6, .. })).count(), 6);
    }

    #[test]
    fn certificate() {
        let c = ApproxCertificate::new(10, 6, 1.5, 0.01, 100);
        assert!(c.satisfied);
        assert!(!ApproxCertificate::new(10, 6, 1.5, 0.0, 100).satisfied);
    }
}
