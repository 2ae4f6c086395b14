//! Vertex-set sparsification: partitionings, concatenated (quotient) graphs,
//! matching-preserving families from random sampling or lossless expanders,
//! and the reduction driver in [`reduction`].

pub mod reduction;

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::{DynamicGraph, Edge, UpdateEvent, UpdateKind, VertexId};
use crate::oracle::Matching;
use crate::work;

pub type PartId = usize;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SparsifyError {
    #[error("left vertex {0} does not have exactly d neighbours")]
    NotLeftRegular(usize),
    #[error("expansion check needs {needed} subset evaluations, budget is {budget}")]
    TooLarge { needed: u128, budget: u128 },
    #[error("expander file: {0}")]
    Format(String),
}

/// Map from vertices to part identifiers `0..part_count`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partitioning {
    pub part_of: Vec<PartId>,
    pub part_count: usize,
}

impl Partitioning {
    /// Every vertex in its own part.
    pub fn identity(n: usize) -> Self {
        Partitioning { part_of: (0..n).collect(), part_count: n }
    }

    /// All vertices in part 0.
    pub fn single(n: usize) -> Self {
        Partitioning { part_of: vec![0; n], part_count: 1 }
    }

    pub fn n(&self) -> usize {
        self.part_of.len()
    }

    /// Number of `planted` edges whose endpoints both land in parts that
    /// hold no other endpoint of `planted`.
    pub fn preserved_count(&self, planted: &Matching) -> usize {
        let mut hits: BTreeMap<PartId, usize> = BTreeMap::new();
        for e in planted.edges() {
            *hits.entry(self.part_of[e.u]).or_default() += 1;
            *hits.entry(self.part_of[e.v]).or_default() += 1;
        }
        planted.edges().filter(|e| hits[&self.part_of[e.u]] == 1 && hits[&self.part_of[e.v]] == 1).count()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FamilyKind {
    Random,
    ExpanderDerived,
    Given,
}

/// A sequence of partitionings sharing vertex universe and part count.
#[derive(Clone, Debug, PartialEq)]
pub struct PartitioningFamily {
    pub members: Vec<Partitioning>,
    pub kind: FamilyKind,
    /// `(k, eps)` the family was generated for.
    pub params: (usize, f64),
}

/// `ceil(constant * ln(n) / eps^2)`, at least 1. The matching-preservation
/// analysis uses `constant = 512`.
pub fn family_size(n: usize, eps: f64, constant: f64) -> usize {
    let ln = (n.max(2) as f64).ln();
    ((constant * ln / (eps * eps)).ceil() as usize).max(1)
}

/// `ceil(8k / eps)` parts.
pub fn random_part_count(k: usize, eps: f64) -> usize {
    (4.0 * (2 * k) as f64 / eps).ceil() as usize
}

/// `size` partitionings of `0..n`, each vertex independently uniform over
/// `ceil(8k/eps)` parts. `size = None` uses `family_size(n, eps, 512)`.
pub fn gen_random_family(n: usize, k: usize, eps: f64, size: Option<usize>, seed: u64) -> PartitioningFamily {
    let d = random_part_count(k, eps);
    let size = size.unwrap_or_else(|| family_size(n, eps, 512.0));
    gen_random_family_with_parts(n, d, size, k, eps, seed)
}

/// Random family with an explicit part count.
pub fn gen_random_family_with_parts(n: usize, d: usize, size: usize, k: usize, eps: f64, seed: u64) -> PartitioningFamily {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let members = (0..size)
        .map(|_| Partitioning { part_of: (0..n).map(|_| rng.gen_range(0..d)).collect(), part_count: d })
        .collect();
    PartitioningFamily { members, kind: FamilyKind::Random, params: (k, eps) }
}

/// Left-regular bipartite graph; `neighbors[v][i]` is the i-th neighbour of
/// left vertex `v`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BipartiteExpander {
    pub n_left: usize,
    pub n_right: usize,
    pub d: usize,
    pub neighbors: Vec<Vec<usize>>,
}

impl BipartiteExpander {
    /// Each left vertex draws `d` distinct right vertices uniformly.
    pub fn random(n_left: usize, n_right: usize, d: usize, seed: u64) -> Self {
        assert!(d <= n_right);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let neighbors = (0..n_left).map(|_| sample(&mut rng, n_right, d).into_vec()).collect();
        BipartiteExpander { n_left, n_right, d, neighbors }
    }

    pub fn check_regular(&self) -> Result<(), SparsifyError> {
        for (v, nb) in self.neighbors.iter().enumerate() {
            if nb.len() != self.d {
                return Err(SparsifyError::NotLeftRegular(v));
            }
        }
        if self.neighbors.len() != self.n_left {
            return Err(SparsifyError::NotLeftRegular(self.neighbors.len()));
        }
        Ok(())
    }

    /// Parse `"n_left n_right d"` followed by `n_left` lines of `d` ids.
    pub fn parse(text: &str) -> Result<Self, SparsifyError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#'));
        let header: Vec<usize> = lines
            .next()
            .ok_or_else(|| SparsifyError::Format("missing header".into()))?
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| SparsifyError::Format(format!("bad number {t:?}"))))
            .collect::<Result<_, _>>()?;
        let [n_left, n_right, d] = header[..] else {
            return Err(SparsifyError::Format("header needs three numbers".into()));
        };
        let mut neighbors = Vec::with_capacity(n_left);
        for (i, line) in lines.enumerate() {
            let ids: Vec<usize> = line
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| SparsifyError::Format(format!("bad number {t:?}"))))
                .collect::<Result<_, _>>()?;
            if let Some(&bad) = ids.iter().find(|&&r| r >= n_right) {
                return Err(SparsifyError::Format(format!("row {i}: right vertex {bad} out of range")));
            }
            neighbors.push(ids);
        }
        let exp = BipartiteExpander { n_left, n_right, d, neighbors };
        exp.check_regular()?;
        Ok(exp)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{} {} {}\n", self.n_left, self.n_right, self.d);
        for nb in &self.neighbors {
            let row: Vec<String> = nb.iter().map(ToString::to_string).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }
}

/// Default budget for [`verify_expander`].
pub const EXPANSION_BUDGET: u128 = 50_000_000;

fn subsets_up_to(n: usize, k: usize) -> u128 {
    let mut total = 0u128;
    let mut c = 1u128;
    for s in 1..=k.min(n) {
        c = c * (n - s + 1) as u128 / s as u128;
        total += c;
    }
    total
}

/// True iff every left set `S` with `|S| <= k` has at least
/// `(1 - eps) * d * |S|` distinct neighbours. Exhaustive.
pub fn verify_expander(exp: &BipartiteExpander, k: usize, eps: f64, budget: u128) -> Result<bool, SparsifyError> {
    exp.check_regular()?;
    let needed = subsets_up_to(exp.n_left, k);
    if needed > budget {
        return Err(SparsifyError::TooLarge { needed, budget });
    }
    let mut cover = vec![0u32; exp.n_right];
    let mut distinct = 0usize;

    // depth-first over subsets in increasing index order, with incremental
    // neighbourhood multiplicities
    fn rec(
        exp: &BipartiteExpander,
        start: usize,
        size: usize,
        k: usize,
        eps: f64,
        cover: &mut [u32],
        distinct: &mut usize,
    ) -> bool {
        for v in start..exp.n_left {
            for &r in &exp.neighbors[v] {
                if cover[r] == 0 {
                    *distinct += 1;
                }
                cover[r] += 1;
            }
            let s = size + 1;
            let ok = (*distinct as f64) >= (1.0 - eps) * (exp.d * s) as f64 - 1e-9;
            let ok = ok && (s == k || rec(exp, v + 1, s, k, eps, cover, distinct));
            for &r in &exp.neighbors[v] {
                cover[r] -= 1;
                if cover[r] == 0 {
                    *distinct -= 1;
                }
            }
            if !ok {
                return false;
            }
        }
        true
    }

    if k == 0 {
        return Ok(true);
    }
    Ok(rec(exp, 0, 0, k, eps, &mut cover, &mut distinct))
}

/// The `d` partitionings induced by neighbour positions: member `i` sends
/// left vertex `v` to part `neighbors[v][i]`.
pub fn family_from_expander(exp: &BipartiteExpander) -> Result<PartitioningFamily, SparsifyError> {
    exp.check_regular()?;
    let members = (0..exp.d)
        .map(|i| Partitioning { part_of: exp.neighbors.iter().map(|nb| nb[i]).collect(), part_count: exp.n_right })
        .collect();
    Ok(PartitioningFamily { members, kind: FamilyKind::ExpanderDerived, params: (0, 0.0) })
}

/// Quotient of a base graph by a partitioning. Intra-part edges are dropped;
/// each part pair keeps the set of base edges mapping onto it.
#[derive(Clone, Debug)]
pub struct ConcatenatedGraph {
    pub partitioning: Partitioning,
    preimages: BTreeMap<Edge, BTreeSet<Edge>>,
    pub simple_view: DynamicGraph,
}

impl ConcatenatedGraph {
    pub fn new(partitioning: Partitioning) -> Self {
        let d = partitioning.part_count;
        ConcatenatedGraph { partitioning, preimages: BTreeMap::new(), simple_view: DynamicGraph::new(d) }
    }

    /// Part pair a base edge maps to, or `None` for intra-part edges.
    pub fn image(&self, e: Edge) -> Option<Edge> {
        let p = self.partitioning.part_of[e.u];
        let q = self.partitioning.part_of[e.v];
        Edge::new(p, q).ok()
    }

    pub fn multiplicity(&self, pair: Edge) -> usize {
        self.preimages.get(&pair).map_or(0, BTreeSet::len)
    }

    pub fn total_multiplicity(&self) -> usize {
        self.preimages.values().map(BTreeSet::len).sum()
    }

    /// Smallest live base edge mapping onto `pair`.
    pub fn representative(&self, pair: Edge) -> Option<Edge> {
        self.preimages.get(&pair).and_then(|s| s.iter().next().copied())
    }

    /// Track one base-graph event (already applied to the base). Returns the
    /// induced event on `simple_view`, if any.
    pub fn maintain(&mut self, ev: &UpdateEvent) -> Option<UpdateEvent> {
        work::tick(1);
        let pair = self.image(ev.edge)?;
        match ev.kind {
            UpdateKind::Insert => {
                let set = self.preimages.entry(pair).or_default();
                set.insert(ev.edge);
                if set.len() == 1 {
                    self.simple_view.insert(pair).expect("simple view out of sync");
                    return Some(UpdateEvent::insert(pair));
                }
                None
            }
            UpdateKind::Delete => {
                let set = self.preimages.get_mut(&pair)?;
                set.remove(&ev.edge);
                if set.is_empty() {
                    self.preimages.remove(&pair);
                    self.simple_view.delete(pair).expect("simple view out of sync");
                    return Some(UpdateEvent::delete(pair));
                }
                None
            }
        }
    }

    /// Map a matching of `simple_view` back to base edges, one smallest live
    /// preimage per matched pair.
    pub fn pull_back(&self, m: &Matching) -> Matching {
        Matching::from_edges(m.edges().filter_map(|pair| self.representative(pair)))
    }
}

/// Concatenation of `g` based on `p`.
pub fn concatenate(g: &DynamicGraph, p: &Partitioning) -> ConcatenatedGraph {
    let mut cg = ConcatenatedGraph::new(p.clone());
    for e in g.edges() {
        cg.maintain(&UpdateEvent::insert(e));
    }
    cg
}

/// Vertices of `p` grouped by part.
pub fn parts(p: &Partitioning) -> Vec<Vec<VertexId>> {
    let mut out = vec![Vec::new(); p.part_count];
    for (v, &q) in p.part_of.iter().enumerate() {
        out[q].push(v);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::mu;

    fn e(a: usize, b: usize) -> Edge {
        Edge::of(a, b)
    }

    #[test]
    fn part_count_formula() {
        assert_eq!(random_part_count(8, 0.5), 128);
        assert_eq!(family_size(64, 0.5, 8.0), (8.0 * 64f64.ln() / 0.25).ceil() as usize);
    }

    #[test]
    fn random_family_reproducible() {
        let a = gen_random_family(30, 3, 0.5, Some(4), 11);
        let b = gen_random_family(30, 3, 0.5, Some(4), 11);
        assert_eq!(a, b);
        assert_eq!(a.members.len(), 4);
        assert!(a.members.iter().all(|p| p.part_count == 48 && p.part_of.iter().all(|&q| q < 48)));
    }

    #[test]
    fn many_parts_separate_all_vertices() {
        // k = n with tiny eps gives d far above n ln n; check the sampled family directly
        let n = 16;
        for seed in 0..5 {
            let fam = gen_random_family(n, n, 0.01, Some(1), seed);
            let p = &fam.members[0];
            assert!(p.part_count as f64 >= n as f64 * (n as f64).ln());
            let distinct: BTreeSet<_> = p.part_of.iter().collect();
            // birthday bound: collision probability below n^2 / (2d) ~ 1%
            assert_eq!(distinct.len(), n, "seed {seed}");
        }
    }

    #[test]
    fn concat_multiplicities() {
        let p = Partitioning { part_of: vec![0, 0, 1, 1], part_count: 2 };
        let mut cg = ConcatenatedGraph::new(p);
        assert_eq!(cg.maintain(&UpdateEvent::insert(e(0, 2))), Some(UpdateEvent::insert(e(0, 1))));
        assert_eq!(cg.maintain(&UpdateEvent::insert(e(1, 3))), None);
        assert_eq!(cg.multiplicity(e(0, 1)), 2);
        assert_eq!(cg.maintain(&UpdateEvent::delete(e(0, 2))), None);
        assert_eq!(cg.multiplicity(e(0, 1)), 1);
        assert_eq!(cg.maintain(&UpdateEvent::delete(e(1, 3))), Some(UpdateEvent::delete(e(0, 1))));
        assert_eq!(cg.maintain(&UpdateEvent::insert(e(0, 1))), None);
        assert_eq!(cg.simple_view.edge_count(), 0);
    }

    #[test]
    fn pull_back_uses_smallest_live_preimage() {
        let p = Partitioning { part_of: vec![0, 0, 1, 1], part_count: 2 };
        let g = DynamicGraph::from_edges(4, [e(0, 3), e(1, 2)]).unwrap();
        let mut cg = concatenate(&g, &p);
        let m = Matching::from_edges([e(0, 1)]);
        assert_eq!(cg.pull_back(&m), Matching::from_edges([e(0, 3)]));
        cg.maintain(&UpdateEvent::delete(e(0, 3)));
        assert_eq!(cg.pull_back(&m), Matching::from_edges([e(1, 2)]));
    }

    #[test]
    fn identity_family_preserves_mu() {
        let g = DynamicGraph::from_edges(6, [e(0, 1), e(1, 2), e(2, 3), e(3, 4), e(4, 5)]).unwrap();
        let cg = concatenate(&g, &Partitioning::identity(6));
        assert!(cg.simple_view.same_edges(&g));
        assert_eq!(mu(&cg.simple_view), mu(&g));
        let single = concatenate(&g, &Partitioning::single(6));
        assert_eq!(single.simple_view.edge_count(), 0);
    }

    #[test]
    fn disjoint_stars_expand() {
        let d = 3;
        let exp = BipartiteExpander {
            n_left: 5,
            n_right: 15,
            d,
            neighbors: (0..5).map(|v| (0..d).map(|i| v * d + i).collect()).collect(),
        };
        for k in 1..=5 {
            assert!(verify_expander(&exp, k, 0.0, EXPANSION_BUDGET).unwrap());
        }
    }

    #[test]
    fn twin_left_vertices_fail() {
        let exp = BipartiteExpander { n_left: 2, n_right: 4, d: 2, neighbors: vec![vec![0, 1], vec![1, 0]] };
        assert!(!verify_expander(&exp, 2, 0.25, EXPANSION_BUDGET).unwrap());
        assert!(verify_expander(&exp, 1, 0.25, EXPANSION_BUDGET).unwrap());
    }

    #[test]
    fn budget_and_regularity() {
        let exp = BipartiteExpander::random(40, 40, 3, 1);
        assert!(matches!(verify_expander(&exp, 20, 0.1, 1000), Err(SparsifyError::TooLarge { .. })));
        let bad = BipartiteExpander { n_left: 2, n_right: 3, d: 2, neighbors: vec![vec![0, 1], vec![2]] };
        assert_eq!(family_from_expander(&bad), Err(SparsifyError::NotLeftRegular(1)));
    }

    #[test]
    fn expander_family_shapes() {
        let ident = BipartiteExpander { n_left: 4, n_right: 4, d: 1, neighbors: (0..4).map(|v| vec![v]).collect() };
        let fam = family_from_expander(&ident).unwrap();
        assert_eq!(fam.members, vec![Partitioning::identity(4)]);

        let shared = BipartiteExpander { n_left: 4, n_right: 5, d: 2, neighbors: (0..4).map(|v| vec![v, 4]).collect() };
        let fam = family_from_expander(&shared).unwrap();
        assert!(fam.members[1].part_of.iter().all(|&q| q == 4));
        let planted = Matching::from_edges([e(0, 1)]);
        assert_eq!(fam.members[1].preserved_count(&planted), 0);
        assert!(!verify_expander(&shared, 4, 0.25, EXPANSION_BUDGET).unwrap());
    }

    #[test]
    fn expander_text_round_trip() {
        let exp = BipartiteExpander::random(6, 10, 3, 4);
        assert_eq!(BipartiteExpander::parse(&exp.to_text()).unwrap(), exp);
        assert!(matches!(BipartiteExpander::parse("2 3 2\n0 1\n2\n"), Err(SparsifyError::NotLeftRegular(1))));
    }

    #[test]
    fn preserved_count_counts_isolated_pairs() {
        let p = Partitioning { part_of: vec![0, 1, 2, 2, 3, 4], part_count: 5 };
        let planted = Matching::from_edges([e(0, 1), e(2, 4), e(3, 5)]);
        assert_eq!(p.preserved_count(&planted), 1);
    }
}
