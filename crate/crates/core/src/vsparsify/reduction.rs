//! Geometric-guessing reduction from an (alpha, delta)-approximate matcher
//! to an (alpha + eps)-approximate one.
//!
//! Every guess `MMSize = (1 + eps/(8 alpha))^i` up to `n` gets a family of
//! partitionings into `C * MMSize` parts. Each (level, member) cell keeps a
//! concatenated graph and an inner matcher at `delta = eps/(8C)`. Matched
//! part pairs are pulled back to base edges, all of them go into one host
//! graph, and the bounded-degree matcher runs on that host.

use std::collections::BTreeMap;

use super::{gen_random_family_with_parts, ConcatenatedGraph, PartitioningFamily};
use crate::edcs::{DamagedEdcs, EdcsError, EdcsParams};
use crate::graph::{DynamicGraph, Edge, GraphError, UpdateEvent};
use crate::matcher::MatcherState;
use crate::oracle::{max_matching_exact, Matching};

/// Matcher run inside one concatenated graph.
pub trait CellMatcher {
    /// `g` already contains `ev`.
    fn update(&mut self, g: &DynamicGraph, ev: &UpdateEvent);
    fn matching(&self) -> &Matching;
}

/// Exact maximum matching recomputed on every update (alpha = 1).
#[derive(Clone, Debug)]
pub struct ExactCell {
    m: Matching,
}

impl ExactCell {
    pub fn new(g: &DynamicGraph) -> Self {
        ExactCell { m: max_matching_exact(g) }
    }
}

impl CellMatcher for ExactCell {
    fn update(&mut self, g: &DynamicGraph, _ev: &UpdateEvent) {
        self.m = max_matching_exact(g);
    }

    fn matching(&self) -> &Matching {
        &self.m
    }
}

/// Damaged EDCS with the approximate matcher on its sparsifier.
#[derive(Clone, Debug)]
pub struct EdcsCell {
    edcs: DamagedEdcs,
    m: MatcherState,
}

impl EdcsCell {
    pub fn new(g: &DynamicGraph, params: EdcsParams, eps: f64) -> Result<Self, EdcsError> {
        let edcs = DamagedEdcs::init(g, params, 1)?;
        let m = MatcherState::new(edcs.sparsifier(), eps, params.beta.floor() as usize);
        Ok(EdcsCell { edcs, m })
    }

    pub fn edcs(&self) -> &DamagedEdcs {
        &self.edcs
    }
}

impl CellMatcher for EdcsCell {
    fn update(&mut self, g: &DynamicGraph, ev: &UpdateEvent) {
        self.edcs.apply(g, ev);
        for ch in self.edcs.take_h_changes() {
            self.m.apply(self.edcs.sparsifier(), &ch);
        }
    }

    fn matching(&self) -> &Matching {
        self.m.matching()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReductionConfig {
    pub eps: f64,
    /// Approximation ratio of the inner matcher.
    pub alpha: f64,
    /// Parts per unit of guessed matching size.
    pub c: f64,
    /// Growth factor between guesses; `None` means `1 + eps/(8 alpha)`.
    pub level_growth: Option<f64>,
}

impl ReductionConfig {
    pub fn new(eps: f64, alpha: f64, c: f64) -> Self {
        ReductionConfig { eps, alpha, c, level_growth: None }
    }

    pub fn growth(&self) -> f64 {
        self.level_growth.unwrap_or(1.0 + self.eps / (8.0 * self.alpha))
    }

    /// `delta` handed to each inner matcher.
    pub fn inner_delta(&self) -> f64 {
        self.eps / (8.0 * self.c)
    }

    /// Accuracy of the matcher on the union.
    pub fn outer_eps(&self) -> f64 {
        self.eps / (8.0 * self.alpha)
    }

    /// Guessed sizes `growth^i` for `i = 1..=ceil(log_growth n)`.
    pub fn guesses(&self, n: usize) -> Vec<f64> {
        let g = self.growth();
        let count = ((n.max(2) as f64).ln() / g.ln()).ceil() as usize;
        (1..=count).map(|i| g.powi(i as i32)).collect()
    }

    /// `ceil(C * MMSize)`.
    pub fn parts(&self, guess: f64) -> usize {
        (self.c * guess).ceil().max(1.0) as usize
    }
}

/// Seeded random family source: `size` members per level.
pub fn random_source(n: usize, size: usize, seed: u64) -> impl FnMut(usize, f64, usize) -> PartitioningFamily {
    move |level, guess, parts| {
        gen_random_family_with_parts(n, parts, size, guess.ceil() as usize, 0.0, seed.wrapping_add(level as u64))
    }
}

struct Cell<M> {
    level: usize,
    cg: ConcatenatedGraph,
    matcher: M,
    /// Matched part pair -> chosen base edge.
    pulled: BTreeMap<Edge, Edge>,
}

pub struct VertexSparsifier<M> {
    config: ReductionConfig,
    g: DynamicGraph,
    cells: Vec<Cell<M>>,
    levels: usize,
    union_count: BTreeMap<Edge, usize>,
    host: DynamicGraph,
    top: MatcherState,
}

impl<M: CellMatcher> VertexSparsifier<M> {
    /// `family(level, guess, parts)` supplies the partitionings of a level;
    /// `factory(g, delta)` builds an inner matcher on a concatenated graph.
    pub fn new(
        g: &DynamicGraph,
        config: ReductionConfig,
        mut family: impl FnMut(usize, f64, usize) -> PartitioningFamily,
        mut factory: impl FnMut(&DynamicGraph, f64) -> M,
    ) -> Self {
        let guesses = config.guesses(g.n());
        let mut cells = Vec::new();
        for (level, &guess) in guesses.iter().enumerate() {
            for p in family(level, guess, config.parts(guess)).members {
                let cg = super::concatenate(g, &p);
                let matcher = factory(&cg.simple_view, config.inner_delta());
                cells.push(Cell { level, cg, matcher, pulled: BTreeMap::new() });
            }
        }
        let mut s = VertexSparsifier {
            config,
            g: g.clone(),
            cells,
            levels: guesses.len(),
            union_count: BTreeMap::new(),
            host: DynamicGraph::new(g.n()),
            top: MatcherState::new(&DynamicGraph::new(g.n()), config.outer_eps(), 0),
        };
        let mut changes = Vec::new();
        for c in 0..s.cells.len() {
            s.refresh_cell(c, &mut changes);
        }
        s.top = MatcherState::new(&s.host, config.outer_eps(), s.cells.len());
        s
    }

    pub fn config(&self) -> &ReductionConfig {
        &self.config
    }

    pub fn graph(&self) -> &DynamicGraph {
        &self.g
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    /// Union of the pulled-back matchings.
    pub fn host(&self) -> &DynamicGraph {
        &self.host
    }

    /// Pulled-back matching of cell `c`.
    pub fn pulled_back(&self, c: usize) -> Matching {
        Matching::from_edges(self.cells[c].pulled.values().copied())
    }

    pub fn cell_level(&self, c: usize) -> usize {
        self.cells[c].level
    }

    pub fn cell_matching(&self, c: usize) -> &Matching {
        self.cells[c].matcher.matching()
    }

    pub fn matching(&self) -> &Matching {
        self.top.matching()
    }

    pub fn update(&mut self, ev: &UpdateEvent) -> Result<(), GraphError> {
        self.g.apply(ev)?;
        let mut changes = Vec::new();
        for c in 0..self.cells.len() {
            let cell = &mut self.cells[c];
            if let Some(qev) = cell.cg.maintain(ev) {
                cell.matcher.update(&cell.cg.simple_view, &qev);
            }
            self.refresh_cell(c, &mut changes);
        }
        for ch in &changes {
            self.top.apply(&self.host, ch);
        }
        Ok(())
    }

    /// Recompute the pull-back of cell `c`, keeping live choices, and push
    /// the resulting host changes.
    fn refresh_cell(&mut self, c: usize, changes: &mut Vec<UpdateEvent>) {
        let cell = &mut self.cells[c];
        let mut next = BTreeMap::new();
        for pair in cell.matcher.matching().edges() {
            let keep = cell.pulled.get(&pair).copied().filter(|&b| self.g.has_edge(b) && cell.cg.image(b) == Some(pair));
            if let Some(b) = keep.or_else(|| cell.cg.representative(pair)) {
                next.insert(pair, b);
            }
        }
        let old = std::mem::replace(&mut cell.pulled, next);
        let gone: Vec<Edge> = old.iter().filter(|(p, b)| cell.pulled.get(p) != Some(b)).map(|(_, &b)| b).collect();
        let new: Vec<Edge> = cell.pulled.iter().filter(|(p, b)| old.get(p) != Some(b)).map(|(_, &b)| b).collect();
        for b in gone {
            let cnt = self.union_count.get_mut(&b).expect("counted host edge");
            *cnt -= 1;
            if *cnt == 0 {
                self.union_count.remove(&b);
                self.host.delete(b).expect("host edge present");
                changes.push(UpdateEvent::delete(b));
            }
        }
        for b in new {
            let cnt = self.union_count.entry(b).or_insert(0);
            *cnt += 1;
            if *cnt == 1 {
                self.host.insert(b).expect("host edge absent");
                changes.push(UpdateEvent::insert(b));
            }
        }
    }
}

/// Build the reduction over `g` with a random family of `size` members per
/// level and damaged-EDCS cells. Inner EDCS parameters other than `delta`
/// come from `inner`.
pub fn reduce_to_alpha_eps(
    g: &DynamicGraph,
    config: ReductionConfig,
    size: usize,
    inner: EdcsParams,
    seed: u64,
) -> Result<VertexSparsifier<EdcsCell>, EdcsError> {
    let p = EdcsParams { delta: config.inner_delta(), ..inner }.degenerate_ok();
    p.validate()?;
    Ok(VertexSparsifier::new(g, config, random_source(g.n(), size, seed), |cg, _| {
        EdcsCell::new(cg, p, config.outer_eps()).expect("parameters validated")
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::{erdos_renyi_dynamic, random_graph};
    use crate::oracle::{check_matching, mu};
    use crate::vsparsify::{FamilyKind, Partitioning};

    fn identity_source(n: usize) -> impl FnMut(usize, f64, usize) -> PartitioningFamily {
        move |_, _, _| PartitioningFamily { members: vec![Partitioning::identity(n)], kind: FamilyKind::Given, params: (0, 0.0) }
    }

    #[test]
    fn level_count_arithmetic() {
        let cfg = ReductionConfig::new(0.5, 1.5, 4.0);
        let expect = ((64f64).ln() / (1.0 + 0.5 / 12.0f64).ln()).ceil() as usize;
        assert_eq!(cfg.guesses(64).len(), expect);
        assert!(*cfg.guesses(64).last().unwrap() >= 64.0);
        assert_eq!(cfg.parts(2.5), 10);
    }

    #[test]
    fn empty_graph_gives_empty_matching() {
        let g = DynamicGraph::new(16);
        let cfg = ReductionConfig { level_growth: Some(2.0), ..ReductionConfig::new(0.5, 1.5, 4.0) };
        let vs = reduce_to_alpha_eps(&g, cfg, 2, EdcsParams::new(8.0, 0.25, 0.25), 1).unwrap();
        assert!(vs.matching().is_empty());
    }

    #[test]
    fn identity_family_is_exact() {
        let g = random_graph(20, 40, 3);
        let cfg = ReductionConfig { level_growth: Some(4.0), ..ReductionConfig::new(0.5, 1.0, 1.0) };
        let vs = VertexSparsifier::new(&g, cfg, identity_source(20), |cg, _| ExactCell::new(cg));
        assert_eq!(vs.matching().len(), mu(&g));
    }

    #[test]
    fn perfect_matching_end_to_end() {
        let n = 32;
        let g = DynamicGraph::from_edges(n, (0..16).map(|i| Edge::of(2 * i, 2 * i + 1))).unwrap();
        let cfg = ReductionConfig::new(0.5, 1.5, 4.0);
        let vs = reduce_to_alpha_eps(&g, cfg, 3, EdcsParams::new(8.0, 0.25, 0.25), 7).unwrap();
        assert!(check_matching(&g, vs.matching()));
        assert!(vs.matching().len() as f64 * (1.5 + 0.5) >= 16.0);
    }

    #[test]
    fn dynamic_updates_keep_pullbacks_valid() {
        let n = 24;
        let cfg = ReductionConfig { level_growth: Some(2.0), ..ReductionConfig::new(0.5, 1.0, 2.0) };
        let g0 = DynamicGraph::new(n);
        let mut vs = VertexSparsifier::new(&g0, cfg, random_source(n, 3, 5), |cg, _| ExactCell::new(cg));
        for ev in erdos_renyi_dynamic(n, 300, 11) {
            vs.update(&ev).unwrap();
            for c in 0..vs.cell_count() {
                let pb = vs.pulled_back(c);
                assert!(check_matching(vs.graph(), &pb));
                assert_eq!(pb.len(), vs.cell_matching(c).len());
            }
            assert!(check_matching(vs.graph(), vs.matching()));
            assert!(check_matching(vs.host(), vs.matching()));
        }
    }
}
