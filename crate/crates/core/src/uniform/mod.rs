//! Sparsifier for a lambda-uniform fractional matching.
//!
//! Levels are built by peeling low-degree vertices and degree-splitting
//! what is left, doubling the edge weight each level. Insertions wait in a
//! pending set and deletions in per-level buffers until a slack guard
//! breaks. In batch mode both guards use `eps * i / k` instead of `eps`.

mod batch;
mod split;
#[cfg(test)]
mod tests;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::{DynamicGraph, Edge, UpdateEvent, UpdateKind, VertexId};
use crate::work;

pub use batch::BatchUniformMatcher;
pub use split::{degree_split, maximal_walks};

const SLACK: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum UniformError {
    #[error("weights do not form a fractional matching: {0}")]
    BadWeights(String),
    #[error("invalid parameters: {0}")]
    BadParams(String),
    #[error("edge {0} is not present")]
    MissingEdge(Edge),
    #[error("edge {0} is already present")]
    DuplicateEdge(Edge),
    #[error("batch index went from {from} to {to}")]
    BatchOrder { from: usize, to: usize },
}

/// `floor(1/lambda)`: how many weight-lambda edges a vertex can carry.
pub fn weight_cap(lambda: f64) -> usize {
    (1.0 / lambda + SLACK).floor() as usize
}

fn bad_degree(v: VertexId, degree: usize, cap: usize) -> UniformError {
    UniformError::BadWeights(format!("vertex {v} would carry {degree} edges of weight lambda, at most {cap} fit"))
}

/// The unique `L >= 0` with `beta/2 <= 2^L lambda < beta`.
pub fn level_count(lambda: f64, beta: f64) -> Result<usize, UniformError> {
    if !(lambda > 0.0 && lambda.is_finite() && beta.is_finite()) {
        return Err(UniformError::BadParams(format!("need finite lambda > 0 and beta, got lambda={lambda}, beta={beta}")));
    }
    if lambda >= beta {
        return Err(UniformError::BadWeights(format!("lambda={lambda} is not below the cap beta={beta}")));
    }
    let mut l = 0;
    while lambda * 2f64.powi(l as i32) < beta / 2.0 {
        l += 1;
    }
    Ok(l)
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FractionalMatching {
    weights: BTreeMap<Edge, f64>,
}

impl FractionalMatching {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn uniform(edges: impl IntoIterator<Item = Edge>, lambda: f64) -> Self {
        FractionalMatching { weights: edges.into_iter().map(|e| (e, lambda)).collect() }
    }

    pub fn set(&mut self, e: Edge, w: f64) {
        self.weights.insert(e, w);
    }

    pub fn get(&self, e: &Edge) -> Option<f64> {
        self.weights.get(e).copied()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Edge, f64)> + '_ {
        self.weights.iter().map(|(&e, &w)| (e, w))
    }

    pub fn support(&self) -> BTreeSet<Edge> {
        self.weights.keys().copied().collect()
    }

    pub fn size(&self) -> f64 {
        self.weights.values().sum()
    }

    pub fn vertex_weights(&self, n: usize) -> Vec<f64> {
        let mut w = vec![0.0; n];
        for (e, x) in self.iter() {
            w[e.u] += x;
            w[e.v] += x;
        }
        w
    }

    /// Weights in `[0,1]` and every vertex at most 1 (up to float slack).
    pub fn is_valid(&self, n: usize) -> bool {
        self.weights.values().all(|&x| (0.0..=1.0).contains(&x))
            && self.vertex_weights(n).iter().all(|&x| x <= 1.0 + SLACK)
    }
}

/// A maximal subgraph of `g` with every degree at most `floor(1/lambda)`,
/// every edge weighted `lambda`. Edges are tried in seeded random order.
pub fn gen_uniform_fm(g: &DynamicGraph, lambda: f64, seed: u64) -> FractionalMatching {
    let cap = weight_cap(lambda);
    let mut edges: Vec<Edge> = g.edges().collect();
    edges.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut deg = vec![0usize; g.n()];
    let mut kept = Vec::new();
    for e in edges {
        if deg[e.u] < cap && deg[e.v] < cap {
            deg[e.u] += 1;
            deg[e.v] += 1;
            kept.push(e);
        }
    }
    FractionalMatching::uniform(kept, lambda)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UniformParams {
    pub lambda: f64,
    pub beta: f64,
    pub eps: f64,
}

impl UniformParams {
    pub fn new(lambda: f64, beta: f64, eps: f64) -> Self {
        UniformParams { lambda, beta, eps }
    }

    pub fn validate(&self) -> Result<usize, UniformError> {
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(UniformError::BadParams(format!("eps must be positive, got {}", self.eps)));
        }
        if self.lambda > 1.0 {
            return Err(UniformError::BadWeights(format!("edge weight lambda={} exceeds 1", self.lambda)));
        }
        level_count(self.lambda, self.beta)
    }

    /// Peeling keeps vertices of degree at most `floor(1/eps)`.
    pub fn peel_degree(&self) -> usize {
        (1.0 / self.eps + SLACK).floor() as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SetId {
    Active,
    Pending,
    EAtLeast(usize),
    F(usize),
    DAtLeast(usize),
}

/// Undo record; each one reverses a single primitive change.
#[derive(Clone, Debug, PartialEq)]
pub enum UsOp {
    Edge { set: SetId, e: Edge, insert: bool },
    Vertex { level: usize, v: VertexId, insert: bool },
    Input(UpdateEvent),
    Batch(Option<usize>),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct UsStats {
    pub full_rebuilds: usize,
    /// Deletion-triggered rebuilds, indexed by start level.
    pub partial_rebuilds: Vec<usize>,
}

/// Snapshot of the measured output properties.
#[derive(Clone, Debug, PartialEq)]
pub struct UniformReport {
    pub max_h: f64,
    pub h_below_beta: bool,
    pub pending_guard_ok: bool,
    pub deletion_guard_ok: bool,
    pub containment_ok: bool,
    pub size_w: f64,
    pub size_w_prime: f64,
    /// `(size_w / size_w_prime - 1) / (eps log2(beta/lambda))`.
    pub size_constant: f64,
    pub max_excess: f64,
    pub excess_flagged: bool,
}

impl UniformReport {
    pub fn exact_ok(&self) -> bool {
        self.h_below_beta && self.pending_guard_ok && self.deletion_guard_ok && self.containment_ok
    }
}

#[derive(Clone, Debug)]
pub struct UniformSparsifier {
    params: UniformParams,
    levels: usize,
    k: usize,
    batch: Option<usize>,
    input: DynamicGraph,
    active: BTreeSet<Edge>,
    pending: BTreeSet<Edge>,
    e_ge: Vec<BTreeSet<Edge>>,
    f: Vec<BTreeSet<Edge>>,
    d_ge: Vec<BTreeSet<Edge>>,
    v_ge: Vec<BTreeSet<VertexId>>,
    out: DynamicGraph,
    out_changes: Vec<UpdateEvent>,
    journal: Option<Vec<UsOp>>,
    stats: UsStats,
}

/// Static build with no batching.
pub fn static_uniform_sparsify(g: &DynamicGraph, lambda: f64, beta: f64, eps: f64) -> Result<UniformSparsifier, UniformError> {
    UniformSparsifier::new(g, UniformParams::new(lambda, beta, eps), 1)
}

impl UniformSparsifier {
    /// Every edge of `g` carries weight `lambda`; `k` is the batch count
    /// used by [`set_batch`](Self::set_batch).
    pub fn new(g: &DynamicGraph, params: UniformParams, k: usize) -> Result<Self, UniformError> {
        let levels = params.validate()?;
        if k == 0 {
            return Err(UniformError::BadParams("k must be at least 1".into()));
        }
        let cap = weight_cap(params.lambda);
        if let Some(v) = (0..g.n()).find(|&v| g.degree(v) > cap) {
            return Err(bad_degree(v, g.degree(v), cap));
        }
        let n = g.n();
        let mut s = UniformSparsifier {
            params,
            levels,
            k,
            batch: None,
            input: g.clone(),
            active: g.edges().collect(),
            pending: BTreeSet::new(),
            e_ge: vec![BTreeSet::new(); levels + 1],
            f: vec![BTreeSet::new(); levels + 1],
            d_ge: vec![BTreeSet::new(); levels + 1],
            v_ge: vec![BTreeSet::new(); levels + 1],
            out: DynamicGraph::new(n),
            out_changes: Vec::new(),
            journal: None,
            stats: UsStats { full_rebuilds: 0, partial_rebuilds: vec![0; levels + 1] },
        };
        s.v_ge[0] = (0..n).collect();
        s.static_rebuild();
        s.out_changes.clear();
        Ok(s)
    }

    pub fn n(&self) -> usize {
        self.input.n()
    }

    pub fn params(&self) -> UniformParams {
        self.params
    }

    /// `L`.
    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn batch_index(&self) -> Option<usize> {
        self.batch
    }

    pub fn stats(&self) -> &UsStats {
        &self.stats
    }

    /// Current input edges, active and pending.
    pub fn input(&self) -> &DynamicGraph {
        &self.input
    }

    pub fn active(&self) -> &BTreeSet<Edge> {
        &self.active
    }

    pub fn pending(&self) -> &BTreeSet<Edge> {
        &self.pending
    }

    pub fn e_at_least(&self, i: usize) -> &BTreeSet<Edge> {
        &self.e_ge[i]
    }

    pub fn f_level(&self, i: usize) -> &BTreeSet<Edge> {
        &self.f[i]
    }

    pub fn d_at_least(&self, i: usize) -> &BTreeSet<Edge> {
        &self.d_ge[i]
    }

    pub fn v_at_least(&self, i: usize) -> &BTreeSet<VertexId> {
        &self.v_ge[i]
    }

    /// Vertices peeled at level `i` (all of `V^(>=L)` at the top level).
    pub fn v_level(&self, i: usize) -> BTreeSet<VertexId> {
        if i == self.levels {
            self.v_ge[i].clone()
        } else {
            self.v_ge[i].difference(&self.v_ge[i + 1]).copied().collect()
        }
    }

    /// `lambda * 2^i`.
    pub fn level_weight(&self, i: usize) -> f64 {
        self.params.lambda * 2f64.powi(i as i32)
    }

    /// Output graph: the union of the `F` levels minus deleted edges.
    pub fn output(&self) -> &DynamicGraph {
        &self.out
    }

    /// Weight `h(e)` of an output edge.
    pub fn weight(&self, e: &Edge) -> Option<f64> {
        if !self.out.has_edge(*e) {
            return None;
        }
        (0..=self.levels).find(|&i| self.f[i].contains(e)).map(|i| self.level_weight(i))
    }

    pub fn output_weights(&self) -> FractionalMatching {
        let mut fm = FractionalMatching::new();
        for e in self.out.edges() {
            fm.set(e, self.weight(&e).expect("output edge has a level"));
        }
        fm
    }

    pub fn take_output_changes(&mut self) -> Vec<UpdateEvent> {
        std::mem::take(&mut self.out_changes)
    }

    pub fn enable_journal(&mut self) {
        self.journal.get_or_insert_with(Vec::new);
    }

    pub fn take_journal(&mut self) -> Vec<UsOp> {
        self.journal.as_mut().map(std::mem::take).unwrap_or_default()
    }

    /// Active slack: `eps * i / k` inside batch `i`, else `eps`.
    pub fn slack(&self) -> f64 {
        match self.batch {
            Some(i) => self.params.eps * i as f64 / self.k as f64,
            None => self.params.eps,
        }
    }

    /// Largest buffer size allowed against a base set of `size` edges.
    pub fn threshold(&self, size: usize) -> usize {
        (self.slack() * size as f64 + SLACK).floor() as usize
    }

    pub fn set_batch(&mut self, i: usize) -> Result<(), UniformError> {
        if i == 0 || i > self.k {
            return Err(UniformError::BadParams(format!("batch index {i} outside 1..={}", self.k)));
        }
        if let Some(cur) = self.batch {
            if i < cur {
                return Err(UniformError::BatchOrder { from: cur, to: i });
            }
        }
        self.log(UsOp::Batch(self.batch));
        self.batch = Some(i);
        self.restore_guards();
        Ok(())
    }

    /// Leave batch mode so a new round of batches can start at index 1.
    pub fn clear_batch(&mut self) {
        self.log(UsOp::Batch(self.batch));
        self.batch = None;
    }

    pub fn insert(&mut self, e: Edge) -> Result<(), UniformError> {
        if e.u >= self.n() || e.v >= self.n() {
            return Err(UniformError::BadParams(format!("edge {e} outside 0..{}", self.n())));
        }
        if self.input.has_edge(e) {
            return Err(UniformError::DuplicateEdge(e));
        }
        let cap = weight_cap(self.params.lambda);
        if let Some(v) = [e.u, e.v].into_iter().find(|&v| self.input.degree(v) >= cap) {
            return Err(bad_degree(v, self.input.degree(v) + 1, cap));
        }
        work::tick(1);
        self.input_apply(UpdateEvent::insert(e));
        self.edit(SetId::Pending, e, true);
        self.restore_guards();
        Ok(())
    }

    pub fn delete(&mut self, e: Edge) -> Result<(), UniformError> {
        if !self.input.has_edge(e) {
            return Err(UniformError::MissingEdge(e));
        }
        work::tick(1);
        self.input_apply(UpdateEvent::delete(e));
        if self.pending.contains(&e) {
            self.edit(SetId::Pending, e, false);
        } else {
            let top = (0..=self.levels).rev().find(|&i| self.e_ge[i].contains(&e)).expect("active edge sits in E(>=0)");
            self.edit(SetId::Active, e, false);
            for i in 0..=top {
                self.edit(SetId::DAtLeast(i), e, true);
            }
        }
        self.restore_guards();
        Ok(())
    }

    pub fn apply(&mut self, ev: &UpdateEvent) -> Result<(), UniformError> {
        match ev.kind {
            UpdateKind::Insert => self.insert(ev.edge),
            UpdateKind::Delete => self.delete(ev.edge),
        }
    }

    /// Reverse one journal record. Nothing is journaled while undoing.
    pub fn undo(&mut self, op: UsOp) {
        let saved = self.journal.take();
        match op {
            UsOp::Edge { set, e, insert } => self.edit(set, e, !insert),
            UsOp::Vertex { level, v, insert } => self.vedit(level, v, !insert),
            UsOp::Input(ev) => self.input_apply(ev.inverse()),
            UsOp::Batch(prev) => self.batch = prev,
        }
        self.journal = saved;
    }

    pub fn pending_guard_ok(&self) -> bool {
        self.pending.len() <= self.threshold(self.active.len())
    }

    /// Lowest level whose deletion buffer is over its threshold.
    pub fn violated_level(&self) -> Option<usize> {
        (0..=self.levels).find(|&i| self.d_ge[i].len() > self.threshold(self.e_ge[i].len()))
    }

    /// `E(>=i+1)` inside `E(>=i) \ F(i)` for every level.
    pub fn containment_ok(&self) -> bool {
        (0..self.levels).all(|i| self.e_ge[i + 1].iter().all(|e| self.e_ge[i].contains(e) && !self.f[i].contains(e)))
    }

    pub fn report(&self) -> UniformReport {
        let p = self.params;
        let fm = self.output_weights();
        let max_h = fm.iter().map(|(_, x)| x).fold(0.0, f64::max);
        let size_w = p.lambda * self.input.edge_count() as f64;
        let size_w_prime = fm.size();
        let log = (p.beta / p.lambda).log2();
        let size_constant = if size_w <= size_w_prime {
            0.0
        } else if size_w_prime == 0.0 {
            f64::INFINITY
        } else {
            (size_w / size_w_prime - 1.0) / (p.eps * log)
        };
        let wp = fm.vertex_weights(self.n());
        let max_excess = (0..self.n())
            .map(|v| wp[v] - p.lambda * self.input.degree(v) as f64)
            .fold(f64::NEG_INFINITY, f64::max)
            .max(0.0);
        UniformReport {
            max_h,
            h_below_beta: max_h < p.beta,
            pending_guard_ok: self.pending_guard_ok(),
            deletion_guard_ok: self.violated_level().is_none(),
            containment_ok: self.containment_ok(),
            size_w,
            size_w_prime,
            size_constant,
            max_excess,
            excess_flagged: max_excess > self.level_weight(self.levels) + SLACK,
        }
    }

    /// Text dump of every level.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        let list = |set: &BTreeSet<Edge>| set.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(" ");
        let _ = writeln!(s, "L={} lambda={} beta={} eps={} batch={:?}/{}", self.levels, self.params.lambda, self.params.beta, self.params.eps, self.batch, self.k);
        let _ = writeln!(s, "active={} pending: {}", self.active.len(), list(&self.pending));
        for i in 0..=self.levels {
            let vs: Vec<String> = self.v_level(i).iter().map(|v| v.to_string()).collect();
            let _ = writeln!(s, "level {i} h={} |E>=|={} |D>=|={}", self.level_weight(i), self.e_ge[i].len(), self.d_ge[i].len());
            let _ = writeln!(s, "  V: {}", vs.join(" "));
            let _ = writeln!(s, "  F: {}", list(&self.f[i]));
        }
        s
    }

    fn log(&mut self, op: UsOp) {
        if let Some(j) = &mut self.journal {
            j.push(op);
        }
    }

    fn in_output(&self, e: &Edge) -> bool {
        !self.d_ge[0].contains(e) && self.f.iter().any(|f| f.contains(e))
    }

    fn edit(&mut self, set: SetId, e: Edge, insert: bool) {
        let tracked = matches!(set, SetId::F(_) | SetId::DAtLeast(0));
        let before = tracked && self.in_output(&e);
        let target = match set {
            SetId::Active => &mut self.active,
            SetId::Pending => &mut self.pending,
            SetId::EAtLeast(i) => &mut self.e_ge[i],
            SetId::F(i) => &mut self.f[i],
            SetId::DAtLeast(i) => &mut self.d_ge[i],
        };
        let changed = if insert { target.insert(e) } else { target.remove(&e) };
        if !changed {
            return;
        }
        work::tick(1);
        self.log(UsOp::Edge { set, e, insert });
        if tracked {
            let after = self.in_output(&e);
            if before != after {
                let ev = if after { UpdateEvent::insert(e) } else { UpdateEvent::delete(e) };
                self.out.apply(&ev).expect("output tracks membership");
                self.out_changes.push(ev);
            }
        }
    }

    fn vedit(&mut self, level: usize, v: VertexId, insert: bool) {
        let set = &mut self.v_ge[level];
        let changed = if insert { set.insert(v) } else { set.remove(&v) };
        if changed {
            work::tick(1);
            self.log(UsOp::Vertex { level, v, insert });
        }
    }

    fn input_apply(&mut self, ev: UpdateEvent) {
        self.input.apply(&ev).expect("input update checked by caller");
        self.log(UsOp::Input(ev));
    }

    fn set_edges(&mut self, set: SetId, target: &BTreeSet<Edge>) {
        let cur = match set {
            SetId::Active => &self.active,
            SetId::Pending => &self.pending,
            SetId::EAtLeast(i) => &self.e_ge[i],
            SetId::F(i) => &self.f[i],
            SetId::DAtLeast(i) => &self.d_ge[i],
        };
        work::tick((cur.len() + target.len()) as u64);
        let gone: Vec<Edge> = cur.difference(target).copied().collect();
        let new: Vec<Edge> = target.difference(cur).copied().collect();
        for e in gone {
            self.edit(set, e, false);
        }
        for e in new {
            self.edit(set, e, true);
        }
    }

    fn set_vertices(&mut self, level: usize, target: &BTreeSet<VertexId>) {
        let cur = &self.v_ge[level];
        work::tick((cur.len() + target.len()) as u64);
        let gone: Vec<VertexId> = cur.difference(target).copied().collect();
        let new: Vec<VertexId> = target.difference(cur).copied().collect();
        for v in gone {
            self.vedit(level, v, false);
        }
        for v in new {
            self.vedit(level, v, true);
        }
    }

    fn restore_guards(&mut self) {
        while let Some(j) = self.violated_level() {
            self.clean_up(j);
            self.rebuild(j);
            self.stats.partial_rebuilds[j] += 1;
        }
        if !self.pending_guard_ok() {
            self.clean_up(0);
            for e in self.pending.clone() {
                self.edit(SetId::Pending, e, false);
                self.edit(SetId::Active, e, true);
            }
            self.static_rebuild();
            self.stats.full_rebuilds += 1;
        }
    }

    fn clean_up(&mut self, j: usize) {
        for i in j..=self.levels {
            for e in self.d_ge[i].clone() {
                self.edit(SetId::EAtLeast(i), e, false);
                self.edit(SetId::F(i), e, false);
                self.edit(SetId::DAtLeast(i), e, false);
            }
        }
    }

    fn static_rebuild(&mut self) {
        let active = self.active.clone();
        self.set_edges(SetId::EAtLeast(0), &active);
        self.rebuild(0);
    }

    /// Recompute levels `from..=L` from `E(>=from)` and `V(>=from)`.
    pub fn rebuild(&mut self, from: usize) {
        let t = self.params.peel_degree();
        for i in from..self.levels {
            let peeled = peel(&self.v_ge[i], &self.e_ge[i], t);
            let next_v: BTreeSet<VertexId> = self.v_ge[i].difference(&peeled).copied().collect();
            self.set_vertices(i + 1, &next_v);
            let (f, rest): (BTreeSet<Edge>, BTreeSet<Edge>) =
                self.e_ge[i].iter().partition(|e| peeled.contains(&e.u) || peeled.contains(&e.v));
            self.set_edges(SetId::F(i), &f);
            self.set_edges(SetId::EAtLeast(i + 1), &degree_split(&rest));
        }
        let top = self.e_ge[self.levels].clone();
        self.set_edges(SetId::F(self.levels), &top);
    }
}

/// Vertices of `vs` removed by repeatedly peeling any vertex with at most
/// `t` remaining neighbours. The result does not depend on the order.
fn peel(vs: &BTreeSet<VertexId>, edges: &BTreeSet<Edge>, t: usize) -> BTreeSet<VertexId> {
    let mut adj: BTreeMap<VertexId, Vec<VertexId>> = vs.iter().map(|&v| (v, Vec::new())).collect();
    for e in edges {
        work::tick(1);
        adj.get_mut(&e.u).expect("edge inside V(>=i)").push(e.v);
        adj.get_mut(&e.v).expect("edge inside V(>=i)").push(e.u);
    }
    let mut deg: BTreeMap<VertexId, usize> = adj.iter().map(|(&v, a)| (v, a.len())).collect();
    let mut stack: Vec<VertexId> = deg.iter().filter(|(_, &d)| d <= t).map(|(&v, _)| v).rev().collect();
    let mut peeled = BTreeSet::new();
    while let Some(v) = stack.pop() {
        if !peeled.insert(v) {
            continue;
        }
        for &w in &adj[&v] {
            work::tick(1);
            if peeled.contains(&w) {
                continue;
            }
            let d = deg.get_mut(&w).unwrap();
            *d -= 1;
            if *d == t {
                stack.push(w);
            }
        }
    }
    peeled
}
