//! Damaged edge-degree-constrained subgraphs.
//!
//! [`static_build`] constructs a `(beta, lambda, delta)`-damaged EDCS from
//! scratch. [`DamagedEdcs`] keeps one alive under edge updates by handling
//! cheap cases locally and rebuilding after a fixed number of updates. The
//! rebuild can be run eagerly or stepped one edge at a time, and every
//! mutation can be journaled so the batch scheduler can undo it.

mod batch;
mod builder;

use std::collections::BTreeSet;
use std::fmt::Write as _;

use thiserror::Error;

pub use batch::BatchEdcsMatcher;
pub use builder::{static_build, BuildStats, StaticBuild, StaticBuilder, Thresholds};

use crate::graph::{DynamicGraph, Edge, GraphError, UpdateEvent, UpdateKind, VertexId};
use crate::oracle::EdcsBounds;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EdcsError {
    #[error("rebuild threshold floors to 0 (alpha = {alpha}); pass the degenerate override to rebuild every update")]
    DegenerateParams { alpha: usize },
    #[error("batch index went from {from} to {to}")]
    BatchOrder { from: usize, to: usize },
    #[error("invalid parameters: {0}")]
    BadParams(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Hypotheses under which the `3/2 + eps` approximation is guaranteed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StrictMode {
    pub eps: f64,
    /// Constant `c` in `beta >= c * lambda^-2 * ln(1/lambda)`.
    pub beta_constant: f64,
}

impl StrictMode {
    pub fn new(eps: f64) -> Self {
        StrictMode { eps, beta_constant: 8.0 }
    }

    pub fn min_beta(&self, lambda: f64) -> f64 {
        self.beta_constant * (1.0 / lambda).ln() / (lambda * lambda)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdcsParams {
    pub beta: f64,
    pub lambda: f64,
    pub delta: f64,
    pub strict: Option<StrictMode>,
    /// Treat a rebuild threshold of 0 as 1 instead of failing.
    pub allow_degenerate: bool,
}

impl EdcsParams {
    pub fn new(beta: f64, lambda: f64, delta: f64) -> Self {
        EdcsParams { beta, lambda, delta, strict: None, allow_degenerate: false }
    }

    pub fn with_strict(mut self, s: StrictMode) -> Self {
        self.strict = Some(s);
        self
    }

    pub fn degenerate_ok(mut self) -> Self {
        self.allow_degenerate = true;
        self
    }

    pub fn validate(&self) -> Result<(), EdcsError> {
        if self.beta.is_nan() || self.beta < 2.0 {
            return Err(EdcsError::BadParams(format!("beta = {} < 2", self.beta)));
        }
        for (name, x) in [("lambda", self.lambda), ("delta", self.delta)] {
            if !(x > 0.0 && x < 1.0) {
                return Err(EdcsError::BadParams(format!("{name} = {x} outside (0,1)")));
            }
        }
        if let Some(s) = self.strict {
            if !(s.eps > 0.0 && s.eps < 0.5) {
                return Err(EdcsError::BadParams(format!("strict eps = {} outside (0,1/2)", s.eps)));
            }
            if self.lambda > s.eps / 32.0 {
                return Err(EdcsError::BadParams(format!("strict: lambda = {} > eps/32", self.lambda)));
            }
            let need = s.min_beta(self.lambda);
            if self.beta < need {
                return Err(EdcsError::BadParams(format!("strict: beta = {} < {need:.1}", self.beta)));
            }
        }
        Ok(())
    }

    /// `floor(n delta lambda beta / 64)`.
    pub fn rebuild_period(&self, n: usize) -> usize {
        (n as f64 * self.delta * self.lambda * self.beta / 64.0).floor() as usize
    }

    /// Parameters handed to every rebuild, chosen so the rebuilt structure
    /// has slack for the updates that follow.
    pub fn rebuild_params(&self) -> (f64, f64, f64) {
        (self.beta / (1.0 + self.lambda / 4.0), self.lambda / 4.0, self.delta / 2.0)
    }

    pub fn bounds(&self) -> EdcsBounds {
        EdcsBounds { beta: self.beta, lambda: self.lambda, delta: self.delta }
    }

    /// `beta lambda / 16`, the per-vertex cutoff for the update sets.
    pub fn vertex_cutoff(&self) -> f64 {
        self.beta * self.lambda / 16.0
    }
}

/// Undo record for one mutation of a [`DamagedEdcs`].
#[derive(Clone, Debug)]
pub enum EdcsOp {
    HAdd(Edge),
    HRemove(Edge),
    InsRecord(Edge),
    DelRecord(Edge),
    Counter(usize),
    Batch(Option<usize>),
    Reset {
        ins: BTreeSet<Edge>,
        del: BTreeSet<Edge>,
        witness: BTreeSet<VertexId>,
        counter: usize,
        stats: Option<BuildStats>,
    },
}

#[derive(Clone, Debug)]
enum JobStage {
    Build,
    RemoveOld(Option<Edge>),
    AddNew(Option<Edge>),
    Finish,
}

/// A rebuild in progress: construction first, then the diff against the
/// current `H` applied one edge at a time.
#[derive(Clone, Debug)]
pub struct RebuildJob {
    builder: StaticBuilder,
    stage: JobStage,
}

#[derive(Clone, Debug)]
pub struct DamagedEdcs {
    params: EdcsParams,
    n: usize,
    alpha: usize,
    batch_count: usize,
    batch_index: Option<usize>,
    h: DynamicGraph,
    ins: BTreeSet<Edge>,
    del: BTreeSet<Edge>,
    deg_ins: Vec<usize>,
    deg_del: Vec<usize>,
    base_witness: BTreeSet<VertexId>,
    updates_since_rebuild: usize,
    rebuilds: usize,
    last_stats: Option<BuildStats>,
    h_changes: Vec<UpdateEvent>,
    journal: Option<Vec<EdcsOp>>,
    job: Option<RebuildJob>,
}

impl DamagedEdcs {
    /// Initial structure for `g`, rebuilt eagerly. `k` is the number of
    /// batches used by [`set_batch`](Self::set_batch); pass 1 in plain mode.
    pub fn init(g: &DynamicGraph, params: EdcsParams, k: usize) -> Result<Self, EdcsError> {
        let mut s = Self::init_deferred(g, params, k)?;
        s.finish_rebuild(g);
        Ok(s)
    }

    /// Same as [`init`](Self::init) but leaves the first rebuild pending.
    pub fn init_deferred(g: &DynamicGraph, params: EdcsParams, k: usize) -> Result<Self, EdcsError> {
        params.validate()?;
        if k == 0 {
            return Err(EdcsError::BadParams("batch count 0".into()));
        }
        let n = g.n();
        let alpha = params.rebuild_period(n);
        if alpha == 0 && !params.allow_degenerate {
            return Err(EdcsError::DegenerateParams { alpha });
        }
        let mut s = DamagedEdcs {
            params,
            n,
            alpha,
            batch_count: k,
            batch_index: None,
            h: DynamicGraph::new(n),
            ins: BTreeSet::new(),
            del: BTreeSet::new(),
            deg_ins: vec![0; n],
            deg_del: vec![0; n],
            base_witness: BTreeSet::new(),
            updates_since_rebuild: 0,
            rebuilds: 0,
            last_stats: None,
            h_changes: Vec::new(),
            journal: None,
            job: None,
        };
        s.start_rebuild();
        Ok(s)
    }

    pub fn params(&self) -> &EdcsParams {
        &self.params
    }

    pub fn sparsifier(&self) -> &DynamicGraph {
        &self.h
    }

    pub fn alpha(&self) -> usize {
        self.alpha
    }

    pub fn rebuilds(&self) -> usize {
        self.rebuilds
    }

    pub fn updates_since_rebuild(&self) -> usize {
        self.updates_since_rebuild
    }

    pub fn last_stats(&self) -> Option<&BuildStats> {
        self.last_stats.as_ref()
    }

    pub fn inserted_since_rebuild(&self) -> &BTreeSet<Edge> {
        &self.ins
    }

    pub fn deleted_since_rebuild(&self) -> &BTreeSet<Edge> {
        &self.del
    }

    pub fn base_witness(&self) -> &BTreeSet<VertexId> {
        &self.base_witness
    }

    pub fn rebuild_pending(&self) -> bool {
        self.job.is_some()
    }

    /// Active rebuild threshold: `alpha` in plain mode, `floor(i alpha / k)`
    /// while batch `i` is processed. A zero threshold only survives
    /// validation under the degenerate override and then counts as 1.
    pub fn threshold(&self) -> usize {
        let t = match self.batch_index {
            None => self.alpha,
            Some(i) => i * self.alpha / self.batch_count,
        };
        t.max(1)
    }

    /// Enter batch `i` (1-based).
    pub fn set_batch(&mut self, i: usize) -> Result<(), EdcsError> {
        if i == 0 || i > self.batch_count {
            return Err(EdcsError::BadParams(format!("batch index {i} outside 1..={}", self.batch_count)));
        }
        if let Some(prev) = self.batch_index {
            if i < prev {
                return Err(EdcsError::BatchOrder { from: prev, to: i });
            }
        }
        if i * self.alpha / self.batch_count == 0 && !self.params.allow_degenerate {
            return Err(EdcsError::DegenerateParams { alpha: self.alpha });
        }
        self.record(EdcsOp::Batch(self.batch_index));
        self.batch_index = Some(i);
        Ok(())
    }

    /// Leave batch mode, so that a fresh sequence of batches can start.
    pub fn clear_batch(&mut self) {
        if self.batch_index.is_some() {
            self.record(EdcsOp::Batch(self.batch_index));
            self.batch_index = None;
        }
    }

    pub fn batch_index(&self) -> Option<usize> {
        self.batch_index
    }

    /// `V_D` of the last rebuild plus every vertex with at least
    /// `beta lambda / 16` incident insertions or deletions since then.
    pub fn witness(&self) -> BTreeSet<VertexId> {
        let cut = self.params.vertex_cutoff();
        let mut w = self.base_witness.clone();
        for v in 0..self.n {
            if self.deg_ins[v] as f64 >= cut || self.deg_del[v] as f64 >= cut {
                w.insert(v);
            }
        }
        w
    }

    /// Insert `e`, which the caller has just inserted into `g`; rebuilds
    /// eagerly if the threshold is reached.
    pub fn insert(&mut self, g: &DynamicGraph, e: Edge) {
        if self.apply_update(UpdateEvent::insert(e)) {
            self.finish_rebuild(g);
        }
    }

    /// Delete `e`, which the caller has just deleted from `g`.
    pub fn delete(&mut self, g: &DynamicGraph, e: Edge) {
        if self.apply_update(UpdateEvent::delete(e)) {
            self.finish_rebuild(g);
        }
    }

    pub fn apply(&mut self, g: &DynamicGraph, ev: &UpdateEvent) {
        match ev.kind {
            UpdateKind::Insert => self.insert(g, ev.edge),
            UpdateKind::Delete => self.delete(g, ev.edge),
        }
    }

    /// Local part of an update. Returns true when a rebuild has been started
    /// and must be driven with [`step_rebuild`](Self::step_rebuild).
    pub fn apply_update(&mut self, ev: UpdateEvent) -> bool {
        let e = ev.edge;
        match ev.kind {
            UpdateKind::Insert => {
                if self.ins.insert(e) {
                    self.deg_ins[e.u] += 1;
                    self.deg_ins[e.v] += 1;
                    self.record(EdcsOp::InsRecord(e));
                }
                let hot = self.deg_ins[e.u].max(self.deg_ins[e.v]);
                if insertion_allowed(&self.params, hot, self.h.edge_degree(e)) {
                    self.h_add(e);
                }
            }
            UpdateKind::Delete => {
                if self.del.insert(e) {
                    self.deg_del[e.u] += 1;
                    self.deg_del[e.v] += 1;
                    self.record(EdcsOp::DelRecord(e));
                }
                if self.h.has_edge(e) {
                    self.h_remove(e);
                }
            }
        }
        self.record(EdcsOp::Counter(self.updates_since_rebuild));
        self.updates_since_rebuild += 1;
        if self.updates_since_rebuild >= self.threshold() && self.job.is_none() {
            self.start_rebuild();
        }
        self.job.is_some()
    }

    fn start_rebuild(&mut self) {
        let (b, l, d) = self.params.rebuild_params();
        self.job = Some(RebuildJob { builder: StaticBuilder::new(self.n, b, l, d), stage: JobStage::Build });
    }

    /// Advance a pending rebuild by one edge. `g` must stay fixed until the
    /// rebuild finishes. Returns true when no rebuild is pending.
    pub fn step_rebuild(&mut self, g: &DynamicGraph) -> bool {
        let Some(mut job) = self.job.take() else { return true };
        let done = match job.stage {
            JobStage::Build => {
                if job.builder.step(g) {
                    job.stage = JobStage::RemoveOld(None);
                }
                false
            }
            JobStage::RemoveOld(cursor) => {
                match self.h.next_edge_after(cursor) {
                    Some(e) => {
                        if !job.builder.sparsifier().has_edge(e) {
                            self.h_remove(e);
                        }
                        job.stage = JobStage::RemoveOld(Some(e));
                    }
                    None => job.stage = JobStage::AddNew(None),
                }
                false
            }
            JobStage::AddNew(cursor) => {
                match job.builder.sparsifier().next_edge_after(cursor) {
                    Some(e) => {
                        if !self.h.has_edge(e) {
                            self.h_add(e);
                        }
                        job.stage = JobStage::AddNew(Some(e));
                    }
                    None => job.stage = JobStage::Finish,
                }
                false
            }
            JobStage::Finish => {
                let (_, witness, stats) = job.builder.into_parts();
                let ins = std::mem::take(&mut self.ins);
                let del = std::mem::take(&mut self.del);
                for e in ins.iter().chain(del.iter()) {
                    self.deg_ins[e.u] = 0;
                    self.deg_ins[e.v] = 0;
                    self.deg_del[e.u] = 0;
                    self.deg_del[e.v] = 0;
                }
                let old_w = std::mem::replace(&mut self.base_witness, witness);
                let old_stats = self.last_stats.replace(stats);
                self.record(EdcsOp::Reset { ins, del, witness: old_w, counter: self.updates_since_rebuild, stats: old_stats });
                self.updates_since_rebuild = 0;
                self.rebuilds += 1;
                return true;
            }
        };
        self.job = Some(job);
        done
    }

    pub fn finish_rebuild(&mut self, g: &DynamicGraph) {
        while !self.step_rebuild(g) {}
    }

    fn h_add(&mut self, e: Edge) {
        self.h.insert(e).expect("H add");
        self.h_changes.push(UpdateEvent::insert(e));
        self.record(EdcsOp::HAdd(e));
    }

    fn h_remove(&mut self, e: Edge) {
        self.h.delete(e).expect("H remove");
        self.h_changes.push(UpdateEvent::delete(e));
        self.record(EdcsOp::HRemove(e));
    }

    fn record(&mut self, op: EdcsOp) {
        if let Some(j) = self.journal.as_mut() {
            j.push(op);
        }
    }

    /// Changes to `H` since the last call, in order.
    pub fn take_h_changes(&mut self) -> Vec<UpdateEvent> {
        std::mem::take(&mut self.h_changes)
    }

    pub fn enable_journal(&mut self) {
        self.journal.get_or_insert_with(Vec::new);
    }

    /// Undo records since the last call, oldest first.
    pub fn take_journal(&mut self) -> Vec<EdcsOp> {
        self.journal.as_mut().map(std::mem::take).unwrap_or_default()
    }

    /// Reverse one journaled mutation. Ops must be undone newest first, and
    /// no rebuild may be in progress.
    pub fn undo(&mut self, op: EdcsOp) {
        match op {
            EdcsOp::HAdd(e) => {
                self.h.delete(e).expect("undo H add");
                self.h_changes.push(UpdateEvent::delete(e));
            }
            EdcsOp::HRemove(e) => {
                self.h.insert(e).expect("undo H remove");
                self.h_changes.push(UpdateEvent::insert(e));
            }
            EdcsOp::InsRecord(e) => {
                self.ins.remove(&e);
                self.deg_ins[e.u] -= 1;
                self.deg_ins[e.v] -= 1;
            }
            EdcsOp::DelRecord(e) => {
                self.del.remove(&e);
                self.deg_del[e.u] -= 1;
                self.deg_del[e.v] -= 1;
            }
            EdcsOp::Counter(c) => self.updates_since_rebuild = c,
            EdcsOp::Batch(b) => self.batch_index = b,
            EdcsOp::Reset { ins, del, witness, counter, stats } => {
                for e in &ins {
                    self.deg_ins[e.u] += 1;
                    self.deg_ins[e.v] += 1;
                }
                for e in &del {
                    self.deg_del[e.u] += 1;
                    self.deg_del[e.v] += 1;
                }
                self.ins = ins;
                self.del = del;
                self.base_witness = witness;
                self.updates_since_rebuild = counter;
                self.last_stats = stats;
                self.rebuilds -= 1;
            }
        }
    }

    /// Drop a pending rebuild, e.g. because the graph it was reading is
    /// about to be rolled back. Any diff already applied to `H` stays
    /// journaled and can be undone.
    pub fn abandon_rebuild(&mut self) -> bool {
        self.job.take().is_some()
    }

    /// Restart a rebuild from scratch (used after an abandoned one).
    pub fn restart_rebuild(&mut self) {
        self.start_rebuild();
    }
}

/// Whether a newly inserted edge joins `H`: both endpoints must have fewer
/// than `beta lambda / 16 - 1` insertions since the last rebuild (counting
/// this one) and the edge's degree in `H` must be at most `beta - 2`.
pub fn insertion_allowed(params: &EdcsParams, max_inserted_degree: usize, h_degree: usize) -> bool {
    (max_inserted_degree as f64) < params.vertex_cutoff() - 1.0 && h_degree as f64 <= params.beta - 2.0
}

/// Text dump of a sparsifier and its witness: a stream-format edge list
/// followed by a `D:` line.
pub fn dump_snapshot(h: &DynamicGraph, witness: &BTreeSet<VertexId>) -> String {
    let events: Vec<UpdateEvent> = h.edges().map(UpdateEvent::insert).collect();
    let mut out = crate::graph::write_stream(h.n(), &events);
    out.push_str("D:");
    for v in witness {
        let _ = write!(out, " {v}");
    }
    out.push('\n');
    out
}

#[cfg(test)]
mod tests;
