//! Damaged EDCS packaged as a revertible batch algorithm.
//!
//! The instance owns a copy of the graph, the sparsifier state and a
//! maximal matching of the sparsifier. Every mutation of the three is
//! journaled, so the last batches can be undone one record per quantum.

use std::collections::VecDeque;

use super::{DamagedEdcs, EdcsError, EdcsOp, EdcsParams};
use crate::graph::{DynamicGraph, Edge, UpdateEvent, UpdateKind};
use crate::oracle::Matching;
use crate::scheduler::BatchAlgorithm;

#[derive(Clone, Debug)]
enum Entry {
    Mark,
    Graph(UpdateEvent),
    Edcs(EdcsOp),
    Match { add: bool, e: Edge },
}

#[derive(Clone, Debug)]
enum Task {
    Begin(usize),
    Process(UpdateEvent),
    Revert(usize),
}

#[derive(Clone, Debug)]
pub struct BatchEdcsMatcher {
    g: DynamicGraph,
    edcs: DamagedEdcs,
    mate: Vec<Option<usize>>,
    matching: Matching,
    journal: Vec<Entry>,
    marks: Vec<usize>,
    queue: VecDeque<Task>,
    /// A rebuild triggered by the last processed update is still running.
    rebuilding: bool,
    changes: Vec<UpdateEvent>,
    quanta: u64,
    events: u64,
}

impl BatchEdcsMatcher {
    /// Instance on initial graph `g` with `k` batches. Small batch indices
    /// give rebuild thresholds that floor to zero, so the degenerate
    /// override is always switched on here.
    pub fn new(g: &DynamicGraph, params: EdcsParams, k: usize) -> Result<Self, EdcsError> {
        let mut edcs = DamagedEdcs::init(g, params.degenerate_ok(), k)?;
        let mut s = BatchEdcsMatcher {
            g: g.clone(),
            mate: vec![None; g.n()],
            matching: Matching::new(),
            journal: Vec::new(),
            marks: Vec::new(),
            queue: VecDeque::new(),
            rebuilding: false,
            changes: Vec::new(),
            quanta: 0,
            events: 0,
            edcs: {
                edcs.enable_journal();
                edcs
            },
        };
        for ch in s.edcs.take_h_changes() {
            s.on_h_change(ch);
        }
        s.journal.clear();
        Ok(s)
    }

    pub fn edcs(&self) -> &DamagedEdcs {
        &self.edcs
    }

    pub fn graph(&self) -> &DynamicGraph {
        &self.g
    }

    fn set_match(&mut self, e: Edge, add: bool) {
        if add {
            self.mate[e.u] = Some(e.v);
            self.mate[e.v] = Some(e.u);
            self.matching.insert(e);
            self.changes.push(UpdateEvent::insert(e));
        } else {
            self.mate[e.u] = None;
            self.mate[e.v] = None;
            self.matching.remove(&e);
            self.changes.push(UpdateEvent::delete(e));
        }
    }

    fn try_match(&mut self, e: Edge) {
        if self.mate[e.u].is_none() && self.mate[e.v].is_none() {
            self.set_match(e, true);
            self.journal.push(Entry::Match { add: true, e });
        }
    }

    fn on_h_change(&mut self, ch: UpdateEvent) {
        let e = ch.edge;
        match ch.kind {
            UpdateKind::Insert => self.try_match(e),
            UpdateKind::Delete => {
                if self.matching.contains(&e) {
                    self.set_match(e, false);
                    self.journal.push(Entry::Match { add: false, e });
                    for x in [e.u, e.v] {
                        let free = self.edcs.sparsifier().neighbors(x).find(|&y| self.mate[y].is_none());
                        if let Some(y) = free {
                            self.try_match(Edge::of(x, y));
                        }
                    }
                }
            }
        }
    }

    /// Move the sparsifier's undo records and `H` changes into this
    /// instance's journal and matching.
    fn sync(&mut self) {
        for op in self.edcs.take_journal() {
            self.journal.push(Entry::Edcs(op));
        }
        for ch in self.edcs.take_h_changes() {
            self.on_h_change(ch);
        }
    }

    fn undo_one(&mut self) -> bool {
        match self.journal.pop().expect("journal underflow") {
            Entry::Mark => {
                self.marks.pop();
                return true;
            }
            Entry::Graph(ev) => self.g.apply(&ev.inverse()).expect("undo graph"),
            Entry::Edcs(op) => {
                self.edcs.undo(op);
                self.edcs.take_h_changes();
            }
            Entry::Match { add, e } => self.set_match(e, !add),
        }
        false
    }
}

impl BatchAlgorithm for BatchEdcsMatcher {
    fn begin_batch(&mut self, index: usize) {
        self.queue.push_back(Task::Begin(index));
    }

    fn process(&mut self, ev: UpdateEvent) {
        self.queue.push_back(Task::Process(ev));
    }

    fn revert_batches(&mut self, j: usize) {
        self.queue.push_back(Task::Revert(j));
    }

    fn step_quantum(&mut self) -> bool {
        if self.rebuilding {
            self.quanta += 1;
            self.rebuilding = !self.edcs.step_rebuild(&self.g);
            self.sync();
            return true;
        }
        let Some(task) = self.queue.pop_front() else { return false };
        self.quanta += 1;
        match task {
            Task::Begin(index) => {
                self.marks.push(self.journal.len());
                self.journal.push(Entry::Mark);
                if index < self.edcs.batch_index().unwrap_or(0) {
                    self.edcs.clear_batch();
                }
                self.edcs.set_batch(index).expect("batch index");
                self.sync();
            }
            Task::Process(ev) => {
                self.events += 1;
                self.g.apply(&ev).expect("instance update");
                self.journal.push(Entry::Graph(ev));
                self.rebuilding = self.edcs.apply_update(ev);
                self.sync();
            }
            Task::Revert(0) => {}
            Task::Revert(j) => {
                if self.undo_one() {
                    if j > 1 {
                        self.queue.push_front(Task::Revert(j - 1));
                    }
                } else {
                    self.queue.push_front(Task::Revert(j));
                }
            }
        }
        true
    }

    fn pending_work(&self) -> usize {
        let per_event = if self.events == 0 { 1 } else { self.quanta.div_ceil(self.events) as usize };
        let mut total = usize::from(self.rebuilding) * per_event;
        let mut marks_seen = 0;
        for t in &self.queue {
            total += match t {
                Task::Revert(j) => {
                    let idx = self.marks.len().saturating_sub(marks_seen + j);
                    marks_seen += j;
                    let from = self.marks.get(idx).copied().unwrap_or(0);
                    self.journal.len().saturating_sub(from)
                }
                Task::Process(_) => per_event,
                Task::Begin(_) => 1,
            };
        }
        total
    }

    fn output(&self) -> &Matching {
        &self.matching
    }

    fn take_output_changes(&mut self) -> Vec<UpdateEvent> {
        std::mem::take(&mut self.changes)
    }
}
