//! Uniform sparsifier packaged as a revertible batch algorithm.
//!
//! Output is a greedy maximal matching of the sparsifier, kept up to date
//! from its edge changes. Each update is handled within one quantum,
//! including any rebuild it triggers.

use std::collections::VecDeque;

use super::{UniformError, UniformParams, UniformSparsifier, UsOp};
use crate::graph::{DynamicGraph, Edge, UpdateEvent, UpdateKind};
use crate::oracle::Matching;
use crate::scheduler::BatchAlgorithm;

#[derive(Clone, Debug)]
enum Entry {
    Mark,
    Us(UsOp),
    Match { add: bool, e: Edge },
}

#[derive(Clone, Debug)]
enum Task {
    Begin(usize),
    Process(UpdateEvent),
    Revert(usize),
}

#[derive(Clone, Debug)]
pub struct BatchUniformMatcher {
    us: UniformSparsifier,
    mate: Vec<Option<usize>>,
    matching: Matching,
    journal: Vec<Entry>,
    marks: Vec<usize>,
    queue: VecDeque<Task>,
    changes: Vec<UpdateEvent>,
}

impl BatchUniformMatcher {
    pub fn new(g: &DynamicGraph, params: UniformParams, k: usize) -> Result<Self, UniformError> {
        let mut us = UniformSparsifier::new(g, params, k)?;
        us.enable_journal();
        let mut s = BatchUniformMatcher {
            mate: vec![None; g.n()],
            matching: Matching::new(),
            journal: Vec::new(),
            marks: Vec::new(),
            queue: VecDeque::new(),
            changes: Vec::new(),
            us,
        };
        for e in s.us.output().edges().collect::<Vec<_>>() {
            s.try_match(e);
        }
        s.us.take_output_changes();
        s.journal.clear();
        Ok(s)
    }

    pub fn sparsifier(&self) -> &UniformSparsifier {
        &self.us
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

    fn sync(&mut self) {
        for op in self.us.take_journal() {
            self.journal.push(Entry::Us(op));
        }
        for ch in self.us.take_output_changes() {
            let e = ch.edge;
            match ch.kind {
                UpdateKind::Insert => self.try_match(e),
                UpdateKind::Delete => {
                    if self.matching.contains(&e) {
                        self.set_match(e, false);
                        self.journal.push(Entry::Match { add: false, e });
                        for x in [e.u, e.v] {
                            let free = self.us.output().neighbors(x).find(|&y| self.mate[y].is_none());
                            if let Some(y) = free {
                                self.try_match(Edge::of(x, y));
                            }
                        }
                    }
                }
            }
        }
    }

    fn undo_one(&mut self) -> bool {
        match self.journal.pop().expect("journal underflow") {
            Entry::Mark => {
                self.marks.pop();
                return true;
            }
            Entry::Us(op) => {
                self.us.undo(op);
                self.us.take_output_changes();
            }
            Entry::Match { add, e } => self.set_match(e, !add),
        }
        false
    }
}

impl BatchAlgorithm for BatchUniformMatcher {
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
        let Some(task) = self.queue.pop_front() else { return false };
        match task {
            Task::Begin(index) => {
                self.marks.push(self.journal.len());
                self.journal.push(Entry::Mark);
                if index < self.us.batch_index().unwrap_or(0) {
                    self.us.clear_batch();
                }
                self.us.set_batch(index).expect("batch index");
                self.sync();
            }
            Task::Process(ev) => {
                self.us.apply(&ev).expect("instance input respects the weight cap");
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
        let mut total = 0;
        let mut marks_seen = 0;
        for t in &self.queue {
            total += match t {
                Task::Revert(j) => {
                    let idx = self.marks.len().saturating_sub(marks_seen + j);
                    marks_seen += j;
                    let from = self.marks.get(idx).copied().unwrap_or(0);
                    self.journal.len().saturating_sub(from)
                }
                Task::Process(_) | Task::Begin(_) => 1,
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
