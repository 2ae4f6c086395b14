//! A small journaled batch algorithm: greedy maximal matching with an undo
//! log. Used to exercise the scheduler and as a cheap baseline.

use std::collections::VecDeque;

use super::BatchAlgorithm;
use crate::graph::{DynamicGraph, Edge, UpdateEvent, UpdateKind};
use crate::oracle::Matching;

#[derive(Clone, Debug)]
enum Entry {
    /// Batch opened; holds the batch index in force before it.
    Mark(usize),
    Graph(UpdateEvent),
    Match { add: bool, e: Edge },
    Log,
}

#[derive(Clone, Debug)]
enum Task {
    Begin(usize),
    Process(UpdateEvent),
    Revert(usize),
}

#[derive(Clone, Debug)]
pub struct JournaledGreedy {
    g: DynamicGraph,
    mate: Vec<Option<usize>>,
    matching: Matching,
    /// `(batch index, update)` pairs in processing order; the exact state
    /// fingerprint compared by replay tests.
    log: Vec<(usize, UpdateEvent)>,
    current_batch: usize,
    journal: Vec<Entry>,
    marks: Vec<usize>,
    queue: VecDeque<Task>,
    changes: Vec<UpdateEvent>,
}

impl JournaledGreedy {
    pub fn new(g: &DynamicGraph) -> Self {
        let mut s = JournaledGreedy {
            g: DynamicGraph::new(g.n()),
            mate: vec![None; g.n()],
            matching: Matching::new(),
            log: Vec::new(),
            current_batch: 0,
            journal: Vec::new(),
            marks: Vec::new(),
            queue: VecDeque::new(),
            changes: Vec::new(),
        };
        for e in g.edges() {
            s.g.insert(e).expect("copy");
            s.try_match(e);
        }
        s.journal.clear();
        s
    }

    pub fn log(&self) -> &[(usize, UpdateEvent)] {
        &self.log
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

    fn rematch(&mut self, x: usize) {
        if self.mate[x].is_some() {
            return;
        }
        let free = self.g.neighbors(x).find(|&y| self.mate[y].is_none());
        if let Some(y) = free {
            self.try_match(Edge::of(x, y));
        }
    }

    fn run(&mut self, ev: UpdateEvent) {
        self.g.apply(&ev).expect("probe update");
        self.journal.push(Entry::Graph(ev));
        self.log.push((self.current_batch, ev));
        self.journal.push(Entry::Log);
        let e = ev.edge;
        match ev.kind {
            UpdateKind::Insert => self.try_match(e),
            UpdateKind::Delete => {
                if self.matching.contains(&e) {
                    self.set_match(e, false);
                    self.journal.push(Entry::Match { add: false, e });
                    self.rematch(e.u);
                    self.rematch(e.v);
                }
            }
        }
    }

    fn undo_one(&mut self) -> bool {
        match self.journal.pop().expect("journal underflow") {
            Entry::Mark(prev) => {
                self.marks.pop();
                self.current_batch = prev;
                return true;
            }
            Entry::Graph(ev) => self.g.apply(&ev.inverse()).expect("probe undo"),
            Entry::Match { add, e } => self.set_match(e, !add),
            Entry::Log => {
                self.log.pop();
            }
        }
        false
    }
}

impl BatchAlgorithm for JournaledGreedy {
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
                self.journal.push(Entry::Mark(self.current_batch));
                self.current_batch = index;
            }
            Task::Process(ev) => self.run(ev),
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
                Task::Process(_) => 6,
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
