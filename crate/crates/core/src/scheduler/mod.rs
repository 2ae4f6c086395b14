//! Worst-case scheduling of batch-dynamic algorithms.
//!
//! `k` instances of a revertible batch-dynamic algorithm process the same
//! update stream. Step `lambda` is written as `k` base-`k` digits, most
//! significant first. Instance `i` either takes the current update as a
//! singleton appended to its newest batch, or is in the middle of a reset
//! window in which it rolls back its newest batches, replays them as one
//! larger batch and then catches up on the window's own updates level by
//! level. Reset work is spread evenly over the window. Some instance is
//! always up to date, and the union of all instances' matchings is kept as
//! a graph of maximum degree `k`.

mod probe;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::graph::{DynamicGraph, Edge, UpdateEvent, UpdateKind};
use crate::oracle::Matching;
use crate::work;

pub use probe::JournaledGreedy;

/// An algorithm that processes updates in batches and can roll back its
/// most recent batches exactly.
///
/// Calls other than [`step_quantum`](Self::step_quantum) only enqueue work;
/// queued work is executed in call order, one bounded quantum at a time.
pub trait BatchAlgorithm {
    /// Open a new batch. `index` is the batch's time position among the
    /// `k` possible batches, `1` for the oldest and `k` for the newest.
    fn begin_batch(&mut self, index: usize);
    fn process(&mut self, ev: UpdateEvent);
    /// Roll back the last `j` batches, restoring the exact state from
    /// before the oldest of them was opened.
    fn revert_batches(&mut self, j: usize);
    /// Execute one quantum of queued work. Returns false when idle.
    fn step_quantum(&mut self) -> bool;
    /// Estimated number of quanta still queued.
    fn pending_work(&self) -> usize;
    fn output(&self) -> &Matching;
    /// Matching edges gained (`Insert`) and lost (`Delete`) since the last
    /// call.
    fn take_output_changes(&mut self) -> Vec<UpdateEvent>;

    fn drain(&mut self) {
        while self.step_quantum() {}
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SchedError {
    #[error("step {step} exceeds the k^k = {cap} step capacity")]
    StepCapExceeded { step: usize, cap: usize },
    #[error("k must be at least 2, got {0}")]
    BadK(usize),
}

/// A batch seen above the `(j + 1) k^j` size bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BatchOverflow {
    pub step: usize,
    pub instance: usize,
    pub level: usize,
    pub size: usize,
    pub bound: usize,
}

/// One batch of an instance: the history range `start..end`, at `level`
/// (level 1 is the newest and smallest).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BatchRange {
    pub level: usize,
    pub start: usize,
    pub end: usize,
}

impl BatchRange {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

/// What an instance does with step `lambda`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    Singleton,
    /// Inside the reset window `[start, start + k^gamma)`.
    Reset { start: usize, gamma: u32 },
}

/// Smallest `k >= 2` with `k^k >= len`.
pub fn k_for_length(len: usize) -> usize {
    let mut k = 2usize;
    while k.pow(k as u32) < len {
        k += 1;
    }
    k
}

fn digit(x: usize, pos: u32, k: usize) -> usize {
    (x / k.pow(pos)) % k
}

/// Role of instance `i` at step `lambda`. Instance `i` is a singleton unless
/// digit `i` occurs among the `k-1` most significant digits; otherwise the
/// highest such occurrence, at position `gamma`, fixes the reset window as
/// the block of `k^gamma` steps sharing all digits above `gamma - 1`.
pub fn role(k: usize, i: usize, lambda: usize) -> Role {
    for pos in (1..k as u32).rev() {
        if digit(lambda, pos, k) == i {
            let span = k.pow(pos);
            return Role::Reset { start: lambda - lambda % span, gamma: pos };
        }
    }
    Role::Singleton
}

/// Sub-window of a reset window containing offset `off`: `j` with
/// `off` in `[k^g - k^j, k^g - k^(j-1))` for `j >= 1`, or 0 for the last
/// step. Returns `(j, offset of the sub-window's last step)`.
fn sub_window(k: usize, gamma: u32, off: usize) -> (u32, usize) {
    let span = k.pow(gamma);
    let r = span - off;
    if r == 1 {
        return (0, span - 1);
    }
    let mut j = 1u32;
    while k.pow(j) < r {
        j += 1;
    }
    (j, span - k.pow(j - 1) - 1)
}

#[derive(Clone, Debug)]
struct Instance<A> {
    alg: A,
    stack: Vec<BatchRange>,
}

/// Per-step record for the optional trace.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepTrace {
    pub step: usize,
    pub fresh: Vec<usize>,
    pub work: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepReport {
    pub fresh: Vec<usize>,
    /// Work units spent by each instance this step.
    pub work: Vec<u64>,
    /// Work units spent maintaining the union.
    pub union_work: u64,
}

pub struct BatchScheduler<A: BatchAlgorithm> {
    k: usize,
    cap: usize,
    step: usize,
    g: DynamicGraph,
    history: Vec<UpdateEvent>,
    instances: Vec<Instance<A>>,
    union_count: BTreeMap<Edge, usize>,
    union: DynamicGraph,
    union_changes: Vec<UpdateEvent>,
    fresh: Vec<usize>,
    overflows: Vec<BatchOverflow>,
    trace: Option<Vec<StepTrace>>,
}

impl<A: BatchAlgorithm> BatchScheduler<A> {
    /// `factory(i)` builds instance `i` on the initial graph `g`.
    pub fn new(k: usize, g: &DynamicGraph, mut factory: impl FnMut(usize) -> A) -> Result<Self, SchedError> {
        if k < 2 {
            return Err(SchedError::BadK(k));
        }
        let cap = k.checked_pow(k as u32).unwrap_or(usize::MAX);
        let mut s = BatchScheduler {
            k,
            cap,
            step: 0,
            g: g.clone(),
            history: Vec::new(),
            instances: (0..k).map(|i| Instance { alg: factory(i), stack: Vec::new() }).collect(),
            union_count: BTreeMap::new(),
            union: DynamicGraph::new(g.n()),
            union_changes: Vec::new(),
            fresh: (0..k).collect(),
            overflows: Vec::new(),
            trace: None,
        };
        for i in 0..k {
            s.instances[i].alg.drain();
            s.absorb_output(i);
        }
        Ok(s)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn step_index(&self) -> usize {
        self.step
    }

    pub fn graph(&self) -> &DynamicGraph {
        &self.g
    }

    pub fn history(&self) -> &[UpdateEvent] {
        &self.history
    }

    pub fn instance(&self, i: usize) -> &A {
        &self.instances[i].alg
    }

    pub fn batch_stack(&self, i: usize) -> &[BatchRange] {
        &self.instances[i].stack
    }

    pub fn fresh(&self) -> &[usize] {
        &self.fresh
    }

    /// Every (step, batch) pair that exceeded the size bound. Singleton
    /// runs can be `(k - 1) k` steps long, so level-1 batches overflow for
    /// `k >= 3`.
    pub fn overflows(&self) -> &[BatchOverflow] {
        &self.overflows
    }

    pub fn output(&self, i: usize) -> &Matching {
        self.instances[i].alg.output()
    }

    /// Union of the instances' matchings restricted to the current graph.
    pub fn union(&self) -> &DynamicGraph {
        &self.union
    }

    /// Changes to [`union`](Self::union) since the last call.
    pub fn take_union_changes(&mut self) -> Vec<UpdateEvent> {
        std::mem::take(&mut self.union_changes)
    }

    pub fn enable_trace(&mut self) {
        self.trace.get_or_insert_with(Vec::new);
    }

    pub fn trace(&self) -> Option<&[StepTrace]> {
        self.trace.as_deref()
    }

    /// Trace as CSV: `step,fresh,w0,..,w{k-1}` with the fresh set
    /// space-separated.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("step,fresh");
        for i in 0..self.k {
            let _ = write!(out, ",w{i}");
        }
        out.push('\n');
        for row in self.trace.iter().flatten() {
            let fresh: Vec<String> = row.fresh.iter().map(|x| x.to_string()).collect();
            let _ = write!(out, "{},{}", row.step, fresh.join(" "));
            for w in &row.work {
                let _ = write!(out, ",{w}");
            }
            out.push('\n');
        }
        out
    }

    /// Feed the next update. `ev` must be valid for the current graph.
    pub fn step(&mut self, ev: UpdateEvent) -> Result<StepReport, SchedError> {
        let lambda = self.step;
        if lambda >= self.cap {
            return Err(SchedError::StepCapExceeded { step: lambda, cap: self.cap });
        }
        let ((), union_a) = work::measure(|| self.apply_to_union_graph(&ev));
        self.history.push(ev);
        let mut report = StepReport { fresh: Vec::new(), work: vec![0; self.k], union_work: union_a };
        for i in 0..self.k {
            let r = role(self.k, i, lambda);
            let ((), w) = work::measure(|| self.advance(i, r, lambda));
            report.work[i] = w;
            if r == Role::Singleton {
                report.fresh.push(i);
            }
            let ((), uw) = work::measure(|| self.absorb_output(i));
            report.union_work += uw;
        }
        for (i, inst) in self.instances.iter().enumerate() {
            for b in &inst.stack {
                let bound = (b.level + 1) * self.k.pow(b.level as u32);
                if b.len() > bound {
                    self.overflows.push(BatchOverflow { step: lambda, instance: i, level: b.level, size: b.len(), bound });
                }
            }
        }
        self.step += 1;
        self.fresh = report.fresh.clone();
        if let Some(t) = self.trace.as_mut() {
            t.push(StepTrace { step: lambda, fresh: report.fresh.clone(), work: report.work.clone() });
        }
        Ok(report)
    }

    fn index_of(&self, level: usize) -> usize {
        self.k + 1 - level
    }

    fn enqueue_batch(&mut self, i: usize, level: usize, start: usize, end: usize) {
        let index = self.index_of(level);
        let inst = &mut self.instances[i];
        inst.alg.begin_batch(index);
        for ev in &self.history[start..end] {
            inst.alg.process(*ev);
        }
        inst.stack.push(BatchRange { level, start, end });
    }

    fn advance(&mut self, i: usize, r: Role, lambda: usize) {
        let k = self.k;
        match r {
            Role::Singleton => {
                let inst = &mut self.instances[i];
                if inst.stack.last().map(|b| b.level) != Some(1) {
                    inst.alg.begin_batch(k);
                    inst.stack.push(BatchRange { level: 1, start: lambda, end: lambda });
                }
                inst.alg.process(self.history[lambda]);
                inst.stack.last_mut().unwrap().end = lambda + 1;
                inst.alg.drain();
            }
            Role::Reset { start, gamma } => {
                let off = lambda - start;
                if off == 0 {
                    // Roll back every batch at level <= gamma + 1 and replay
                    // their contents as a single batch of level gamma + 1.
                    let top = gamma as usize + 1;
                    let inst = &mut self.instances[i];
                    let mut popped = 0;
                    let mut from = start;
                    while let Some(b) = inst.stack.last() {
                        if b.level > top {
                            break;
                        }
                        from = b.start;
                        inst.stack.pop();
                        popped += 1;
                    }
                    if popped > 0 {
                        inst.alg.revert_batches(popped);
                    }
                    self.enqueue_batch(i, top, from, start);
                }
                let (j, last_off) = sub_window(k, gamma, off);
                let remaining = last_off - off + 1;
                let inst = &mut self.instances[i];
                let quota = inst.alg.pending_work().div_ceil(remaining);
                for _ in 0..quota {
                    if !inst.alg.step_quantum() {
                        break;
                    }
                }
                if off == last_off {
                    let span = k.pow(gamma);
                    if j >= 2 {
                        let lo = start + span - k.pow(j);
                        let hi = start + span - k.pow(j - 1);
                        self.enqueue_batch(i, j as usize, lo, hi);
                    } else if j == 0 {
                        let lo = start + span - k;
                        self.enqueue_batch(i, 1, lo, start + span);
                        self.instances[i].alg.drain();
                    }
                }
            }
        }
    }

    fn apply_to_union_graph(&mut self, ev: &UpdateEvent) {
        self.g.apply(ev).expect("scheduler: invalid update");
        let e = ev.edge;
        let counted = self.union_count.contains_key(&e);
        if counted {
            self.union.apply(ev).expect("union follows the graph");
            self.union_changes.push(*ev);
        }
    }

    fn absorb_output(&mut self, i: usize) {
        for ch in self.instances[i].alg.take_output_changes() {
            let e = ch.edge;
            work::tick(1);
            match ch.kind {
                UpdateKind::Insert => {
                    let c = self.union_count.entry(e).or_insert(0);
                    *c += 1;
                    if *c == 1 && self.g.has_edge(e) {
                        self.union.insert(e).expect("union add");
                        self.union_changes.push(ch);
                    }
                }
                UpdateKind::Delete => {
                    let c = self.union_count.get_mut(&e).expect("union count");
                    *c -= 1;
                    if *c == 0 {
                        self.union_count.remove(&e);
                        if self.union.has_edge(e) {
                            self.union.delete(e).expect("union remove");
                            self.union_changes.push(ch);
                        }
                    }
                }
            }
        }
    }

    /// Rerun instance `i`'s current batch partition on a fresh algorithm
    /// built by `factory` and return the result.
    pub fn replay(&self, i: usize, factory: impl FnOnce() -> A) -> A {
        let mut a = factory();
        a.drain();
        for b in &self.instances[i].stack {
            a.begin_batch(self.index_of(b.level));
            for ev in &self.history[b.start..b.end] {
                a.process(*ev);
            }
            a.drain();
        }
        a
    }
}
