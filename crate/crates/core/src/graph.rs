//! Dynamic simple graphs over a fixed vertex universe, update events and the
//! text stream format.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::work;

/// Vertex index in `[0, n)`.
pub type VertexId = usize;

/// Undirected edge stored in canonical order `u < v`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub u: VertexId,
    pub v: VertexId,
}

impl Edge {
    /// Canonical edge between `a` and `b`. Fails on self-loops.
    pub fn new(a: VertexId, b: VertexId) -> Result<Self, GraphError> {
        match a.cmp(&b) {
            std::cmp::Ordering::Less => Ok(Edge { u: a, v: b }),
            std::cmp::Ordering::Greater => Ok(Edge { u: b, v: a }),
            std::cmp::Ordering::Equal => Err(GraphError::SelfLoop(a)),
        }
    }

    /// Like [`Edge::new`] but panics on a self-loop. For internal call sites
    /// where both endpoints come from existing edges.
    pub fn of(a: VertexId, b: VertexId) -> Self {
        Edge::new(a, b).expect("self-loop")
    }

    pub fn touches(&self, x: VertexId) -> bool {
        self.u == x || self.v == x
    }

    pub fn other(&self, x: VertexId) -> VertexId {
        if self.u == x {
            self.v
        } else {
            self.u
        }
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.u, self.v)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UpdateKind {
    Insert,
    Delete,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct UpdateEvent {
    pub kind: UpdateKind,
    pub edge: Edge,
}

impl UpdateEvent {
    pub fn insert(edge: Edge) -> Self {
        UpdateEvent { kind: UpdateKind::Insert, edge }
    }

    pub fn delete(edge: Edge) -> Self {
        UpdateEvent { kind: UpdateKind::Delete, edge }
    }

    /// The event that undoes this one.
    pub fn inverse(&self) -> Self {
        let kind = match self.kind {
            UpdateKind::Insert => UpdateKind::Delete,
            UpdateKind::Delete => UpdateKind::Insert,
        };
        UpdateEvent { kind, edge: self.edge }
    }
}

impl fmt::Display for UpdateEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = match self.kind {
            UpdateKind::Insert => '+',
            UpdateKind::Delete => '-',
        };
        write!(f, "{} {} {}", sign, self.edge.u, self.edge.v)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("edge {0} already present")]
    DuplicateEdge(Edge),
    #[error("edge {0} not present")]
    MissingEdge(Edge),
    #[error("self-loop at vertex {0}")]
    SelfLoop(VertexId),
    #[error("vertex {vertex} out of range for n = {n}")]
    OutOfRange { vertex: VertexId, n: usize },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: vertex {vertex} out of range for n = {n}")]
    Range { line: usize, vertex: VertexId, n: usize },
}

/// Simple undirected graph on a fixed vertex set `0..n`.
///
/// Adjacency is kept in ordered sets so that every traversal is
/// deterministic.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DynamicGraph {
    n: usize,
    adj: Vec<BTreeSet<VertexId>>,
    edge_count: usize,
    update_clock: u64,
}

impl DynamicGraph {
    pub fn new(n: usize) -> Self {
        DynamicGraph { n, adj: vec![BTreeSet::new(); n], edge_count: 0, update_clock: 0 }
    }

    /// Graph on `n` vertices holding `edges`. Duplicates are rejected.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = Edge>) -> Result<Self, GraphError> {
        let mut g = DynamicGraph::new(n);
        for e in edges {
            g.insert(e)?;
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn update_clock(&self) -> u64 {
        self.update_clock
    }

    pub fn degree(&self, v: VertexId) -> usize {
        work::tick(1);
        self.adj[v].len()
    }

    pub fn neighbors(&self, v: VertexId) -> impl Iterator<Item = VertexId> + '_ {
        self.adj[v].iter().copied()
    }

    pub fn has_edge(&self, e: Edge) -> bool {
        work::tick(1);
        e.v < self.n && self.adj[e.u].contains(&e.v)
    }

    /// `deg(u) + deg(v)`; the edge itself need not be present.
    pub fn edge_degree(&self, e: Edge) -> usize {
        self.degree(e.u) + self.degree(e.v)
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(BTreeSet::len).max().unwrap_or(0)
    }

    /// All edges in canonical sorted order.
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, nb)| nb.range(u + 1..).map(move |&v| Edge { u, v }))
    }

    /// First edge in canonical order strictly after `cursor` (from the start
    /// when `cursor` is `None`). Lets long traversals be resumed one edge at
    /// a time while the graph is only mutated at the cursor.
    pub fn next_edge_after(&self, cursor: Option<Edge>) -> Option<Edge> {
        let (start_u, start_v) = match cursor {
            Some(c) => (c.u, c.v + 1),
            None => (0, 1),
        };
        for u in start_u..self.n {
            work::tick(1);
            let lo = if u == start_u { start_v.max(u + 1) } else { u + 1 };
            if let Some(&v) = self.adj[u].range(lo..).next() {
                return Some(Edge { u, v });
            }
        }
        None
    }

    fn check_range(&self, e: Edge) -> Result<(), GraphError> {
        if e.v >= self.n {
            return Err(GraphError::OutOfRange { vertex: e.v, n: self.n });
        }
        Ok(())
    }

    pub fn insert(&mut self, e: Edge) -> Result<(), GraphError> {
        self.check_range(e)?;
        if !self.adj[e.u].insert(e.v) {
            return Err(GraphError::DuplicateEdge(e));
        }
        self.adj[e.v].insert(e.u);
        work::tick(2);
        self.edge_count += 1;
        self.update_clock += 1;
        Ok(())
    }

    pub fn delete(&mut self, e: Edge) -> Result<(), GraphError> {
        self.check_range(e)?;
        if !self.adj[e.u].remove(&e.v) {
            return Err(GraphError::MissingEdge(e));
        }
        self.adj[e.v].remove(&e.u);
        work::tick(2);
        self.edge_count -= 1;
        self.update_clock += 1;
        Ok(())
    }

    pub fn apply(&mut self, ev: &UpdateEvent) -> Result<(), GraphError> {
        match ev.kind {
            UpdateKind::Insert => self.insert(ev.edge),
            UpdateKind::Delete => self.delete(ev.edge),
        }
    }

    /// Same vertex set and edge set, ignoring the update clock.
    pub fn same_edges(&self, other: &DynamicGraph) -> bool {
        self.n == other.n && self.adj == other.adj
    }
}

/// Parse the stream format: a first line holding `n`, then `+ u v` or
/// `- u v` lines. Blank lines and `#` comments are skipped. Event edges are
/// validated for range and self-loops, not for presence in the graph.
pub fn parse_stream(text: &str) -> Result<(usize, Vec<UpdateEvent>), GraphError> {
    let mut n: Option<usize> = None;
    let mut events = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim_end_matches('\r');
        if trimmed.trim().is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let Some(n) = n else {
            let parsed = trimmed.trim().parse::<usize>().map_err(|_| GraphError::Parse {
                line,
                msg: format!("expected vertex count, got {trimmed:?}"),
            })?;
            n = Some(parsed);
            continue;
        };
        let parts: Vec<&str> = trimmed.split(' ').collect();
        if parts.len() != 3 {
            return Err(GraphError::Parse { line, msg: format!("expected \"+ u v\" or \"- u v\", got {trimmed:?}") });
        }
        let kind = match parts[0] {
            "+" => UpdateKind::Insert,
            "-" => UpdateKind::Delete,
            other => return Err(GraphError::Parse { line, msg: format!("unknown operation {other:?}") }),
        };
        let mut ids = [0usize; 2];
        for (slot, tok) in ids.iter_mut().zip(&parts[1..]) {
            *slot = tok.parse().map_err(|_| GraphError::Parse { line, msg: format!("bad vertex id {tok:?}") })?;
            if *slot >= n {
                return Err(GraphError::Range { line, vertex: *slot, n });
            }
        }
        let edge = Edge::new(ids[0], ids[1]).map_err(|_| GraphError::Parse { line, msg: format!("self-loop at vertex {}", ids[0]) })?;
        events.push(UpdateEvent { kind, edge });
    }
    let n = n.ok_or(GraphError::Parse { line: 1, msg: "missing vertex count".into() })?;
    Ok((n, events))
}

/// Render events in the stream format.
pub fn write_stream(n: usize, events: &[UpdateEvent]) -> String {
    let mut out = format!("{n}\n");
    for ev in events {
        out.push_str(&ev.to_string());
        out.push('\n');
    }
    out
}
