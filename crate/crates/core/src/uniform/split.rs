//! Degree split by maximal walks.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::graph::{Edge, VertexId};
use crate::work;

/// Greedy maximal-walk decomposition of `edges`. Each walk starts at the
/// lowest vertex with edges left, always steps to the lowest unused
/// neighbour, and is grown from the tail and then from the head.
pub fn maximal_walks(edges: &BTreeSet<Edge>) -> Vec<Vec<Edge>> {
    let mut adj = Adj::new();
    for e in edges {
        work::tick(1);
        adj.entry(e.u).or_default().insert(e.v);
        adj.entry(e.v).or_default().insert(e.u);
    }
    let mut walks = Vec::new();
    while let Some((&start, _)) = adj.first_key_value() {
        // vertices in walk order
        let mut seq: VecDeque<VertexId> = VecDeque::from([start]);
        let mut tail = start;
        while let Some(w) = take(&mut adj, tail) {
            seq.push_back(w);
            tail = w;
        }
        let mut head = start;
        while let Some(w) = take(&mut adj, head) {
            seq.push_front(w);
            head = w;
        }
        let seq: Vec<VertexId> = seq.into();
        walks.push(seq.windows(2).map(|p| Edge::of(p[0], p[1])).collect());
    }
    walks
}

type Adj = BTreeMap<VertexId, BTreeSet<VertexId>>;

/// Consume the edge from `v` to its lowest remaining neighbour.
fn take(adj: &mut Adj, v: VertexId) -> Option<VertexId> {
    work::tick(1);
    let w = adj.get_mut(&v)?.pop_first()?;
    if adj[&v].is_empty() {
        adj.remove(&v);
    }
    let nw = adj.get_mut(&w).expect("symmetric adjacency");
    nw.remove(&v);
    if nw.is_empty() {
        adj.remove(&w);
    }
    Some(w)
}

/// Edges at positions 2, 4, ... (1-based) of every maximal walk. Every
/// vertex keeps within one of half its degree.
pub fn degree_split(edges: &BTreeSet<Edge>) -> BTreeSet<Edge> {
    maximal_walks(edges).into_iter().flat_map(|w| w.into_iter().skip(1).step_by(2)).collect()
}
