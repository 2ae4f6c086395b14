//! Seeded update-stream and graph generators.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{DynamicGraph, Edge, UpdateEvent};

/// Uniform random graph with `m` edges (fewer if `m` exceeds the number of
/// pairs).
pub fn random_graph(n: usize, m: usize, seed: u64) -> DynamicGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = DynamicGraph::new(n);
    let target = m.min(n * n.saturating_sub(1) / 2);
    while g.edge_count() < target {
        if let Some(e) = random_absent(&g, &mut rng) {
            g.insert(e).expect("fresh edge");
        }
    }
    g
}

fn random_pair(n: usize, rng: &mut ChaCha8Rng) -> Option<Edge> {
    if n < 2 {
        return None;
    }
    let a = rng.gen_range(0..n);
    let mut b = rng.gen_range(0..n - 1);
    if b >= a {
        b += 1;
    }
    Some(Edge::of(a, b))
}

fn random_absent(g: &DynamicGraph, rng: &mut ChaCha8Rng) -> Option<Edge> {
    let n = g.n();
    if g.edge_count() >= n * n.saturating_sub(1) / 2 {
        return None;
    }
    loop {
        let e = random_pair(n, rng)?;
        if !g.has_edge(e) {
            return Some(e);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StreamKind {
    ErdosRenyiDynamic,
    SlidingWindow,
    PlantedMatchingAdversarial,
}

impl FromStr for StreamKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "erdos-renyi-dynamic" => Ok(StreamKind::ErdosRenyiDynamic),
            "sliding-window" => Ok(StreamKind::SlidingWindow),
            "planted-matching-adversarial" => Ok(StreamKind::PlantedMatchingAdversarial),
            _ => Err(format!("unknown stream kind '{s}'")),
        }
    }
}

impl fmt::Display for StreamKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StreamKind::ErdosRenyiDynamic => "erdos-renyi-dynamic",
            StreamKind::SlidingWindow => "sliding-window",
            StreamKind::PlantedMatchingAdversarial => "planted-matching-adversarial",
        })
    }
}

pub fn gen_stream(kind: StreamKind, n: usize, steps: usize, seed: u64) -> Vec<UpdateEvent> {
    match kind {
        StreamKind::ErdosRenyiDynamic => erdos_renyi_dynamic(n, steps, seed),
        StreamKind::SlidingWindow => sliding_window(n, steps, 2 * n, seed),
        StreamKind::PlantedMatchingAdversarial => planted_matching(n, steps, seed),
    }
}

/// Each step inserts a uniformly random absent pair or deletes a uniformly
/// random live edge with equal probability.
pub fn erdos_renyi_dynamic(n: usize, steps: usize, seed: u64) -> Vec<UpdateEvent> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = DynamicGraph::new(n);
    let mut live: Vec<Edge> = Vec::new();
    let mut out = Vec::with_capacity(steps);
    while out.len() < steps {
        let ev = if live.is_empty() || rng.gen_bool(0.5) {
            match random_absent(&g, &mut rng) {
                Some(e) => {
                    live.push(e);
                    UpdateEvent::insert(e)
                }
                None => break,
            }
        } else {
            let e = live.swap_remove(rng.gen_range(0..live.len()));
            UpdateEvent::delete(e)
        };
        g.apply(&ev).expect("generator keeps the stream valid");
        out.push(ev);
    }
    out
}

/// Random insertions; once `window` edges are live every step instead
/// deletes the oldest live edge, alternating with insertions.
pub fn sliding_window(n: usize, steps: usize, window: usize, seed: u64) -> Vec<UpdateEvent> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = DynamicGraph::new(n);
    let mut live: VecDeque<Edge> = VecDeque::new();
    let mut out = Vec::with_capacity(steps);
    while out.len() < steps {
        let ev = if live.len() >= window.max(1) {
            UpdateEvent::delete(live.pop_front().unwrap())
        } else {
            match random_absent(&g, &mut rng) {
                Some(e) => {
                    live.push_back(e);
                    UpdateEvent::insert(e)
                }
                None => UpdateEvent::delete(live.pop_front().expect("complete graph is non-empty")),
            }
        };
        g.apply(&ev).expect("generator keeps the stream valid");
        out.push(ev);
    }
    out
}

/// Splits the vertices into random parts, inserts a perfect matching inside
/// the largest part, then spends the remaining steps on random noise that
/// never touches the planted edges.
pub fn planted_matching(n: usize, steps: usize, seed: u64) -> Vec<UpdateEvent> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let parts = (n / 8).max(1);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); parts];
    for v in 0..n {
        members[rng.gen_range(0..parts)].push(v);
    }
    let mut big = members.into_iter().max_by_key(|p| p.len()).unwrap_or_default();
    big.shuffle(&mut rng);
    let planted: Vec<Edge> = big.chunks_exact(2).map(|c| Edge::of(c[0], c[1])).collect();

    let mut g = DynamicGraph::new(n);
    let mut out = Vec::with_capacity(steps);
    for &e in planted.iter().take(steps) {
        g.insert(e).expect("planted edges are disjoint");
        out.push(UpdateEvent::insert(e));
    }
    let mut noise: Vec<Edge> = Vec::new();
    let mut stuck = 0;
    while out.len() < steps && stuck < 1000 {
        let ev = if noise.is_empty() || rng.gen_bool(0.5) {
            match random_absent(&g, &mut rng) {
                Some(e) => {
                    noise.push(e);
                    UpdateEvent::insert(e)
                }
                None => {
                    stuck += 1;
                    continue;
                }
            }
        } else {
            UpdateEvent::delete(noise.swap_remove(rng.gen_range(0..noise.len())))
        };
        g.apply(&ev).expect("generator keeps the stream valid");
        out.push(ev);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn valid(n: usize, s: &[UpdateEvent]) -> bool {
        let mut g = DynamicGraph::new(n);
        s.iter().all(|ev| g.apply(ev).is_ok())
    }

    #[test]
    fn streams_are_valid_and_deterministic() {
        for kind in [StreamKind::ErdosRenyiDynamic, StreamKind::SlidingWindow, StreamKind::PlantedMatchingAdversarial] {
            let a = gen_stream(kind, 20, 300, 5);
            assert_eq!(a.len(), 300);
            assert!(valid(20, &a));
            assert_eq!(a, gen_stream(kind, 20, 300, 5));
            assert!(gen_stream(kind, 20, 0, 5).is_empty());
            assert_eq!(kind.to_string().parse::<StreamKind>(), Ok(kind));
        }
    }

    #[test]
    fn sliding_window_deletes_oldest() {
        let s = sliding_window(10, 200, 6, 2);
        let mut live: VecDeque<Edge> = VecDeque::new();
        for ev in &s {
            match ev.kind {
                crate::UpdateKind::Insert => live.push_back(ev.edge),
                crate::UpdateKind::Delete => assert_eq!(live.pop_front(), Some(ev.edge)),
            }
        }
    }

    #[test]
    fn random_graph_has_m_edges() {
        assert_eq!(random_graph(10, 20, 1).edge_count(), 20);
        assert_eq!(random_graph(4, 100, 1).edge_count(), 6);
    }
}
