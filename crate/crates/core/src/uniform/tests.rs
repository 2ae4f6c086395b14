use std::collections::BTreeSet;

use super::*;
use crate::gen::{erdos_renyi_dynamic, random_graph};
use crate::oracle::{check_matching, Matching};
use crate::scheduler::{BatchAlgorithm, BatchScheduler};

fn set(edges: &[(usize, usize)]) -> BTreeSet<Edge> {
    edges.iter().map(|&(a, b)| Edge::of(a, b)).collect()
}

fn degrees(n: usize, edges: &BTreeSet<Edge>) -> Vec<usize> {
    let mut d = vec![0; n];
    for e in edges {
        d[e.u] += 1;
        d[e.v] += 1;
    }
    d
}

/// Drops insertions that would push a vertex past `cap` and the matching
/// deletions.
fn capped_stream(n: usize, steps: usize, cap: usize, seed: u64) -> Vec<UpdateEvent> {
    let mut g = DynamicGraph::new(n);
    let mut out = Vec::new();
    for ev in erdos_renyi_dynamic(n, steps, seed) {
        let ok = match ev.kind {
            UpdateKind::Insert => g.degree(ev.edge.u) < cap && g.degree(ev.edge.v) < cap,
            UpdateKind::Delete => g.has_edge(ev.edge),
        };
        if ok {
            g.apply(&ev).unwrap();
            out.push(ev);
        }
    }
    out
}

fn disjoint_edges(count: usize, offset: usize) -> Vec<Edge> {
    (0..count).map(|i| Edge::of(offset + 2 * i, offset + 2 * i + 1)).collect()
}

#[test]
fn split_small_cases() {
    assert!(degree_split(&set(&[(0, 1)])).is_empty());
    assert_eq!(degree_split(&set(&[(0, 1), (1, 2)])), set(&[(1, 2)]));
    let out = degree_split(&set(&[(0, 1), (1, 2), (2, 3), (0, 3)]));
    assert_eq!(out, set(&[(1, 2), (0, 3)]));
    assert_eq!(degrees(4, &out), vec![1; 4]);
}

#[test]
fn split_halves_degrees() {
    for seed in 0..100 {
        let g = random_graph(30, 10 + 3 * seed as usize, seed);
        let input: BTreeSet<Edge> = g.edges().collect();
        let walks = maximal_walks(&input);
        assert_eq!(walks.iter().map(Vec::len).sum::<usize>(), input.len());
        let out = degree_split(&input);
        assert!(out.is_subset(&input));
        let (din, dout) = (degrees(30, &input), degrees(30, &out));
        for v in 0..30 {
            assert!((2 * dout[v]).abs_diff(din[v]) <= 2, "seed {seed} vertex {v}");
        }
    }
}

#[test]
fn level_formula() {
    assert_eq!(level_count(0.5, 1.0), Ok(0));
    assert_eq!(level_count(0.25, 1.0), Ok(1));
    assert_eq!(level_count(1.0 / 64.0, 1.0), Ok(5));
    assert!(matches!(level_count(1.0, 1.0), Err(UniformError::BadWeights(_))));
}

#[test]
fn single_level_output_is_input() {
    let g = DynamicGraph::from_edges(6, [Edge::of(0, 1), Edge::of(1, 2), Edge::of(3, 4)]).unwrap();
    let us = static_uniform_sparsify(&g, 0.5, 1.0, 0.5).unwrap();
    assert_eq!(us.levels(), 0);
    assert!(us.output().same_edges(&g));
    assert!(us.output_weights().iter().all(|(_, w)| w == 0.5));
}

#[test]
fn low_degree_is_all_peeled() {
    let g = random_graph(40, 60, 2);
    let cap = g.max_degree();
    let lambda = 1.0 / cap.max(1) as f64 / 4.0;
    let us = static_uniform_sparsify(&g, lambda, 1.0, 1.0 / cap as f64).unwrap();
    assert!(us.levels() >= 2);
    assert_eq!(us.f_level(0).len(), g.edge_count());
    assert!(us.e_at_least(1).is_empty());
    assert!(us.report().exact_ok());
}

#[test]
fn empty_input_has_empty_levels() {
    let us = static_uniform_sparsify(&DynamicGraph::new(5), 1.0 / 16.0, 1.0, 0.2).unwrap();
    assert!((0..=us.levels()).all(|i| us.e_at_least(i).is_empty() && us.f_level(i).is_empty()));
}

#[test]
fn bad_weights_rejected() {
    let g = DynamicGraph::from_edges(4, [Edge::of(0, 1), Edge::of(0, 2), Edge::of(0, 3)]).unwrap();
    assert!(matches!(static_uniform_sparsify(&g, 0.5, 1.0, 0.5), Err(UniformError::BadWeights(m)) if m.contains("vertex 0 would carry 3")));
    let mut us = static_uniform_sparsify(&g, 1.0 / 3.0, 1.0, 0.5).unwrap();
    assert!(matches!(us.insert(Edge::of(0, 1)), Err(UniformError::DuplicateEdge(_))));
    assert!(matches!(us.delete(Edge::of(1, 2)), Err(UniformError::MissingEdge(_))));
}

#[test]
fn pending_guard_arithmetic() {
    let g = DynamicGraph::from_edges(220, disjoint_edges(100, 0)).unwrap();
    let mut us = UniformSparsifier::new(&g, UniformParams::new(0.5, 1.0, 0.2), 4).unwrap();
    us.set_batch(1).unwrap();
    assert_eq!(us.threshold(100), 5);
    for (j, e) in disjoint_edges(6, 200).into_iter().enumerate() {
        us.insert(e).unwrap();
        let fired = us.stats().full_rebuilds == 1;
        assert_eq!(fired, j == 5, "insert {}", j + 1);
    }
    assert!(us.pending().is_empty());
    assert_eq!(us.active().len(), 106);
}

#[test]
fn deleting_pending_touches_no_level() {
    let g = DynamicGraph::from_edges(30, disjoint_edges(10, 0)).unwrap();
    let mut us = static_uniform_sparsify(&g, 0.25, 1.0, 0.5).unwrap();
    let e = Edge::of(0, 2);
    let before = us.dump();
    us.insert(e).unwrap();
    assert!(us.pending().contains(&e));
    us.delete(e).unwrap();
    assert!(us.pending().is_empty());
    assert_eq!(us.dump(), before);
    assert!((0..=us.levels()).all(|i| us.d_at_least(i).is_empty()));
}

#[test]
fn batch_thresholds_widen() {
    let g = DynamicGraph::from_edges(220, disjoint_edges(100, 0)).unwrap();
    let k = 4;
    let mut us = UniformSparsifier::new(&g, UniformParams::new(0.5, 1.0, 0.2), k).unwrap();
    let plain = us.threshold(100);
    let mut last = None;
    for i in 1..=k {
        us.set_batch(i).unwrap();
        let t = us.threshold(100);
        if let Some(prev) = last {
            assert!(t > prev);
        }
        last = Some(t);
    }
    assert_eq!(last, Some(plain));
    assert_eq!(us.set_batch(2), Err(UniformError::BatchOrder { from: 4, to: 2 }));
    us.clear_batch();
    us.set_batch(1).unwrap();
}

#[test]
fn uniform_fm_generator() {
    let g = random_graph(30, 90, 4);
    let m = gen_uniform_fm(&g, 1.0, 1);
    let matched = Matching::from_edges(m.support());
    assert!(check_matching(&g, &matched));
    assert!(g.edges().all(|e| m.support().iter().any(|f| f.touches(e.u) || f.touches(e.v))));

    let path = DynamicGraph::from_edges(5, (0..4).map(|i| Edge::of(i, i + 1))).unwrap();
    assert_eq!(gen_uniform_fm(&path, 0.5, 9).len(), 4);

    for seed in 0..100 {
        let g = random_graph(25, 120, seed);
        let fm = gen_uniform_fm(&g, 0.2, seed);
        assert!(fm.is_valid(25), "seed {seed}");
        let d = degrees(25, &fm.support());
        assert!(g.edges().filter(|e| !fm.support().contains(e)).all(|e| d[e.u] == 5 || d[e.v] == 5));
    }
}

fn run_trace(k: usize, seed: u64) {
    let n = 40;
    let params = UniformParams::new(1.0 / 8.0, 1.0, 0.25);
    let stream = capped_stream(n, 500, 8, seed);
    let mut us = UniformSparsifier::new(&DynamicGraph::new(n), params, k).unwrap();
    for (t, ev) in stream.iter().enumerate() {
        if k > 1 {
            let i = 1 + (t * k / stream.len());
            if us.batch_index() != Some(i) {
                us.set_batch(i).unwrap();
            }
        }
        us.apply(ev).unwrap();
        let rep = us.report();
        assert!(rep.exact_ok(), "seed {seed} step {t}: {rep:?}");
        assert!(us.output_weights().iter().all(|(e, _)| us.input().has_edge(e)));
    }
}

#[test]
fn stepwise_invariants_plain_and_batch() {
    for seed in 0..4 {
        run_trace(1, seed);
        run_trace(4, seed);
    }
}

#[test]
fn journal_undo_restores_state() {
    let n = 30;
    let stream = capped_stream(n, 200, 4, 3);
    let params = UniformParams::new(0.25, 1.0, 0.2);
    let (pre, post) = stream.split_at(100);
    let mut us = UniformSparsifier::new(&DynamicGraph::new(n), params, 2).unwrap();
    for ev in pre {
        us.apply(ev).unwrap();
    }
    let snapshot = us.dump();
    let out = us.output().clone();
    us.enable_journal();
    us.set_batch(1).unwrap();
    for ev in post {
        us.apply(ev).unwrap();
    }
    for op in us.take_journal().into_iter().rev() {
        us.undo(op);
    }
    assert_eq!(us.dump(), snapshot);
    assert!(us.output().same_edges(&out));
}

#[test]
fn batch_instance_under_scheduler_replays_exactly() {
    let params = UniformParams::new(0.25, 1.0, 0.5);
    let n = 24;
    let k = 3;
    let g0 = DynamicGraph::new(n);
    let stream = capped_stream(n, 60, 4, 6);
    let mk = || BatchUniformMatcher::new(&g0, params, k).unwrap();
    let mut s = BatchScheduler::new(k, &g0, |_| mk()).unwrap();
    for ev in stream.iter().take(27) {
        let rep = s.step(*ev).unwrap();
        for &i in &rep.fresh {
            let inst = s.instance(i);
            assert!(inst.sparsifier().input().same_edges(s.graph()));
            let r = s.replay(i, mk);
            assert!(r.sparsifier().output().same_edges(inst.sparsifier().output()));
            assert_eq!(r.output(), inst.output());
            assert!(check_matching(inst.sparsifier().output(), inst.output()));
        }
    }
}
