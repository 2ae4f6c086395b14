use super::*;
use crate::gen::{erdos_renyi_dynamic, random_graph};
use crate::oracle::check_damaged_edcs;
use crate::scheduler::{BatchAlgorithm, BatchScheduler};

fn valid(g: &DynamicGraph, h: &DynamicGraph, b: EdcsBounds, w: &BTreeSet<VertexId>) -> bool {
    let r = check_damaged_edcs(g, h, b, Some(w), false).unwrap();
    if !r.is_valid() {
        eprintln!("{}", r.to_text());
    }
    r.is_valid()
}

#[test]
fn static_on_empty_graph() {
    let g = DynamicGraph::new(5);
    let b = static_build(&g, 4.0, 0.5, 0.5);
    assert_eq!(b.h.edge_count(), 0);
    assert!(b.witness.is_empty());
    assert_eq!(b.stats.iterations, 1);
}

#[test]
fn static_single_edge_is_kept() {
    let g = DynamicGraph::from_edges(2, [Edge::of(0, 1)]).unwrap();
    let b = static_build(&g, 2.0, 0.5, 1.0);
    assert!(b.h.has_edge(Edge::of(0, 1)));
    assert_eq!(b.h.edge_count(), 1);
}

#[test]
fn thresholds_switch_on_narrow_gap() {
    let wide = Thresholds::new(16.0, 0.25);
    assert!(!wide.narrow_gap);
    assert_eq!((wide.add_below, wide.remove_above), (14.0, 15.0));
    let narrow = Thresholds::new(8.0, 0.25);
    assert!(narrow.narrow_gap);
    assert_eq!((narrow.add_below, narrow.remove_above), (7.0, 8.0));
    assert_eq!(Thresholds::new(2.0, 0.5).remove_above, 2.0);
}

#[test]
fn iteration_bound_formula() {
    assert_eq!(BuildStats::iteration_bound(0.5, 0.5), 129);
}

#[test]
fn static_output_is_valid_and_resumable() {
    for seed in 0..20u64 {
        let g = random_graph(60, 400, seed);
        let (beta, lambda, delta) = (8.0, 0.25, 0.25);
        let b = static_build(&g, beta, lambda, delta);
        assert!(valid(&g, &b.h, EdcsBounds { beta, lambda, delta }, &b.witness), "seed {seed}");
        assert!(b.stats.iterations <= BuildStats::iteration_bound(lambda, delta));
        let mut sb = StaticBuilder::new(g.n(), beta, lambda, delta);
        let mut steps = 0;
        while !sb.step(&g) {
            steps += 1;
        }
        assert!(steps > 0);
        let (h, w, stats) = sb.into_parts();
        assert!(h.same_edges(&b.h));
        assert_eq!(w, b.witness);
        assert_eq!(stats, b.stats);
    }
}

#[test]
fn small_gap_leftovers_are_damaged() {
    // beta = 4, lambda = 1/8: a non-sparsifier edge of degree 3 can neither
    // be added nor meet the lower bound of 3.5
    let (beta, lambda, delta) = (4.0, 0.125, 0.5);
    for seed in 0..10u64 {
        let g = random_graph(40, 120, seed);
        let b = static_build(&g, beta, lambda, delta);
        assert!(g.edges().filter(|&e| !b.h.has_edge(e) && b.h.edge_degree(e) == 3).all(|e| b.witness.contains(&e.u) || b.witness.contains(&e.v)));
        assert!(valid(&g, &b.h, EdcsBounds { beta, lambda, delta }, &b.witness), "seed {seed}");
    }
}

#[test]
fn degenerate_params_need_override() {
    let g = DynamicGraph::new(64);
    let p = EdcsParams::new(16.0, 0.25, 0.25);
    assert_eq!(p.rebuild_period(64), 1);
    let p = EdcsParams::new(8.0, 0.25, 0.25);
    assert_eq!(DamagedEdcs::init(&g, p, 1).unwrap_err(), EdcsError::DegenerateParams { alpha: 0 });
    let s = DamagedEdcs::init(&g, p.degenerate_ok(), 1).unwrap();
    assert_eq!(s.threshold(), 1);
}

#[test]
fn strict_mode_validation() {
    let s = StrictMode::new(0.25);
    let lambda = 0.25 / 32.0;
    let need = s.min_beta(lambda);
    assert!(EdcsParams::new(need.ceil(), lambda, 0.5).with_strict(s).validate().is_ok());
    assert!(EdcsParams::new(need.ceil() - 1.0, lambda, 0.5).with_strict(s).validate().is_err());
    assert!(EdcsParams::new(need.ceil(), 0.01, 0.5).with_strict(s).validate().is_err());
    assert!(EdcsParams::new(1.0, 0.5, 0.5).validate().is_err());
    assert!(EdcsParams::new(4.0, 1.0, 0.5).validate().is_err());
}

#[test]
fn insertion_guard_arithmetic() {
    let p = EdcsParams::new(128.0, 0.5, 0.5);
    // cutoff 4, so fewer than 3 inserted edges per endpoint
    assert!(insertion_allowed(&p, 2, 126));
    assert!(!insertion_allowed(&p, 2, 127));
    assert!(!insertion_allowed(&p, 3, 0));
}

fn params() -> EdcsParams {
    EdcsParams::new(16.0, 0.5, 0.5)
}

#[test]
fn delete_removes_from_sparsifier() {
    let mut g = random_graph(64, 300, 3);
    let mut s = DamagedEdcs::init(&g, params(), 1).unwrap();
    let e = s.sparsifier().edges().next().unwrap();
    g.delete(e).unwrap();
    s.delete(&g, e);
    assert!(!s.sparsifier().has_edge(e));
    assert!(s.deleted_since_rebuild().contains(&e));
}

#[test]
fn insert_is_recorded() {
    let mut g = random_graph(64, 300, 4);
    let mut s = DamagedEdcs::init(&g, params(), 1).unwrap();
    let e = (1..64).map(|v| Edge::of(0, v)).find(|&e| !g.has_edge(e)).unwrap();
    g.insert(e).unwrap();
    s.insert(&g, e);
    assert!(s.inserted_since_rebuild().contains(&e));
}

#[test]
fn rebuild_after_alpha_updates_matches_static() {
    let p = params();
    let n = 64;
    let stream = erdos_renyi_dynamic(n, 200, 9);
    let mut g = DynamicGraph::new(n);
    let mut s = DamagedEdcs::init(&g, p, 1).unwrap();
    let alpha = s.alpha();
    assert_eq!(alpha, 4);
    assert_eq!(s.witness(), *s.base_witness());
    for (t, ev) in stream.iter().enumerate() {
        g.apply(ev).unwrap();
        s.apply(&g, ev);
        assert_eq!(s.rebuilds(), 1 + (t + 1) / alpha);
        if (t + 1) % alpha == 0 {
            let (b, l, d) = p.rebuild_params();
            let fresh = static_build(&g, b, l, d);
            assert!(s.sparsifier().same_edges(&fresh.h));
            assert_eq!(s.witness(), fresh.witness);
        }
    }
}

#[test]
fn deletions_at_a_vertex_enter_witness() {
    // beta lambda / 16 = 2
    let p = EdcsParams::new(64.0, 0.5, 0.5);
    let n = 64;
    let mut g = DynamicGraph::from_edges(n, (1..10).map(|v| Edge::of(0, v))).unwrap();
    let mut s = DamagedEdcs::init(&g, p, 1).unwrap();
    assert!(s.alpha() > 2);
    for v in 1..3 {
        assert!(!s.witness().contains(&0));
        g.delete(Edge::of(0, v)).unwrap();
        s.delete(&g, Edge::of(0, v));
    }
    assert!(s.witness().contains(&0));
}

#[test]
fn stepwise_valid_with_witness() {
    let p = params();
    let n = 64;
    for seed in 0..4u64 {
        let stream = erdos_renyi_dynamic(n, 500, seed);
        let mut g = DynamicGraph::new(n);
        let mut s = DamagedEdcs::init(&g, p, 1).unwrap();
        for ev in &stream {
            g.apply(ev).unwrap();
            s.apply(&g, ev);
            assert!(valid(&g, s.sparsifier(), p.bounds(), &s.witness()));
        }
    }
}

#[test]
fn batch_thresholds() {
    let g = DynamicGraph::new(64);
    let p = EdcsParams::new(32.0, 0.5, 0.5);
    let mut s = DamagedEdcs::init(&g, p, 4).unwrap();
    assert_eq!(s.alpha(), 8);
    assert_eq!(s.threshold(), 8);
    s.set_batch(1).unwrap();
    assert_eq!(s.threshold(), 2);
    s.set_batch(4).unwrap();
    assert_eq!(s.threshold(), 8);
    let mut s = DamagedEdcs::init(&g, p, 4).unwrap();
    s.set_batch(2).unwrap();
    assert_eq!(s.set_batch(1), Err(EdcsError::BatchOrder { from: 2, to: 1 }));
}

#[test]
fn journal_undo_restores_state() {
    let p = params();
    let n = 64;
    let stream = erdos_renyi_dynamic(n, 300, 11);
    let mut g = DynamicGraph::new(n);
    for ev in &stream[..100] {
        g.apply(ev).unwrap();
    }
    let mut s = DamagedEdcs::init(&g, p, 1).unwrap();
    let before = s.clone();
    s.enable_journal();
    for ev in &stream[100..] {
        g.apply(ev).unwrap();
        s.apply(&g, ev);
    }
    assert!(s.rebuilds() > before.rebuilds());
    let ops = s.take_journal();
    for op in ops.into_iter().rev() {
        s.undo(op);
    }
    assert!(s.sparsifier().same_edges(before.sparsifier()));
    assert_eq!(s.inserted_since_rebuild(), before.inserted_since_rebuild());
    assert_eq!(s.deleted_since_rebuild(), before.deleted_since_rebuild());
    assert_eq!(s.witness(), before.witness());
    assert_eq!(s.updates_since_rebuild(), before.updates_since_rebuild());
    assert_eq!(s.rebuilds(), before.rebuilds());
}

#[test]
fn snapshot_dump_format() {
    let h = DynamicGraph::from_edges(4, [Edge::of(0, 1), Edge::of(2, 3)]).unwrap();
    let w: BTreeSet<VertexId> = [1, 3].into_iter().collect();
    let text = dump_snapshot(&h, &w);
    assert!(text.ends_with("D: 1 3\n"));
    let (n, evs) = crate::graph::parse_stream(text.strip_suffix("D: 1 3\n").unwrap()).unwrap();
    assert_eq!((n, evs.len()), (4, 2));
}

#[test]
fn batch_instance_under_scheduler_replays_exactly() {
    let p = EdcsParams::new(32.0, 0.5, 0.5);
    let n = 48;
    let k = 3;
    let g0 = DynamicGraph::new(n);
    let stream = erdos_renyi_dynamic(n, 27, 5);
    let mk = || BatchEdcsMatcher::new(&g0, p, k).unwrap();
    let mut s = BatchScheduler::new(k, &g0, |_| mk()).unwrap();
    for ev in &stream {
        let rep = s.step(*ev).unwrap();
        for &i in &rep.fresh {
            let inst = s.instance(i);
            assert!(inst.graph().same_edges(s.graph()));
            let r = s.replay(i, mk);
            assert!(r.edcs().sparsifier().same_edges(inst.edcs().sparsifier()));
            assert_eq!(r.output(), inst.output());
            let w = inst.edcs().witness();
            assert!(valid(s.graph(), inst.edcs().sparsifier(), p.bounds(), &w));
        }
    }
}
