use std::collections::BTreeSet;

use proptest::prelude::*;

use dynmatch::edcs::{static_build, DamagedEdcs, EdcsParams};
use dynmatch::graph::{parse_stream, write_stream};
use dynmatch::oracle::{check_damaged_edcs, check_matching, max_matching_exact, EdcsBounds};
use dynmatch::uniform::degree_split;
use dynmatch::{DynamicGraph, Edge, UpdateEvent};

fn edge_set(n: usize, max: usize) -> impl Strategy<Value = BTreeSet<Edge>> {
    prop::collection::btree_set((0..n, 0..n).prop_filter("loop", |(a, b)| a != b).prop_map(|(a, b)| Edge::of(a, b)), 0..max)
}

/// Toggle stream: each pair is inserted if absent, deleted otherwise.
fn toggles(n: usize, len: usize) -> impl Strategy<Value = Vec<UpdateEvent>> {
    prop::collection::vec((0..n, 0..n).prop_filter("loop", |(a, b)| a != b), 0..len).prop_map(move |pairs| {
        let mut g = DynamicGraph::new(n);
        pairs
            .into_iter()
            .map(|(a, b)| {
                let e = Edge::of(a, b);
                let ev = if g.has_edge(e) { UpdateEvent::delete(e) } else { UpdateEvent::insert(e) };
                g.apply(&ev).unwrap();
                ev
            })
            .collect()
    })
}

fn greedy_size(g: &DynamicGraph) -> usize {
    let mut used = vec![false; g.n()];
    let mut size = 0;
    for e in g.edges() {
        if !used[e.u] && !used[e.v] {
            used[e.u] = true;
            used[e.v] = true;
            size += 1;
        }
    }
    size
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn split_halves_every_degree(edges in edge_set(16, 60)) {
        let out = degree_split(&edges);
        prop_assert!(out.is_subset(&edges));
        for v in 0..16 {
            let din = edges.iter().filter(|e| e.touches(v)).count() as i64;
            let dout = out.iter().filter(|e| e.touches(v)).count() as i64;
            prop_assert!((2 * dout - din).abs() <= 2);
        }
    }

    #[test]
    fn exact_matching_is_valid_and_beats_greedy(edges in edge_set(14, 40)) {
        let g = DynamicGraph::from_edges(14, edges).unwrap();
        let m = max_matching_exact(&g);
        prop_assert!(check_matching(&g, &m));
        prop_assert!(m.len() >= greedy_size(&g));
        prop_assert!(m.len() <= 2 * greedy_size(&g));
    }

    #[test]
    fn static_build_is_valid(edges in edge_set(30, 150)) {
        let g = DynamicGraph::from_edges(30, edges).unwrap();
        let (beta, lambda, delta) = (8.0, 0.25, 0.5);
        let b = static_build(&g, beta, lambda, delta);
        let rep = check_damaged_edcs(&g, &b.h, EdcsBounds { beta, lambda, delta }, Some(&b.witness), false).unwrap();
        prop_assert!(rep.is_valid(), "{}", rep.to_text());
    }

    #[test]
    fn dynamic_edcs_stays_valid(stream in toggles(64, 200)) {
        let params = EdcsParams::new(16.0, 0.5, 0.5);
        let mut g = DynamicGraph::new(64);
        let mut edcs = DamagedEdcs::init(&g, params, 1).unwrap();
        for ev in &stream {
            g.apply(ev).unwrap();
            edcs.apply(&g, ev);
            let w = edcs.witness();
            let rep = check_damaged_edcs(&g, edcs.sparsifier(), params.bounds(), Some(&w), false).unwrap();
            prop_assert!(rep.is_valid(), "{}", rep.to_text());
        }
    }

    #[test]
    fn stream_text_round_trips(stream in toggles(20, 80)) {
        let text = write_stream(20, &stream);
        prop_assert_eq!(parse_stream(&text).unwrap(), (20, stream));
    }
}
