use proptest::prelude::*;

use qicd::detect::{communities_connected, leiden, leiden_refine, DetectorConfig};
use qicd::engine::{run_qicd, PerturbationKind, QicdConfig};
use qicd::generate::degree_preserving_rewire;
use qicd::graph::{load_edge_list, DuplicatePolicy, Graph};
use qicd::partition::{aggregate, delta_q_move, modularity, Partition, Target};
use qicd::sampling::{propose_partition, sample_haar_weights, substream};

/// Random simple weighted graph on `2..=n_max` nodes with at least one edge.
fn graph(n_max: usize) -> impl Strategy<Value = (usize, Vec<(usize, usize, f64)>)> {
    (2..=n_max).prop_flat_map(|n| {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
        let len = pairs.len();
        (
            Just(n),
            Just(pairs),
            prop::collection::vec(prop::option::weighted(0.4, 0.1f64..5.0), len),
        )
            .prop_filter_map("needs an edge", |(n, pairs, ws)| {
                let edges: Vec<_> = pairs
                    .iter()
                    .zip(ws)
                    .filter_map(|(&(u, v), w)| w.map(|w| (u, v, w)))
                    .collect();
                (!edges.is_empty()).then_some((n, edges))
            })
    })
}

fn graph_and_labels(n_max: usize) -> impl Strategy<Value = (usize, Vec<(usize, usize, f64)>, Vec<usize>)> {
    graph(n_max).prop_flat_map(|(n, edges)| {
        let labels = prop::collection::vec(0..n, n);
        (Just(n), Just(edges), labels)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn move_gain_matches_recompute((n, edges, labels) in graph_and_labels(12), node in 0usize..12, pick in 0usize..13) {
        let g = Graph::from_edges(n, &edges).unwrap();
        let p = Partition::from_labels(&g, &labels).unwrap();
        let node = node % n;
        let c = p.community_count();
        let target = if pick % (c + 1) == c { Target::NewSingleton } else { Target::Community(pick % (c + 1)) };
        let dq = delta_q_move(&g, &p, node, target).unwrap();
        let moved = p.with_move(&g, node, target).unwrap();
        let expect = modularity(&g, &moved).unwrap() - modularity(&g, &p).unwrap();
        prop_assert!((dq - expect).abs() < 1e-12, "{} vs {}", dq, expect);
    }

    #[test]
    fn relabelling_communities_keeps_q((n, edges, labels) in graph_and_labels(12), shift in 1usize..50) {
        let g = Graph::from_edges(n, &edges).unwrap();
        let relabelled: Vec<usize> = labels.iter().map(|&c| (c * 7 + shift) % 97).collect();
        let a = modularity(&g, &Partition::from_labels(&g, &labels).unwrap()).unwrap();
        let b = modularity(&g, &Partition::from_labels(&g, &relabelled).unwrap()).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn scaling_weights_keeps_q((n, edges, labels) in graph_and_labels(12), factor in 0.01f64..100.0) {
        let g = Graph::from_edges(n, &edges).unwrap();
        let scaled: Vec<_> = edges.iter().map(|&(u, v, w)| (u, v, w * factor)).collect();
        let h = Graph::from_edges(n, &scaled).unwrap();
        let a = modularity(&g, &Partition::from_labels(&g, &labels).unwrap()).unwrap();
        let b = modularity(&h, &Partition::from_labels(&h, &labels).unwrap()).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn q_stays_in_range((n, edges, labels) in graph_and_labels(12)) {
        let g = Graph::from_edges(n, &edges).unwrap();
        let q = modularity(&g, &Partition::from_labels(&g, &labels).unwrap()).unwrap();
        prop_assert!((-1.0..=1.0).contains(&q));
        prop_assert!(modularity(&g, &Partition::whole(&g)).unwrap().abs() < 1e-12);
    }

    #[test]
    fn aggregation_preserves_q((n, edges, labels) in graph_and_labels(12)) {
        let g = Graph::from_edges(n, &edges).unwrap();
        let p = Partition::from_labels(&g, &labels).unwrap();
        let agg = aggregate(&g, &p);
        let coarse = Partition::singletons(&agg);
        let a = modularity(&g, &p).unwrap();
        let b = modularity(&agg, &coarse).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn edge_list_round_trips((n, edges) in graph(15)) {
        let g = Graph::from_edges(n, &edges).unwrap();
        let text = g.to_edge_list();
        let back = load_edge_list(text.as_bytes(), DuplicatePolicy::Reject).unwrap();
        prop_assert_eq!(back.node_count(), n);
        let a: Vec<_> = g.edges().collect();
        let b: Vec<_> = back.edges().collect();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn refine_output_is_connected((n, edges, labels) in graph_and_labels(15)) {
        let g = Graph::from_edges(n, &edges).unwrap();
        let p = Partition::from_labels(&g, &labels).unwrap();
        let r = leiden_refine(&g, &p);
        prop_assert!(communities_connected(&g, &r));
        // refinement only splits
        for u in 0..n {
            for v in 0..n {
                if r.label(u) == r.label(v) {
                    prop_assert_eq!(p.label(u), p.label(v));
                }
            }
        }
    }

    #[test]
    fn leiden_is_connected_and_beats_singletons((n, edges) in graph(15), seed in any::<u64>()) {
        let g = Graph::from_edges(n, &edges).unwrap();
        let p = leiden(&g, &DetectorConfig::default().with_seed(seed)).unwrap();
        prop_assert!(communities_connected(&g, &p));
        let q = modularity(&g, &p).unwrap();
        prop_assert!(q >= modularity(&g, &Partition::singletons(&g)).unwrap() - 1e-12);
    }

    #[test]
    fn rewire_keeps_degree_sequence((n, edges) in graph(15), seed in any::<u64>()) {
        let g = Graph::from_edges(n, &edges).unwrap();
        prop_assume!(g.edge_count() >= 2);
        let h = degree_preserving_rewire(&g, 5.0, seed).unwrap();
        for u in 0..n {
            prop_assert_eq!(g.degree(u), h.degree(u));
        }
        prop_assert_eq!(g.edge_count(), h.edge_count());
    }

    #[test]
    fn proposal_labels_are_seeds_or_unreached((n, edges) in graph(15), k in 1usize..15, seed in any::<u64>()) {
        let g = Graph::from_edges(n, &edges).unwrap();
        let k = 1 + (k - 1) % n;
        let w = sample_haar_weights(n, &mut substream(seed, 0)).unwrap();
        let p = propose_partition(&g, &w, k).unwrap();
        prop_assert!(p.community_count() >= k);
        prop_assert!(p.community_count() <= n);
        let all = propose_partition(&g, &w, n).unwrap();
        prop_assert_eq!(all.community_count(), n);
    }

    #[test]
    fn qicd_never_loses_to_its_start((n, edges) in graph(12), seed in any::<u64>(), kind in 0usize..5, rba in any::<bool>()) {
        let g = Graph::from_edges(n, &edges).unwrap();
        let kinds = [PerturbationKind::Pt, PerturbationKind::Haar, PerturbationKind::HuOnly, PerturbationKind::PtHu, PerturbationKind::HaarHu];
        let cfg = QicdConfig { kind: kinds[kind], refine_before_accept: rba, ..QicdConfig::default() }.with_seed(seed);
        let r = run_qicd(&g, &cfg).unwrap();
        prop_assert!(r.q_star >= r.q_initial);
        prop_assert!(r.mrg >= 0.0);
        let best = r.best_trace();
        prop_assert!(best.windows(2).all(|w| w[1] >= w[0]));
    }
}
