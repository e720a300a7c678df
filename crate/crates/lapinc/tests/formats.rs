use std::fmt::Write as _;

use proptest::prelude::*;

use lapinc::artifacts::{load_checkpoint, read_basis, save_checkpoint, write_basis, BasisFile, ToleranceReport};
use lapinc::formats::{edge_list_string, load_edge_list, load_matrix_market, EdgeListOptions};
use lapinc_core::eigensolve::{extend_to, SolverConfig};
use lapinc_core::{build_laplacian, Graph, GraphBuilder, NoClock, LaplacianKind, Session, SessionConfig};

fn edge_set(g: &Graph) -> Vec<(u64, u64, u64)> {
    let ids = g.node_ids();
    g.edges().map(|(i, j, w)| (ids[i], ids[j], w.to_bits())).collect()
}

/// Sparse ids, weights spanning many magnitudes, optional isolated nodes.
fn id_graph() -> impl Strategy<Value = Graph> {
    (
        prop::collection::vec((0u64..50, 0u64..50, 1e-6f64..1e6), 1..60),
        prop::collection::vec(50u64..60, 0..3),
        1u64..1_000_000,
    )
        .prop_map(|(edges, isolated, stride)| {
            let mut b = GraphBuilder::new();
            for (u, v, w) in edges {
                if u != v {
                    b.add_edge(u * stride, v * stride, w).unwrap();
                }
            }
            for id in isolated {
                b.add_node(id * stride);
            }
            b.build()
        })
}

/// Connected weighted graph on `n` nodes: a path plus chords.
fn connected(n: usize, chords: &[(usize, usize, f64)]) -> Graph {
    let mut edges: Vec<(usize, usize, f64)> = (0..n - 1).map(|i| (i, i + 1, 1.0 + i as f64 / 7.0)).collect();
    edges.extend(chords.iter().filter(|(u, v, _)| u != v && u.max(v) < &n).copied());
    Graph::from_edges(n, &edges).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn edge_list_round_trip_is_bit_exact(g in id_graph()) {
        let text = edge_list_string(&g);
        let back = load_edge_list(text.as_bytes(), EdgeListOptions::default()).unwrap();
        prop_assert_eq!(back.node_ids(), g.node_ids());
        prop_assert_eq!(edge_set(&back), edge_set(&g));
        prop_assert_eq!(edge_list_string(&back), text);
    }

    #[test]
    fn matrix_market_agrees_with_edge_list(
        n in 2usize..20,
        chords in prop::collection::vec((0usize..20, 0usize..20, 0.01f64..10.0), 0..30),
    ) {
        let g = connected(n, &chords);
        let mut mtx = String::from("%%MatrixMarket matrix coordinate real symmetric\n");
        let edges: Vec<_> = g.edges().collect();
        let _ = writeln!(mtx, "{n} {n} {}", edges.len());
        let mut lines = String::new();
        for &(i, j, w) in &edges {
            let _ = writeln!(mtx, "{} {} {w}", j + 1, i + 1);
            let _ = writeln!(lines, "{} {} {w}", i + 1, j + 1);
        }
        let a = load_matrix_market(mtx.as_bytes()).unwrap();
        let b = load_edge_list(lines.as_bytes(), EdgeListOptions::default()).unwrap();
        prop_assert_eq!(a.node_ids(), b.node_ids());
        prop_assert_eq!(edge_set(&a), edge_set(&b));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn basis_file_round_trip(
        n in 3usize..15,
        chords in prop::collection::vec((0usize..15, 0usize..15, 0.1f64..3.0), 0..20),
        normalized: bool,
    ) {
        let kind = if normalized { LaplacianKind::Normalized } else { LaplacianKind::Unnormalized };
        let g = connected(n, &chords);
        let l = build_laplacian(&g, kind).unwrap();
        let cfg = SolverConfig::lanczos();
        let basis = extend_to(&l, &l.connected_components(), n.min(4), &cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("basis.json");
        write_basis(&path, &BasisFile::new(&basis, ToleranceReport::measure(&basis, &l, cfg.tol))).unwrap();
        prop_assert_eq!(read_basis(&path).unwrap(), basis);
    }

    #[test]
    fn checkpoint_resume_continues_identically(
        n in 6usize..16,
        chords in prop::collection::vec((0usize..16, 0usize..16, 0.1f64..3.0), 0..20),
        seed: u64,
        steps in 1usize..3,
    ) {
        let mut config = SessionConfig::default();
        config.kmeans.seed = seed;
        config.solver.seed = seed;
        let mut live = Session::new(connected(n, &chords), config).unwrap();
        for _ in 0..steps {
            live.step(&NoClock).unwrap();
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.json");
        save_checkpoint(&path, &live.snapshot()).unwrap();
        let mut resumed = Session::restore(load_checkpoint(&path).unwrap()).unwrap();
        prop_assert_eq!(resumed.history(), live.history());
        live.step(&NoClock).unwrap();
        resumed.step(&NoClock).unwrap();
        prop_assert_eq!(resumed.history(), live.history());
        prop_assert_eq!(resumed.basis(), live.basis());
    }
}
