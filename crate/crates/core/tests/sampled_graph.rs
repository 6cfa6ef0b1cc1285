mod common;

use modembed::generators;
use modembed::graph::{trace_objective, CovarianceOperator};
use modembed::{Error, SampledGraph, SoftAssignment};
use ndarray::{Array1, Array2};
use proptest::prelude::*;

/// Independent construction of `P` and `Q` from a weighted edge list.
fn dense_q(n: usize, edges: &[(usize, usize, f64)]) -> (Array2<f64>, Array2<f64>) {
    let mut p = Array2::<f64>::zeros((n, n));
    for &(u, w, x) in edges {
        p[[u, w]] += x;
        p[[w, u]] += x;
    }
    let total = p.sum();
    p /= total;
    let marginal: Array1<f64> = p.sum_axis(ndarray::Axis(1));
    let outer = Array2::from_shape_fn((n, n), |(u, w)| marginal[u] * marginal[w]);
    let q = &p - &outer;
    (p, q)
}

#[test]
fn modularity_matches_dense_construction() {
    let edges = [(0, 1, 2.0), (1, 2, 1.0), (2, 0, 0.5), (2, 3, 3.0), (3, 3, 1.0), (1, 2, 1.0)];
    let g = SampledGraph::from_edges(4, &edges).unwrap();
    let (p, q) = dense_q(4, &edges);
    for u in 0..4 {
        for w in 0..4 {
            assert!((g.prob(u, w) - p[[u, w]]).abs() < 1e-15);
        }
    }
    let full = g.modularity().with_diag_zeroed(false);
    assert!(common::max_abs(&full.to_dense(), &q) < 1e-15);
    let zeroed = g.modularity().with_diag_zeroed(true).to_dense();
    for u in 0..4 {
        assert_eq!(zeroed[[u, u]], 0.0);
        assert!((full.self_covariance(u) - q[[u, u]]).abs() < 1e-15);
    }
}

#[test]
fn karate_has_expected_size_and_marginals() {
    let g = generators::karate();
    assert_eq!(g.n(), 34);
    assert_eq!(g.edges().len(), 78);
    // Node 33 has degree 17 out of 2·78 endpoint slots.
    assert!((g.marginal()[33] - 17.0 / 156.0).abs() < 1e-15);
}

#[test]
fn partition_modularity_equals_indicator_trace() {
    let g = generators::karate();
    let q = g.modularity().with_diag_zeroed(false);
    let factions = generators::karate_factions();
    let h = SoftAssignment::from_labels(&factions, 2).unwrap();
    let trace = trace_objective(&q, h.matrix()).unwrap();
    assert!((q.partition_modularity(&factions).unwrap() - trace).abs() < 1e-14);
    // Reference value for the observed split, computed with networkx.
    assert!((trace - 0.358_234_714_003_944_8).abs() < 1e-12);
}

#[test]
fn from_similarity_normalizes_matrix() {
    let s = common::random_similarity(12, 4);
    let g = SampledGraph::from_similarity(s.view()).unwrap();
    let total = s.sum();
    for u in 0..12 {
        for w in 0..12 {
            assert!((g.prob(u, w) - s[[u, w]] / total).abs() < 1e-15);
        }
    }
}

#[test]
fn rejects_bad_input() {
    assert!(matches!(SampledGraph::from_edges(3, &[(0, 5, 1.0)]), Err(Error::NodeOutOfRange { .. })));
    assert!(SampledGraph::from_edges(3, &[(0, 1, -1.0)]).is_err());
    assert!(SampledGraph::from_edges(3, &[]).is_err());
    assert!(SampledGraph::from_similarity(ndarray::array![[0.0, f64::NAN], [1.0, 0.0]].view()).is_err());
}

#[test]
fn asymmetric_similarity_is_symmetrized() {
    let g = SampledGraph::from_similarity(ndarray::array![[0.0, 1.0], [0.5, 0.0]].view()).unwrap();
    assert_eq!(g.prob(0, 1), g.prob(1, 0));
    assert!((g.total_mass() - 1.0).abs() < 1e-15);
}

#[test]
fn string_labels_keep_first_appearance_order() {
    let g = SampledGraph::from_edge_list([("b", "a", 1.0), ("a", "c", 1.0)]).unwrap();
    assert_eq!(g.labels(), ["b", "a", "c"]);
    assert_eq!(g.index_of("c"), Some(2));
    assert_eq!(g.index_of("z"), None);
}

fn edge_strategy() -> impl Strategy<Value = (usize, Vec<(usize, usize, f64)>)> {
    (2usize..25).prop_flat_map(|n| {
        let edge = (0..n, 0..n, 0.01f64..10.0);
        (Just(n), prop::collection::vec(edge, 1..80))
    })
}

proptest! {
    #[test]
    fn mass_is_one_and_rows_sum_to_zero((n, edges) in edge_strategy()) {
        let g = SampledGraph::from_edges(n, &edges).unwrap();
        prop_assert!((g.total_mass() - 1.0).abs() <= 1e-12);
        for zeroed in [true, false] {
            let q = g.modularity().with_diag_zeroed(zeroed);
            let dense = q.to_dense();
            for u in 0..n {
                if !zeroed {
                    prop_assert!(dense.row(u).sum().abs() <= 1e-12);
                }
                for w in 0..n {
                    prop_assert_eq!(dense[[u, w]], dense[[w, u]]);
                }
            }
        }
    }

    #[test]
    fn apply_matches_dense_product((n, edges) in edge_strategy(), k in 1usize..5, seed in 0u64..1000) {
        let g = SampledGraph::from_edges(n, &edges).unwrap();
        let h = Array2::from_shape_fn((n, k), |(u, c)| ((u * 31 + c * 7) as u64 ^ seed) as f64 % 13.0 - 6.0);
        for zeroed in [true, false] {
            let q = g.modularity().with_diag_zeroed(zeroed);
            let diff = common::max_abs(&q.apply(h.view()).unwrap(), &q.to_dense().dot(&h));
            prop_assert!(diff <= 1e-12);
        }
    }

    #[test]
    fn radius_bound_dominates_spectrum((n, edges) in edge_strategy()) {
        let g = SampledGraph::from_edges(n, &edges).unwrap();
        let q = g.modularity().with_diag_zeroed(false);
        let eig = modembed::linalg::symmetric_eigen(q.to_dense().view());
        let radius = eig.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        prop_assert!(radius <= q.spectral_radius_bound() + 1e-12);
    }
}
