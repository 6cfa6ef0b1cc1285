mod common;

use modembed::dimred::{
    self, center, distance_correlation, embed_lift, embed_lift_with, gram_modularity, principal_components,
    random_orthonormal_rows, weight_iteration, weights_from_assignment, PointCloud, ReduceConfig, ReduceMethod,
    SELECT_TOL,
};
use modembed::generators;
use modembed::graph::CovarianceOperator;
use modembed::linalg::symmetric_eigen;
use modembed::Error;
use ndarray::{array, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn distances(x: ndarray::ArrayView2<f64>) -> Array2<f64> {
    let n = x.nrows();
    Array2::from_shape_fn((n, n), |(i, j)| {
        let d = &x.row(i) - &x.row(j);
        d.dot(&d).sqrt()
    })
}

fn gaussian(n: usize, d: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_fn((n, d), |_| rng.sample(StandardNormal))
}

#[test]
fn centering_examples() {
    let c = center(array![[1.0, 0.0], [3.0, 0.0]].view());
    assert_eq!(c.coords(), array![[-1.0, 0.0], [1.0, 0.0]]);
    assert!(c.is_centered());
    assert_eq!(c.center().coords(), c.coords());
    assert_eq!(center(array![[4.0, -2.0]].view()).coords(), array![[0.0, 0.0]]);
}

#[test]
fn lifting_preserves_geometry() {
    let circle = Array2::from_shape_fn((16, 2), |(i, j)| {
        let t = i as f64 * std::f64::consts::TAU / 16.0;
        if j == 0 {
            t.cos()
        } else {
            t.sin()
        }
    });
    let cloud = PointCloud::new(circle);
    let lifted = embed_lift(&cloud, 30, 3).unwrap();
    assert_eq!(lifted.dim(), 30);
    assert!(common::max_abs(&distances(cloud.coords()), &distances(lifted.coords())) < 1e-10);
    let gram = cloud.coords().dot(&cloud.coords().t());
    assert!(common::max_abs(&gram, &lifted.coords().dot(&lifted.coords().t())) < 1e-10);

    let omega = random_orthonormal_rows(2, 30, 3).unwrap();
    assert!(common::max_abs(&omega.dot(&omega.t()), &Array2::eye(2)) < 1e-12);
    let identity = embed_lift_with(&cloud, Array2::eye(2).view()).unwrap();
    assert_eq!(identity.coords(), cloud.coords());
    assert!(matches!(embed_lift(&cloud, 1, 0), Err(Error::LiftDimension { .. })));
}

#[test]
fn gram_operator_matches_dense() {
    let cloud = center(gaussian(10, 3, 1).view());
    let op = gram_modularity(&cloud).unwrap();
    let dense = cloud.coords().dot(&cloud.coords().t());
    assert!(common::max_abs(&op.to_dense(), &dense) < 1e-12);
    let v = gaussian(10, 2, 2);
    assert!(common::max_abs(&op.apply(v.view()).unwrap(), &dense.dot(&v)) < 1e-10);
    let ones = op.apply(Array2::ones((10, 1)).view()).unwrap();
    assert!(ones.iter().all(|x| x.abs() < 1e-9));
    let raw = PointCloud::new(gaussian(10, 3, 1) + 5.0);
    assert!(matches!(gram_modularity(&raw), Err(Error::NotCentered(_))));
}

#[test]
fn principal_components_match_gram_eigenpairs() {
    let cloud = center(gaussian(12, 4, 5).view());
    let (values, vectors) = principal_components(&cloud, 3).unwrap();
    let dense = cloud.coords().dot(&cloud.coords().t());
    let oracle = symmetric_eigen(dense.view());
    for j in 0..3 {
        assert!((values[j] - oracle.values[j]).abs() < 1e-10 * oracle.values[0]);
        assert!((vectors.column(j).dot(&oracle.vectors.column(j)).abs() - 1.0).abs() < 1e-10);
    }
    // Squared singular values via the n×n Jacobi route agree with the L×L route.
    let small = cloud.coords().t().dot(&cloud.coords());
    let sv = symmetric_eigen(small.view());
    assert!((sv.values[0] - values[0]).abs() < 1e-10 * values[0]);
}

#[test]
fn weights_of_a_hard_partition_are_cluster_sums() {
    let cloud = center(gaussian(9, 2, 4).view());
    let labels = [0, 1, 2, 0, 1, 2, 0, 1, 2];
    let h = modembed::SoftAssignment::from_labels(&labels, 3).unwrap();
    let w = weights_from_assignment(&cloud, h.matrix());
    for j in 0..3 {
        let sum = cloud
            .coords()
            .select(Axis(0), &[j, j + 3, j + 6])
            .sum_axis(Axis(0));
        assert!((&w.column(j) - &sum).iter().all(|d| d.abs() < 1e-15));
    }
    let single = weights_from_assignment(&cloud, Array2::ones((9, 1)).view());
    assert!(single.iter().all(|v| v.abs() < 1e-12));
}

#[test]
fn weight_iteration_finds_blob_centroids() {
    let mut points = gaussian(60, 3, 8);
    for u in 0..60 {
        let shift = if u < 30 { 8.0 } else { -8.0 };
        points[[u, 0]] += shift;
        points[[u, 1]] += shift / 2.0;
    }
    let cloud = center(points.view());
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let h0 = Array2::from_shape_fn((60, 2), |_| rng.random_range(0.4..0.6));
    let result = weight_iteration(&cloud, h0.view(), 0.01, 500).unwrap();
    assert!(result.converged);
    let sums = [
        cloud.coords().slice(ndarray::s![..30, ..]).sum_axis(Axis(0)),
        cloud.coords().slice(ndarray::s![30.., ..]).sum_axis(Axis(0)),
    ];
    for sum in &sums {
        let best = (0..2)
            .map(|j| {
                let w = result.weights.column(j);
                (w.dot(sum) / (w.dot(&w).sqrt() * sum.dot(sum).sqrt())).clamp(-1.0, 1.0).acos()
            })
            .fold(f64::INFINITY, f64::min);
        assert!(best.to_degrees() < 5.0, "angle {}", best.to_degrees());
    }
}

#[test]
fn circles_keep_two_directions() {
    let cloud = embed_lift(&PointCloud::new(generators::concentric_circles(200)), 30, 7).unwrap();
    let r = dimred::reduce(&cloud, &ReduceConfig::default()).unwrap();
    assert_eq!(r.assignment.ncols(), 6);
    assert!(r.residuals.iter().all(|&v| (-1e-12..=1.0 + 1e-12).contains(&v)));
    let selected = r.selected_columns(SELECT_TOL);
    assert_eq!(selected.len(), 2);
    let rebuilt = r.reconstruct(&cloud, &selected);
    assert!(distance_correlation(cloud.coords(), rebuilt.view()) >= 0.99);
}

#[test]
fn torus_keeps_three_directions() {
    let cloud = embed_lift(&PointCloud::new(generators::torus(200, 1.0, 0.5, 1)), 30, 7).unwrap();
    let r = dimred::reduce(&cloud, &ReduceConfig::default()).unwrap();
    let selected = r.selected_columns(SELECT_TOL);
    assert_eq!(selected.len(), 3);
    let rebuilt = r.reconstruct(&cloud, &selected);
    assert!(distance_correlation(cloud.coords(), rebuilt.view()) >= 0.99);
}

#[test]
fn reduce_centers_input_and_supports_sphere() {
    let shifted = PointCloud::new(generators::concentric_circles(100) + 3.0);
    let cfg = ReduceConfig {
        method: ReduceMethod::Sphere,
        k: 2,
        ..Default::default()
    };
    let r = dimred::reduce(&shifted, &cfg).unwrap();
    let too_many = ReduceConfig { k: 4, ..cfg.clone() };
    assert!(matches!(dimred::reduce(&shifted, &too_many), Err(Error::InvalidConfig(_))));
    assert!(r.embedding.orthonormality_error() < 1e-10);
    for w in r.trace.windows(2) {
        assert!(w[1] >= w[0] - 1e-10 * w[0].abs().max(1.0));
    }
}

#[test]
fn distance_correlation_is_scale_free() {
    let x = gaussian(20, 3, 9);
    assert!((distance_correlation(x.view(), (&x * 4.0).view()) - 1.0).abs() < 1e-12);
    let y = gaussian(20, 3, 10);
    assert!(distance_correlation(x.view(), y.view()) < 0.9);
}
