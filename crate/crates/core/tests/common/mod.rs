#![allow(dead_code)]

use modembed::generators;
use modembed::SampledGraph;
use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Two-block SBM whose node ids are randomly permuted, so that id order
/// carries no block information.
pub fn shuffled_sbm(sizes: &[usize], p_in: f64, p_out: f64, seed: u64, perm_seed: u64) -> (SampledGraph, Vec<usize>) {
    let (edges, blocks) = generators::sbm_edges(sizes, p_in, p_out, seed);
    let n = blocks.len();
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(perm_seed));
    let edges: Vec<_> = edges.iter().map(|&(u, w)| (perm[u], perm[w])).collect();
    let mut labels = vec![0; n];
    for u in 0..n {
        labels[perm[u]] = blocks[u];
    }
    (generators::unweighted(n, &edges).unwrap(), labels)
}

/// Every graph fixture used across the integration tests.
pub fn fixtures() -> Vec<(String, SampledGraph)> {
    let mut out = vec![
        ("karate".to_string(), generators::karate()),
        ("two_triangles".to_string(), generators::two_triangles()),
        ("barbell(5,1)".to_string(), generators::barbell(5, 1)),
        ("barbell(6,0)".to_string(), generators::barbell(6, 0)),
        ("hsbm(25)".to_string(), generators::hierarchical_sbm(25, 0.5, 0.2, 0.01, 1).unwrap().0),
        ("sbm(20,20)".to_string(), generators::sbm(&[20, 20], 0.5, 0.02, 3).unwrap().0),
        ("sbm(100,100)".to_string(), shuffled_sbm(&[100, 100], 0.9, 0.01, 5, 9).0),
        ("ba(300,3)".to_string(), generators::barabasi_albert(300, 3, 1).unwrap()),
    ];
    for seed in 0..20 {
        let n = 10 + (seed as usize * 7) % 51;
        out.push((format!("er({n},{seed})"), generators::erdos_renyi(n, 0.2, seed).unwrap()));
    }
    out
}

/// A random symmetric nonnegative similarity matrix with zero diagonal.
pub fn random_similarity(n: usize, seed: u64) -> Array2<f64> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = Array2::zeros((n, n));
    for u in 0..n {
        for w in (u + 1)..n {
            let v: f64 = if rng.random::<f64>() < 0.3 { rng.random() } else { 0.0 };
            s[[u, w]] = v;
            s[[w, u]] = v;
        }
    }
    s
}

pub fn max_abs(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    assert_eq!(a.dim(), b.dim());
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
