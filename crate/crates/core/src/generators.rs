//! Seeded synthetic graphs and point clouds.

use ndarray::Array2;
use rand::Rng;

use crate::error::Result;
use crate::graph::SampledGraph;

const KARATE: &[(usize, &[usize])] = &[
    (0, &[1, 2, 3, 4, 5, 6, 7, 8, 10, 11, 12, 13, 17, 19, 21, 31]),
    (1, &[2, 3, 7, 13, 17, 19, 21, 30]),
    (2, &[3, 7, 8, 9, 13, 27, 28, 32]),
    (3, &[7, 12, 13]),
    (4, &[6, 10]),
    (5, &[6, 10, 16]),
    (6, &[16]),
    (8, &[30, 32, 33]),
    (9, &[33]),
    (13, &[33]),
    (14, &[32, 33]),
    (15, &[32, 33]),
    (18, &[32, 33]),
    (19, &[33]),
    (20, &[32, 33]),
    (22, &[32, 33]),
    (23, &[25, 27, 29, 32, 33]),
    (24, &[25, 27, 31]),
    (25, &[31]),
    (26, &[29, 33]),
    (27, &[33]),
    (28, &[31, 33]),
    (29, &[32, 33]),
    (30, &[32, 33]),
    (31, &[32, 33]),
    (32, &[33]),
];

/// Zachary's karate club, 34 nodes and 78 unweighted edges, 0-indexed.
pub fn karate_edges() -> Vec<(usize, usize)> {
    KARATE
        .iter()
        .flat_map(|&(u, ws)| ws.iter().map(move |&w| (u, w)))
        .collect()
}

pub fn karate() -> SampledGraph {
    unweighted(34, &karate_edges()).expect("karate club is a valid graph")
}

/// The faction each karate-club member joined after the split.
pub fn karate_factions() -> Vec<usize> {
    let officer = [9, 14, 15, 18, 20, 22, 23, 24, 25, 26, 27, 28, 29, 30, 31, 32, 33];
    (0..34).map(|u| usize::from(officer.contains(&u))).collect()
}

pub fn unweighted(n: usize, edges: &[(usize, usize)]) -> Result<SampledGraph> {
    let weighted: Vec<_> = edges.iter().map(|&(u, w)| (u, w, 1.0)).collect();
    SampledGraph::from_edges(n, &weighted)
}

/// Two cliques of `clique` nodes joined by a path of `bridge` intermediate
/// nodes. Returns the edges and node count.
pub fn barbell_edges(clique: usize, bridge: usize) -> (usize, Vec<(usize, usize)>) {
    let n = 2 * clique + bridge;
    let mut edges = Vec::new();
    for offset in [0, clique + bridge] {
        for u in 0..clique {
            for w in (u + 1)..clique {
                edges.push((offset + u, offset + w));
            }
        }
    }
    let mut prev = clique - 1;
    for b in 0..bridge {
        edges.push((prev, clique + b));
        prev = clique + b;
    }
    edges.push((prev, clique + bridge));
    (n, edges)
}

pub fn barbell(clique: usize, bridge: usize) -> SampledGraph {
    let (n, edges) = barbell_edges(clique, bridge);
    unweighted(n, &edges).expect("barbell is a valid graph")
}

/// Two disjoint triangles.
pub fn two_triangles() -> SampledGraph {
    unweighted(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]).expect("valid graph")
}

pub fn erdos_renyi_edges(n: usize, p: f64, seed: u64) -> Vec<(usize, usize)> {
    let mut rng = crate::seeded_rng(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for w in (u + 1)..n {
            if rng.random::<f64>() < p {
                edges.push((u, w));
            }
        }
    }
    edges
}

pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Result<SampledGraph> {
    unweighted(n, &erdos_renyi_edges(n, p, seed))
}

/// Stochastic block model. Returns the edges and each node's block.
pub fn sbm_edges(sizes: &[usize], p_in: f64, p_out: f64, seed: u64) -> (Vec<(usize, usize)>, Vec<usize>) {
    let blocks: Vec<usize> = sizes.iter().enumerate().flat_map(|(b, &s)| std::iter::repeat_n(b, s)).collect();
    let mut rng = crate::seeded_rng(seed);
    let mut edges = Vec::new();
    for u in 0..blocks.len() {
        for w in (u + 1)..blocks.len() {
            let p = if blocks[u] == blocks[w] { p_in } else { p_out };
            if rng.random::<f64>() < p {
                edges.push((u, w));
            }
        }
    }
    (edges, blocks)
}

pub fn sbm(sizes: &[usize], p_in: f64, p_out: f64, seed: u64) -> Result<(SampledGraph, Vec<usize>)> {
    let (edges, blocks) = sbm_edges(sizes, p_in, p_out, seed);
    Ok((unweighted(blocks.len(), &edges)?, blocks))
}

/// Four blocks of `block` nodes; blocks `{0,1}` and `{2,3}` form two
/// superblocks. Edge probabilities are `p_block` inside a block, `p_super`
/// between sibling blocks and `p_out` across superblocks. Returns the graph
/// and each node's block.
pub fn hierarchical_sbm(
    block: usize,
    p_block: f64,
    p_super: f64,
    p_out: f64,
    seed: u64,
) -> Result<(SampledGraph, Vec<usize>)> {
    let blocks: Vec<usize> = (0..4).flat_map(|b| std::iter::repeat_n(b, block)).collect();
    let mut rng = crate::seeded_rng(seed);
    let mut edges = Vec::new();
    for u in 0..blocks.len() {
        for w in (u + 1)..blocks.len() {
            let (a, b) = (blocks[u], blocks[w]);
            let p = if a == b {
                p_block
            } else if a / 2 == b / 2 {
                p_super
            } else {
                p_out
            };
            if rng.random::<f64>() < p {
                edges.push((u, w));
            }
        }
    }
    Ok((unweighted(blocks.len(), &edges)?, blocks))
}

/// Preferential attachment: each new node links to `m` distinct existing
/// nodes chosen proportionally to degree, starting from a clique of `m + 1`.
pub fn barabasi_albert_edges(n: usize, m: usize, seed: u64) -> Vec<(usize, usize)> {
    let mut rng = crate::seeded_rng(seed);
    let mut edges = Vec::with_capacity(n * m);
    // every edge endpoint, so uniform sampling is degree-proportional
    let mut endpoints: Vec<usize> = Vec::with_capacity(2 * n * m);
    let start = (m + 1).min(n);
    for u in 0..start {
        for w in (u + 1)..start {
            edges.push((u, w));
            endpoints.extend([u, w]);
        }
    }
    let mut chosen = Vec::with_capacity(m);
    for u in start..n {
        chosen.clear();
        while chosen.len() < m {
            let w = endpoints[rng.random_range(0..endpoints.len())];
            if !chosen.contains(&w) {
                chosen.push(w);
            }
        }
        for &w in &chosen {
            edges.push((w, u));
            endpoints.extend([w, u]);
        }
    }
    edges
}

pub fn barabasi_albert(n: usize, m: usize, seed: u64) -> Result<SampledGraph> {
    unweighted(n, &barabasi_albert_edges(n, m, seed))
}

/// Two concentric circles of radii 1 and 0.5, `n / 2` evenly spaced points
/// each (the outer circle takes the odd point).
pub fn concentric_circles(n: usize) -> Array2<f64> {
    let outer = n - n / 2;
    let mut x = Array2::zeros((n, 2));
    for i in 0..n {
        let (r, j, m) = if i < outer { (1.0, i, outer) } else { (0.5, i - outer, n / 2) };
        let t = 2.0 * std::f64::consts::PI * j as f64 / m as f64;
        x[[i, 0]] = r * t.cos();
        x[[i, 1]] = r * t.sin();
    }
    x
}

/// `n` points on a torus with tube radius `r` around a circle of radius
/// `big_r`, angles drawn uniformly.
pub fn torus(n: usize, big_r: f64, r: f64, seed: u64) -> Array2<f64> {
    let mut rng = crate::seeded_rng(seed);
    let tau = 2.0 * std::f64::consts::PI;
    let mut x = Array2::zeros((n, 3));
    for i in 0..n {
        let a: f64 = rng.random::<f64>() * tau;
        let b: f64 = rng.random::<f64>() * tau;
        x[[i, 0]] = (big_r + r * b.cos()) * a.cos();
        x[[i, 1]] = (big_r + r * b.cos()) * a.sin();
        x[[i, 2]] = r * b.sin();
    }
    x
}
