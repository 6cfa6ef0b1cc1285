//! Link prediction from sphere embeddings, comparing pair feature layouts.
//! Node ids are shuffled so that id order says nothing about blocks.

use modembed::evaluate::{link_predict_with, LinkConfig, PairFeatures};
use modembed::generators;
use modembed::sphere::{sphere_embed, SphereConfig};
use rand::seq::SliceRandom;
use rand::SeedableRng;

fn main() -> modembed::Result<()> {
    let (edges, _) = generators::sbm_edges(&[80, 80], 0.4, 0.02, 4);
    let mut perm: Vec<usize> = (0..160).collect();
    perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(1));
    let edges: Vec<_> = edges.iter().map(|&(u, w)| (perm[u], perm[w])).collect();
    let graph = generators::unweighted(160, &edges)?;
    let config = SphereConfig {
        k: 4,
        beta: 1.0,
        ..Default::default()
    };
    let (_, embedding) = sphere_embed(&graph.modularity(), &config)?;
    for features in [PairFeatures::Concat, PairFeatures::ConcatProduct] {
        let cfg = LinkConfig {
            repetitions: 20,
            features,
            ..Default::default()
        };
        let summary = link_predict_with(&graph, embedding.matrix(), &cfg)?;
        println!("{features:?}: accuracy {:.4} ± {:.4}", summary.accuracy.mean, summary.accuracy.std);
    }
    Ok(())
}
