//! Multi-layer clustering of a two-level block model: four blocks merge into
//! two superblocks.

use modembed::cafe::multilayer;
use modembed::generators;
use modembed::ClusterConfig;

fn main() -> modembed::Result<()> {
    let (graph, blocks) = generators::hierarchical_sbm(25, 0.5, 0.2, 0.01, 1)?;
    let config = ClusterConfig {
        k: 8,
        seed: 1,
        ..Default::default()
    };
    for layer in multilayer(&graph.modularity(), &config)? {
        let mut by_block = vec![std::collections::BTreeSet::new(); 4];
        for (u, &c) in layer.membership.iter().enumerate() {
            by_block[blocks[u]].insert(c);
        }
        println!(
            "level {}: {} clusters, modularity {:.4}, clusters per planted block {:?}",
            layer.level, layer.c, layer.modularity, by_block
        );
    }
    Ok(())
}
