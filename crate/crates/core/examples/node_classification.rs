//! Node classification on sphere embeddings of a three-block graph.

use modembed::evaluate::{classify, LabeledDataset};
use modembed::generators;
use modembed::sphere::{sphere_embed, SphereConfig};

fn main() -> modembed::Result<()> {
    let (graph, blocks) = generators::sbm(&[40, 40, 40], 0.3, 0.03, 2)?;
    let config = SphereConfig {
        k: 3,
        beta: 1.0,
        ..Default::default()
    };
    let (_, embedding) = sphere_embed(&graph.modularity(), &config)?;
    let dataset = LabeledDataset::new(embedding.into_matrix(), blocks, 3)?;
    let summary = classify(&dataset, 0.5, 50, 0)?;
    print!("{}", summary.to_tsv());
    Ok(())
}
