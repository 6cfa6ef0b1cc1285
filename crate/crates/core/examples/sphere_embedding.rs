//! Unit-sphere embedding of a block model and how well its span captures the
//! dominant eigenvector.

use modembed::generators;
use modembed::graph::CovarianceOperator;
use modembed::spectral::{eigendecompose, EigenMode};
use modembed::sphere::{sphere_embed, SphereConfig};

fn main() -> modembed::Result<()> {
    let (graph, _) = generators::sbm(&[50, 50], 0.5, 0.02, 0)?;
    let q = graph.modularity();
    let v1 = eigendecompose(&q.with_diag_zeroed(false), EigenMode::Full)?.vector(0).to_owned();
    for beta in [0.5, 1.0] {
        let config = SphereConfig {
            k: 2,
            beta,
            ..Default::default()
        };
        let (run, embedding) = sphere_embed(&q, &config)?;
        let c = embedding.matrix().t().dot(&v1);
        println!(
            "beta {beta}: {} sweeps (converged {}), objective {:.4}, |proj of v1 on span| {:.4}",
            run.sweeps,
            run.converged,
            run.objective,
            c.dot(&c).sqrt()
        );
    }
    Ok(())
}
