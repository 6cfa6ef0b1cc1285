//! Dominant eigenpairs of a preferential-attachment graph by orthogonal
//! iteration, cross-checked against the dense solver.

use modembed::generators;
use modembed::graph::CovarianceOperator;
use modembed::spectral::{eigendecompose, EigenMode};

fn main() -> modembed::Result<()> {
    let graph = generators::barabasi_albert(400, 3, 1)?;
    let q = graph.modularity().with_diag_zeroed(false);
    let top = eigendecompose(&q, EigenMode::TopK(4))?;
    let full = eigendecompose(&q, EigenMode::Full)?;
    for i in 0..4 {
        println!(
            "lambda_{} = {:.8} (dense {:.8}), |cos| = {:.10}",
            i + 1,
            top.eigenvalues[i],
            full.eigenvalues[i],
            top.vector(i).dot(&full.vector(i)).abs()
        );
    }
    Ok(())
}
