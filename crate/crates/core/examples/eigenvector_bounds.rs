//! Checks the guaranteed cosine bounds between a cluster vector, its one-step
//! propagation and the dominant eigenvector.

use modembed::cafe::cafe_gcn;
use modembed::generators;
use modembed::graph::CovarianceOperator;
use modembed::spectral::{bound_report_with, eigendecompose, EigenMode};
use modembed::ClusterConfig;

fn main() -> modembed::Result<()> {
    let graphs = [
        ("sbm 60/40", generators::sbm(&[60, 40], 0.6, 0.02, 3)?.0),
        ("karate", generators::karate()),
    ];
    for (name, graph) in &graphs {
        let q = graph.modularity();
        let full = q.with_diag_zeroed(false);
        let spectrum = eigendecompose(&full, EigenMode::Full)?;
        let result = cafe_gcn(&q, &ClusterConfig::default(), &[])?;
        let report = bound_report_with(&full, &spectrum, result.assignment.column(0))?;
        println!("{name}\n{}", report.to_tsv());
        for (check, ok) in report.checks() {
            println!("  {check}: {}", if report.applicable { ok.to_string() } else { "n/a".into() });
        }
    }
    Ok(())
}
