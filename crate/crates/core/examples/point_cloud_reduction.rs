//! Dimensionality reduction of lifted point clouds and recovery of their
//! intrinsic dimension.

use modembed::dimred::{distance_correlation, embed_lift, reduce, PointCloud, ReduceConfig, SELECT_TOL};
use modembed::generators;

fn main() -> modembed::Result<()> {
    let clouds = [
        ("concentric circles", generators::concentric_circles(200)),
        ("torus", generators::torus(200, 1.0, 0.5, 0)),
    ];
    for (name, points) in clouds {
        let cloud = embed_lift(&PointCloud::new(points), 30, 7)?;
        let reduction = reduce(&cloud, &ReduceConfig::default())?;
        let selected = reduction.selected_columns(SELECT_TOL);
        let rebuilt = reduction.reconstruct(&cloud, &selected);
        let residuals: Vec<String> = reduction.residuals.iter().map(|r| format!("{r:.4}")).collect();
        println!(
            "{name}: residuals [{}], kept {:?}, distance correlation {:.5}",
            residuals.join(", "),
            selected,
            distance_correlation(cloud.coords(), rebuilt.view())
        );
    }
    Ok(())
}
