//! Graph embeddings by modularity maximization.
//!
//! A [`SampledGraph`](graph::SampledGraph) is a symmetric bivariate distribution
//! over node pairs. Its covariance matrix `Q = P - p pᵀ` is the modularity matrix,
//! and the dominant eigenvectors of `Q` are the optimal embeddings. This crate
//! computes approximations of those eigenvectors with local, linear-time updates:
//!
//! * [`softmax`]: sequential softmax clustering, monotone in `tr(HᵀQH)`.
//! * [`cafe`]: clustering, zero-column pruning and one orthogonal-iteration
//!   step (QR of `QH`), plus the multi-layer variant with hardmax coarsening.
//! * [`sphere`]: unit-sphere embeddings by damped neighbor averaging.
//! * [`spectral`]: a dense eigensolver used as a verification oracle, including
//!   the cosine bounds between a trace-maximizing vector and `v₁`.
//! * [`dimred`]: the same machinery applied to `Q = XXᵀ` for point clouds.
//! * [`evaluate`]: node classification and link prediction harness.
//!
//! Everything operates on the [`CovarianceOperator`](graph::CovarianceOperator)
//! trait, which both sparse sampled graphs and centered point clouds implement.

pub mod cafe;
pub mod cli;
pub mod dimred;
pub mod error;
pub mod evaluate;
pub mod generators;
pub mod graph;
pub mod io;
pub mod linalg;
pub mod softmax;
pub mod spectral;
pub mod sphere;

pub use cafe::{cafe_gcn, multilayer, qr_embed, CafeResult, EmbeddingMatrix, LayerResult};
pub use error::{Error, Result};
pub use graph::{CovarianceOperator, ModularityMatrix, SampledGraph};
pub use softmax::{ClusterConfig, SoftAssignment};
pub use sphere::{SphereAssignment, SphereConfig};

pub(crate) fn seeded_rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}
