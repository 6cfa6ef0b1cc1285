//! Clustering followed by one orthogonal-iteration step, and its multi-layer
//! form with hardmax coarsening and bivariate pooling.

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::graph::{CovarianceOperator, ModularityMatrix, SampledGraph};
use crate::linalg::{householder_qr, orthonormality_error, orthonormalize_dropping};
use crate::softmax::{self, hardmax, ClusterConfig, ClusterRun, SoftAssignment};

/// Columns whose largest entry falls below this are treated as empty.
pub const ZERO_COLUMN_THRESHOLD: f64 = 1e-8;

/// A column of `QH` is considered dependent when its component outside the
/// span of earlier columns is at most this fraction of its norm.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// A coarser level must improve modularity by more than this, which absorbs
/// rounding differences between pooled and original graphs.
pub const MODULARITY_GAIN: f64 = 1e-12;

/// Inverse temperature standing in for the hardmax activation.
pub const HARDMAX_THETA: f64 = 1e6;

/// Column-orthonormal `n × C` embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    matrix: Array2<f64>,
    dropped: Vec<usize>,
}

impl EmbeddingMatrix {
    pub fn matrix(&self) -> ArrayView2<'_, f64> {
        self.matrix.view()
    }

    pub fn into_matrix(self) -> Array2<f64> {
        self.matrix
    }

    /// Effective dimension.
    pub fn c(&self) -> usize {
        self.matrix.ncols()
    }

    /// Input columns removed because `QH` was rank deficient there.
    pub fn dropped_columns(&self) -> &[usize] {
        &self.dropped
    }

    pub fn orthonormality_error(&self) -> f64 {
        orthonormality_error(self.matrix.view())
    }
}

/// Drops columns whose maximum entry is below [`ZERO_COLUMN_THRESHOLD`],
/// preserving order. Returns the pruned matrix and the kept column indices.
pub fn prune_zero_columns(h: ArrayView2<f64>) -> (Array2<f64>, Vec<usize>) {
    let kept: Vec<usize> = (0..h.ncols())
        .filter(|&c| h.column(c).iter().copied().fold(f64::NEG_INFINITY, f64::max) >= ZERO_COLUMN_THRESHOLD)
        .collect();
    let mut out = Array2::zeros((h.nrows(), kept.len()));
    for (dst, &src) in kept.iter().enumerate() {
        out.column_mut(dst).assign(&h.column(src));
    }
    (out, kept)
}

/// Orthonormal basis of `QH` (true diagonal), with dependent columns dropped.
///
/// Since `Q` has zero row sums and the rows of a stochastic `H` sum to one,
/// `QH` has rank at most `C - 1`; the last dependent column is dropped.
pub fn qr_embed<Q: CovarianceOperator>(op: &Q, h: ArrayView2<f64>) -> Result<EmbeddingMatrix> {
    let qh = op.with_diag_zeroed(false).apply(h)?;
    let (matrix, kept) = orthonormalize_dropping(qh.view(), RANK_TOLERANCE);
    let dropped: Vec<usize> = (0..h.ncols()).filter(|c| !kept.contains(c)).collect();
    if !dropped.is_empty() {
        log::warn!(
            "QH is rank deficient: dropped columns {:?}, embedding dimension {}",
            dropped,
            matrix.ncols()
        );
    }
    Ok(EmbeddingMatrix { matrix, dropped })
}

/// Householder QR of `QH` keeping every column, so the result is always
/// `n × K` even when `QH` is rank deficient.
pub fn qr_embed_keep_all<Q: CovarianceOperator>(op: &Q, h: ArrayView2<f64>) -> Result<EmbeddingMatrix> {
    let qh = op.with_diag_zeroed(false).apply(h)?;
    if qh.ncols() > qh.nrows() {
        return Err(Error::DimensionMismatch {
            expected: qh.nrows(),
            found: qh.ncols(),
        });
    }
    let (matrix, _) = householder_qr(qh.view());
    Ok(EmbeddingMatrix {
        matrix,
        dropped: Vec::new(),
    })
}

#[derive(Debug, Clone)]
pub struct CafeResult {
    /// Number of nonzero clusters.
    pub c: usize,
    /// `n × C` soft assignment after pruning.
    pub assignment: Array2<f64>,
    /// Indices (into the original `K` columns) of the surviving clusters.
    pub kept_columns: Vec<usize>,
    pub embedding: EmbeddingMatrix,
    /// Absent in full-label mode.
    pub run: Option<ClusterRun>,
}

/// Softmax clustering, zero-column pruning, then the QR step.
pub fn cafe_gcn<Q: CovarianceOperator>(op: &Q, config: &ClusterConfig, pinned: &[(usize, usize)]) -> Result<CafeResult> {
    let run = softmax::run(op, config, pinned)?;
    let (assignment, kept_columns) = prune_zero_columns(run.assignment.matrix());
    let embedding = qr_embed(op, assignment.view())?;
    Ok(CafeResult {
        c: kept_columns.len(),
        assignment,
        kept_columns,
        embedding,
        run: Some(run),
    })
}

/// All labels known: skips clustering and goes straight to the QR step on the
/// label indicator matrix.
pub fn full_label<Q: CovarianceOperator>(op: &Q, labels: &[usize], k: usize) -> Result<CafeResult> {
    if labels.len() != op.n() {
        return Err(Error::DimensionMismatch {
            expected: op.n(),
            found: labels.len(),
        });
    }
    let indicator = SoftAssignment::from_labels(labels, k)?;
    let (assignment, kept_columns) = prune_zero_columns(indicator.matrix());
    let embedding = qr_embed(op, assignment.view())?;
    Ok(CafeResult {
        c: kept_columns.len(),
        assignment,
        kept_columns,
        embedding,
        run: None,
    })
}

/// Result of pooling a hard partition.
#[derive(Debug, Clone)]
pub struct Coarsened {
    /// Supernode graph with the inherited distribution `p̃(i,j) = Σ p(u,w)`.
    pub graph: SampledGraph,
    /// Dense `HᵀQH`.
    pub q_pooled: Array2<f64>,
    /// Node → supernode, after empty clusters are removed.
    pub membership: Vec<usize>,
}

/// Aggregates each cluster of a hard partition into a supernode.
/// Empty clusters are dropped and the remaining ones renumbered in order.
pub fn coarsen(q: &ModularityMatrix<'_>, partition: &[usize]) -> Result<Coarsened> {
    let g = q.graph();
    if partition.len() != g.n() {
        return Err(Error::DimensionMismatch {
            expected: g.n(),
            found: partition.len(),
        });
    }
    let k = partition.iter().copied().max().map_or(0, |m| m + 1);
    let mut remap = vec![usize::MAX; k];
    let mut used = vec![false; k];
    for &c in partition {
        used[c] = true;
    }
    let mut next = 0;
    for c in 0..k {
        if used[c] {
            remap[c] = next;
            next += 1;
        }
    }
    let membership: Vec<usize> = partition.iter().map(|&c| remap[c]).collect();
    let kk = next;

    let mut pooled = Array2::<f64>::zeros((kk, kk));
    for u in 0..g.n() {
        let cu = membership[u];
        for (w, p) in g.neighbors(u) {
            pooled[[cu, membership[w]]] += p;
        }
    }
    for i in 0..kk {
        for j in (i + 1)..kk {
            let mean = 0.5 * (pooled[[i, j]] + pooled[[j, i]]);
            pooled[[i, j]] = mean;
            pooled[[j, i]] = mean;
        }
    }
    let mut entries = Vec::new();
    for i in 0..kk {
        for j in 0..kk {
            if pooled[[i, j]] > 0.0 {
                entries.push((i, j, pooled[[i, j]]));
            }
        }
    }
    let graph = SampledGraph::from_probabilities(kk, entries);
    let mut mass = vec![0.0; kk];
    for u in 0..g.n() {
        mass[membership[u]] += g.marginal()[u];
    }
    let q_pooled = Array2::from_shape_fn((kk, kk), |(i, j)| pooled[[i, j]] - mass[i] * mass[j]);
    Ok(Coarsened {
        graph,
        q_pooled,
        membership,
    })
}

#[derive(Debug, Clone)]
pub struct LayerResult {
    pub level: usize,
    /// Clusters found at this level.
    pub c: usize,
    /// Hard `n_level × C` assignment over this level's nodes.
    pub assignment: Array2<f64>,
    pub embedding: EmbeddingMatrix,
    /// `HᵀQH` for this level's partition; its trace is `modularity`.
    pub q_pooled: Array2<f64>,
    pub modularity: f64,
    /// Original node → cluster at this level.
    pub membership: Vec<usize>,
}

/// Multi-layer clustering. Level 0 clusters the input with at most
/// `config.k` clusters (clamped to `n`); each further level clusters the
/// pooled graph of the previous one, for as long as modularity strictly
/// increases. Level 0 is always reported.
pub fn multilayer(q: &ModularityMatrix<'_>, config: &ClusterConfig) -> Result<Vec<LayerResult>> {
    let mut layers: Vec<LayerResult> = Vec::new();
    let mut graph = q.graph().clone();
    let mut k = config.k.min(graph.n()).max(2);
    let mut membership: Vec<usize> = (0..graph.n()).collect();
    let mut incumbent = 0.0;
    for level in 0.. {
        let op = graph.modularity();
        let level_config = ClusterConfig {
            k,
            theta: HARDMAX_THETA,
            seed: config.seed.wrapping_add(level as u64),
            ..config.clone()
        };
        let run = softmax::run(&op, &level_config, &[])?;
        let labels = hardmax(run.assignment.matrix());
        let pooled = coarsen(&op, &labels)?;
        let c = pooled.graph.n();
        if level > 0 && c == graph.n() {
            break;
        }
        let modularity = op.partition_modularity(&pooled.membership)?;
        if level > 0 && modularity - incumbent <= MODULARITY_GAIN {
            break;
        }
        let hard = SoftAssignment::from_labels(&pooled.membership, c)?;
        let embedding = qr_embed(&op, hard.matrix())?;
        membership = membership.iter().map(|&m| pooled.membership[m]).collect();
        log::debug!("multilayer level {level}: {c} clusters, modularity {modularity:.6}");
        layers.push(LayerResult {
            level,
            c,
            assignment: hard.into_matrix(),
            embedding,
            q_pooled: pooled.q_pooled,
            modularity,
            membership: membership.clone(),
        });
        incumbent = modularity;
        if c < 2 {
            break;
        }
        graph = pooled.graph;
        k = c;
    }
    Ok(layers)
}
