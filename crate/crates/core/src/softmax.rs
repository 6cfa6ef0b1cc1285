//! Sequential softmax clustering.
//!
//! Each node in turn computes its expected covariance `z_u` to every cluster
//! and reweights its membership probabilities by `e^{θ z_{u,k}}`. With the
//! diagonal of `Q` ignored, every such update can only increase `tr(HᵀQH)`.

use ndarray::{Array2, ArrayView2};
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{trace_objective, CovarianceOperator};

/// Entries are clamped here before taking logs, so subnormals behave.
const LOG_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterConfig {
    /// Maximum number of clusters.
    pub k: usize,
    /// Inverse temperature.
    pub theta: f64,
    pub max_sweeps: usize,
    /// Stop once the objective changes by less than this over a sweep.
    pub tol: f64,
    pub seed: u64,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self {
            k: 2,
            theta: 10.0,
            max_sweeps: 200,
            tol: 1e-9,
            seed: 0,
        }
    }
}

impl ClusterConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::InvalidConfig(format!("k must be at least 2, got {}", self.k)));
        }
        if !self.theta.is_finite() || self.theta <= 0.0 {
            return Err(Error::InvalidConfig(format!("theta must be positive, got {}", self.theta)));
        }
        if self.max_sweeps == 0 {
            return Err(Error::InvalidConfig("max_sweeps must be positive".into()));
        }
        if self.tol.is_nan() || self.tol < 0.0 {
            return Err(Error::InvalidConfig(format!("tol must be nonnegative, got {}", self.tol)));
        }
        Ok(())
    }
}

/// Row-stochastic `n × K` membership matrix with optionally pinned rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftAssignment {
    h: Array2<f64>,
    pinned: Vec<Option<usize>>,
}

impl SoftAssignment {
    /// One-hot rows from a hard labeling; every row is pinned.
    pub fn from_labels(labels: &[usize], k: usize) -> Result<Self> {
        let pins: Vec<(usize, usize)> = labels.iter().copied().enumerate().collect();
        let mut h = Array2::zeros((labels.len(), k));
        let pinned = resolve_pins(labels.len(), k, &pins)?;
        for (u, &c) in labels.iter().enumerate() {
            h[[u, c]] = 1.0;
        }
        Ok(Self { h, pinned })
    }

    pub fn matrix(&self) -> ArrayView2<'_, f64> {
        self.h.view()
    }

    pub fn into_matrix(self) -> Array2<f64> {
        self.h
    }

    pub fn n(&self) -> usize {
        self.h.nrows()
    }

    pub fn k(&self) -> usize {
        self.h.ncols()
    }

    pub fn pinned(&self) -> &[Option<usize>] {
        &self.pinned
    }

    pub fn is_pinned(&self, u: usize) -> bool {
        self.pinned[u].is_some()
    }

    /// Row-wise argmax; ties go to the lowest index.
    pub fn hardmax(&self) -> Vec<usize> {
        hardmax(self.h.view())
    }

    /// `max_u |Σ_k h_{u,k} - 1|`.
    pub fn max_row_sum_error(&self) -> f64 {
        self.h
            .rows()
            .into_iter()
            .map(|r| (r.sum() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

pub fn hardmax(h: ArrayView2<f64>) -> Vec<usize> {
    h.rows()
        .into_iter()
        .map(|row| {
            let mut best = 0;
            for (k, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = k;
                }
            }
            best
        })
        .collect()
}

fn resolve_pins(n: usize, k: usize, pins: &[(usize, usize)]) -> Result<Vec<Option<usize>>> {
    let mut pinned = vec![None; n];
    for &(node, cluster) in pins {
        if node >= n {
            return Err(Error::NodeOutOfRange { index: node, n });
        }
        if cluster >= k {
            return Err(Error::PinnedOutOfRange { node, cluster, k });
        }
        match pinned[node] {
            Some(c) if c != cluster => return Err(Error::ConflictingLabel(node.to_string())),
            _ => pinned[node] = Some(cluster),
        }
    }
    Ok(pinned)
}

/// Seeded near-uniform starting point: each unpinned row normalizes `K` draws
/// from `uniform(0.5, 1.5)`; pinned rows are one-hot.
pub fn init_assignment(n: usize, config: &ClusterConfig, pinned: &[(usize, usize)]) -> Result<SoftAssignment> {
    if config.k < 2 {
        return Err(Error::InvalidConfig(format!("k must be at least 2, got {}", config.k)));
    }
    let k = config.k;
    let pinned = resolve_pins(n, k, pinned)?;
    let mut rng = crate::seeded_rng(config.seed);
    let mut h = Array2::zeros((n, k));
    for u in 0..n {
        // draw for every row so pinning does not shift other rows' streams
        let draws: Vec<f64> = (0..k).map(|_| rng.random_range(0.5..1.5)).collect();
        let total: f64 = draws.iter().sum();
        match pinned[u] {
            Some(c) => h[[u, c]] = 1.0,
            None => {
                for (c, d) in draws.iter().enumerate() {
                    h[[u, c]] = d / total;
                }
            }
        }
    }
    Ok(SoftAssignment { h, pinned })
}

/// `z_u = Σ_{w≠u} q(w,u) h_w` through the operator's aggregate. Returns the
/// multiply-add count.
pub fn expected_covariance<Q: CovarianceOperator + ?Sized>(
    op: &Q,
    h: ArrayView2<f64>,
    aggregate: &Array2<f64>,
    u: usize,
    z: &mut [f64],
) -> usize {
    op.off_diagonal_product(h, aggregate, u, z)
}

/// `h_{u,k} ← e^{θ z_k} h_{u,k} / Σ_ℓ e^{θ z_ℓ} h_{u,ℓ}`, in the log domain with
/// max-subtraction. Exact zeros stay zero; the row stays stochastic.
pub fn softmax_update(row: &mut [f64], z: &[f64], theta: f64) {
    debug_assert_eq!(row.len(), z.len());
    let mut max = f64::NEG_INFINITY;
    for (h, zk) in row.iter().zip(z) {
        if *h > 0.0 {
            max = max.max(h.max(LOG_FLOOR).ln() + theta * zk);
        }
    }
    if !max.is_finite() {
        return;
    }
    let mut total = 0.0;
    for (h, zk) in row.iter_mut().zip(z) {
        if *h > 0.0 {
            *h = (h.max(LOG_FLOOR).ln() + theta * zk - max).exp();
            total += *h;
        }
    }
    for h in row.iter_mut() {
        *h /= total;
    }
}

/// Per-sweep statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepStats {
    /// `tr(HᵀQH)` with the diagonal of `Q` zeroed, after the sweep.
    pub objective: f64,
    /// Multiply-adds spent on expected covariances.
    pub ops: usize,
}

/// Clustering state: the assignment, the diagonal-zeroed operator and the
/// running aggregate.
pub struct SoftmaxState<Q: CovarianceOperator> {
    op: Q,
    assignment: SoftAssignment,
    aggregate: Array2<f64>,
    z: Vec<f64>,
}

impl<Q: CovarianceOperator> SoftmaxState<Q> {
    pub fn new(op: &Q, assignment: SoftAssignment) -> Result<Self> {
        if assignment.n() != op.n() {
            return Err(Error::DimensionMismatch {
                expected: op.n(),
                found: assignment.n(),
            });
        }
        let op = op.with_diag_zeroed(true);
        let aggregate = op.aggregate(assignment.h.view());
        let z = vec![0.0; assignment.k()];
        Ok(Self {
            op,
            assignment,
            aggregate,
            z,
        })
    }

    pub fn assignment(&self) -> &SoftAssignment {
        &self.assignment
    }

    pub fn into_assignment(self) -> SoftAssignment {
        self.assignment
    }

    pub fn aggregate(&self) -> &Array2<f64> {
        &self.aggregate
    }

    /// Updates one unpinned node. Returns the objective change implied by the
    /// update, `2 Σ_k z_{u,k} Δh_{u,k}`, and the op count.
    pub fn update_node(&mut self, u: usize, theta: f64) -> (f64, usize) {
        if self.assignment.is_pinned(u) {
            return (0.0, 0);
        }
        let ops = expected_covariance(&self.op, self.assignment.h.view(), &self.aggregate, u, &mut self.z);
        let old: Vec<f64> = self.assignment.h.row(u).to_vec();
        let mut new = old.clone();
        softmax_update(&mut new, &self.z, theta);
        let mut delta = 0.0;
        for c in 0..new.len() {
            delta += 2.0 * self.z[c] * (new[c] - old[c]);
            self.assignment.h[[u, c]] = new[c];
        }
        self.op.shift_aggregate(&mut self.aggregate, u, &old, &new);
        (delta, ops + new.len())
    }

    /// One pass over all nodes in ascending order.
    pub fn sweep(&mut self, theta: f64) -> Result<SweepStats> {
        // rebuilding the aggregate bounds floating-point drift
        let fresh = self.op.aggregate(self.assignment.h.view());
        debug_assert!(
            fresh
                .iter()
                .zip(self.aggregate.iter())
                .all(|(a, b)| (a - b).abs() <= 1e-9),
            "stale aggregate"
        );
        self.aggregate = fresh;
        let mut ops = 0;
        for u in 0..self.assignment.n() {
            ops += self.update_node(u, theta).1;
        }
        Ok(SweepStats {
            objective: self.objective()?,
            ops,
        })
    }

    /// `tr(HᵀQH)` with the diagonal zeroed.
    pub fn objective(&self) -> Result<f64> {
        trace_objective(&self.op, self.assignment.h.view())
    }
}

/// One sweep from a given assignment.
pub fn sweep<Q: CovarianceOperator>(
    op: &Q,
    assignment: SoftAssignment,
    config: &ClusterConfig,
) -> Result<(SoftAssignment, SweepStats)> {
    let mut state = SoftmaxState::new(op, assignment)?;
    let stats = state.sweep(config.theta)?;
    Ok((state.into_assignment(), stats))
}

#[derive(Debug, Clone)]
pub struct ClusterRun {
    pub assignment: SoftAssignment,
    pub objective: f64,
    pub sweeps: usize,
    pub converged: bool,
    /// Objective before the first sweep, then after each sweep.
    pub trace: Vec<f64>,
    pub ops_per_sweep: Vec<usize>,
}

/// Sweeps until the objective changes by less than `tol` or `max_sweeps` is
/// reached.
pub fn run<Q: CovarianceOperator>(op: &Q, config: &ClusterConfig, pinned: &[(usize, usize)]) -> Result<ClusterRun> {
    config.validate()?;
    let assignment = init_assignment(op.n(), config, pinned)?;
    run_from(op, config, assignment)
}

pub fn run_from<Q: CovarianceOperator>(op: &Q, config: &ClusterConfig, assignment: SoftAssignment) -> Result<ClusterRun> {
    config.validate()?;
    let mut state = SoftmaxState::new(op, assignment)?;
    let mut trace = vec![state.objective()?];
    let mut ops_per_sweep = Vec::new();
    let mut converged = false;
    for _ in 0..config.max_sweeps {
        let stats = state.sweep(config.theta)?;
        let previous = *trace.last().expect("trace starts non-empty");
        trace.push(stats.objective);
        ops_per_sweep.push(stats.ops);
        if (stats.objective - previous).abs() < config.tol {
            converged = true;
            break;
        }
    }
    log::debug!(
        "softmax clustering: {} sweeps, objective {:.6e}, converged {}",
        ops_per_sweep.len(),
        trace.last().unwrap(),
        converged
    );
    Ok(ClusterRun {
        objective: *trace.last().unwrap(),
        sweeps: ops_per_sweep.len(),
        converged,
        trace,
        ops_per_sweep,
        assignment: state.into_assignment(),
    })
}
