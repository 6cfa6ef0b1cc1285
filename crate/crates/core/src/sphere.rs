//! Unit-sphere embeddings: each node moves toward its expected covariance with
//! its neighbors and is projected back onto the sphere.

use ndarray::{Array2, ArrayView2};
use rand_distr::{Distribution, StandardNormal};

use crate::cafe::{qr_embed, EmbeddingMatrix};
use crate::error::{Error, Result};
use crate::graph::{trace_objective, CovarianceOperator};
use crate::softmax::expected_covariance;

/// `‖(1-β)h + βz‖` below this leaves the row untouched.
pub const DEGENERATE_NORM: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq)]
pub struct SphereConfig {
    pub k: usize,
    /// Step toward the expected covariance, in `[0, 1]`.
    pub beta: f64,
    pub max_sweeps: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for SphereConfig {
    fn default() -> Self {
        Self {
            k: 2,
            beta: 0.5,
            max_sweeps: 200,
            tol: 1e-9,
            seed: 0,
        }
    }
}

impl SphereConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::InvalidConfig(format!("beta must lie in [0, 1], got {}", self.beta)));
        }
        if self.tol.is_nan() || self.tol < 0.0 {
            return Err(Error::InvalidConfig(format!("tol must be non-negative, got {}", self.tol)));
        }
        Ok(())
    }
}

/// `n × K` matrix with unit-norm rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereAssignment {
    h: Array2<f64>,
    beta: f64,
}

impl SphereAssignment {
    /// Normalizes every row of `h`. Fails if a row is zero.
    pub fn from_matrix(mut h: Array2<f64>, beta: f64) -> Result<Self> {
        for mut row in h.rows_mut() {
            let norm = row.dot(&row).sqrt();
            if norm < DEGENERATE_NORM {
                return Err(Error::ZeroVector);
            }
            row /= norm;
        }
        Ok(Self { h, beta })
    }

    pub fn matrix(&self) -> ArrayView2<'_, f64> {
        self.h.view()
    }

    pub fn into_matrix(self) -> Array2<f64> {
        self.h
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn n(&self) -> usize {
        self.h.nrows()
    }

    pub fn k(&self) -> usize {
        self.h.ncols()
    }

    /// Largest `|‖h_u‖ - 1|`.
    pub fn max_norm_error(&self) -> f64 {
        self.h
            .rows()
            .into_iter()
            .map(|r| (r.dot(&r).sqrt() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Rows drawn from a standard Gaussian and normalized, i.e. uniform on the
/// sphere.
pub fn init_sphere(n: usize, k: usize, seed: u64) -> Result<SphereAssignment> {
    if k == 0 {
        return Err(Error::InvalidConfig("k must be at least 1".into()));
    }
    let mut rng = crate::seeded_rng(seed);
    let mut h = Array2::zeros((n, k));
    for u in 0..n {
        loop {
            for c in 0..k {
                h[[u, c]] = StandardNormal.sample(&mut rng);
            }
            if h.row(u).dot(&h.row(u)) > 0.0 {
                break;
            }
        }
    }
    SphereAssignment::from_matrix(h, SphereConfig::default().beta)
}

/// `h ← normalize((1-β)h + βz)`. Returns `false`, leaving `row` untouched,
/// when the combination vanishes.
pub fn sphere_update(row: &mut [f64], z: &[f64], beta: f64) -> bool {
    debug_assert_eq!(row.len(), z.len());
    let mut norm2 = 0.0;
    let moved: Vec<f64> = row
        .iter()
        .zip(z)
        .map(|(h, zk)| {
            let v = (1.0 - beta) * h + beta * zk;
            norm2 += v * v;
            v
        })
        .collect();
    let norm = norm2.sqrt();
    if norm < DEGENERATE_NORM {
        return false;
    }
    for (h, v) in row.iter_mut().zip(moved) {
        *h = v / norm;
    }
    true
}

/// What a single node update did.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeUpdate {
    /// `COS(h_u, z_u)` before the update, 0 when `z_u = 0`.
    pub cos_before: f64,
    pub cos_after: f64,
    /// Objective change, `2 z_u · (h_u⁺ - h_u)`.
    pub delta: f64,
    pub ops: usize,
    pub degenerate: bool,
}

/// Sphere embedding state over the diagonal-zeroed operator.
pub struct SphereState<Q: CovarianceOperator> {
    op: Q,
    full: Q,
    assignment: SphereAssignment,
    aggregate: Array2<f64>,
    z: Vec<f64>,
    degenerate_updates: usize,
}

impl<Q: CovarianceOperator> SphereState<Q> {
    pub fn new(op: &Q, assignment: SphereAssignment) -> Result<Self> {
        if assignment.n() != op.n() {
            return Err(Error::DimensionMismatch {
                expected: op.n(),
                found: assignment.n(),
            });
        }
        let zeroed = op.with_diag_zeroed(true);
        let aggregate = zeroed.aggregate(assignment.h.view());
        Ok(Self {
            z: vec![0.0; assignment.k()],
            op: zeroed,
            full: op.with_diag_zeroed(false),
            assignment,
            aggregate,
            degenerate_updates: 0,
        })
    }

    pub fn assignment(&self) -> &SphereAssignment {
        &self.assignment
    }

    pub fn into_assignment(self) -> SphereAssignment {
        self.assignment
    }

    pub fn degenerate_updates(&self) -> usize {
        self.degenerate_updates
    }

    /// The current `z_u`.
    pub fn expected_covariance(&mut self, u: usize) -> Vec<f64> {
        expected_covariance(&self.op, self.assignment.h.view(), &self.aggregate, u, &mut self.z);
        self.z.clone()
    }

    pub fn update_node(&mut self, u: usize) -> NodeUpdate {
        let ops = expected_covariance(&self.op, self.assignment.h.view(), &self.aggregate, u, &mut self.z);
        let old: Vec<f64> = self.assignment.h.row(u).to_vec();
        let mut new = old.clone();
        let moved = sphere_update(&mut new, &self.z, self.assignment.beta);
        let znorm = self.z.iter().map(|v| v * v).sum::<f64>().sqrt();
        let cos = |h: &[f64]| {
            if znorm == 0.0 {
                0.0
            } else {
                h.iter().zip(&self.z).map(|(a, b)| a * b).sum::<f64>() / znorm
            }
        };
        let cos_before = cos(&old);
        let cos_after = cos(&new);
        if !moved {
            self.degenerate_updates += 1;
            return NodeUpdate {
                cos_before,
                cos_after: cos_before,
                delta: 0.0,
                ops,
                degenerate: true,
            };
        }
        let mut delta = 0.0;
        for c in 0..new.len() {
            delta += 2.0 * self.z[c] * (new[c] - old[c]);
            self.assignment.h[[u, c]] = new[c];
        }
        self.op.shift_aggregate(&mut self.aggregate, u, &old, &new);
        NodeUpdate {
            cos_before,
            cos_after,
            delta,
            ops: ops + new.len(),
            degenerate: false,
        }
    }

    /// One pass over all nodes; returns the op count.
    pub fn sweep(&mut self) -> usize {
        self.aggregate = self.op.aggregate(self.assignment.h.view());
        (0..self.assignment.n()).map(|u| self.update_node(u).ops).sum()
    }

    /// `tr(HᵀQH)` with the true diagonal.
    pub fn objective(&self) -> Result<f64> {
        trace_objective(&self.full, self.assignment.h.view())
    }
}

#[derive(Debug, Clone)]
pub struct SphereRun {
    pub assignment: SphereAssignment,
    pub objective: f64,
    pub sweeps: usize,
    pub converged: bool,
    /// Objective before the first sweep, then after each sweep.
    pub trace: Vec<f64>,
    pub ops_per_sweep: Vec<usize>,
    pub degenerate_updates: usize,
}

pub fn run_sphere<Q: CovarianceOperator>(op: &Q, config: &SphereConfig) -> Result<SphereRun> {
    config.validate()?;
    let mut init = init_sphere(op.n(), config.k, config.seed)?;
    init.beta = config.beta;
    run_sphere_from(op, config, init)
}

pub fn run_sphere_from<Q: CovarianceOperator>(
    op: &Q,
    config: &SphereConfig,
    mut assignment: SphereAssignment,
) -> Result<SphereRun> {
    config.validate()?;
    assignment.beta = config.beta;
    let mut state = SphereState::new(op, assignment)?;
    let mut trace = vec![state.objective()?];
    let mut ops_per_sweep = Vec::new();
    let mut converged = false;
    for _ in 0..config.max_sweeps {
        ops_per_sweep.push(state.sweep());
        let objective = state.objective()?;
        let previous = *trace.last().expect("trace starts non-empty");
        trace.push(objective);
        if (objective - previous).abs() < config.tol {
            converged = true;
            break;
        }
    }
    if state.degenerate_updates > 0 {
        log::warn!("{} degenerate sphere updates skipped", state.degenerate_updates);
    }
    Ok(SphereRun {
        objective: *trace.last().unwrap(),
        sweeps: ops_per_sweep.len(),
        converged,
        trace,
        ops_per_sweep,
        degenerate_updates: state.degenerate_updates,
        assignment: state.into_assignment(),
    })
}

/// Sphere run followed by the QR step.
pub fn sphere_embed<Q: CovarianceOperator>(op: &Q, config: &SphereConfig) -> Result<(SphereRun, EmbeddingMatrix)> {
    let run = run_sphere(op, config)?;
    let embedding = qr_embed(op, run.assignment.matrix())?;
    Ok((run, embedding))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::SampledGraph;

    #[test]
    fn init_rows_are_unit_and_reproducible() {
        let a = init_sphere(50, 4, 3).unwrap();
        assert!(a.max_norm_error() < 1e-12);
        assert_eq!(a, init_sphere(50, 4, 3).unwrap());
        assert_ne!(a, init_sphere(50, 4, 4).unwrap());
        assert!(init_sphere(3, 0, 0).is_err());
    }

    #[test]
    fn init_is_roughly_isotropic() {
        let (n, k) = (1000, 8);
        let a = init_sphere(n, k, 11).unwrap();
        let h = a.matrix();
        let mut total = 0.0;
        let mut pairs = 0.0;
        for u in 0..n {
            for w in (u + 1)..n {
                total += h.row(u).dot(&h.row(w));
                pairs += 1.0;
            }
        }
        let mean = total / pairs;
        let limit = 3.0 / (k as f64).sqrt() / (n as f64).sqrt() * 5.0;
        assert!(mean.abs() < limit, "mean pairwise dot {mean}");
    }

    #[test]
    fn beta_zero_and_one() {
        let mut row = vec![0.6, 0.8];
        assert!(sphere_update(&mut row, &[3.0, -1.0], 0.0));
        assert_eq!(row, vec![0.6, 0.8]);
        assert!(sphere_update(&mut row, &[3.0, -4.0], 1.0));
        assert!((row[0] - 0.6).abs() < 1e-15 && (row[1] + 0.8).abs() < 1e-15);
    }

    #[test]
    fn degenerate_update_is_skipped() {
        let mut row = vec![1.0, 0.0];
        assert!(!sphere_update(&mut row, &[-1.0, 0.0], 0.5));
        assert_eq!(row, vec![1.0, 0.0]);
    }

    #[test]
    fn update_never_widens_the_angle() {
        let edges: Vec<_> = (0..10).flat_map(|u| [(u, (u + 1) % 10, 1.0), (u, (u + 3) % 10, 0.5)]).collect();
        let g = SampledGraph::from_edges(10, &edges).unwrap();
        let q = g.modularity();
        let mut state = SphereState::new(&q, init_sphere(10, 3, 5).unwrap()).unwrap();
        for _ in 0..5 {
            for u in 0..10 {
                let upd = state.update_node(u);
                assert!(upd.cos_after >= upd.cos_before - 1e-12);
                assert!(upd.delta >= -1e-15);
            }
        }
        assert!(state.assignment().max_norm_error() < 1e-12);
    }

    #[test]
    fn config_validation() {
        assert!(SphereConfig { beta: 1.5, ..Default::default() }.validate().is_err());
        assert!(SphereConfig { k: 0, ..Default::default() }.validate().is_err());
        assert!(SphereConfig::default().validate().is_ok());
    }
}
