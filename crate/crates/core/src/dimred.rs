//! Dimensionality reduction: the clustering and embedding machinery applied to
//! the Gram matrix `Q = XXᵀ` of a centered point cloud, compared against PCA.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand_distr::{Distribution, StandardNormal};

use crate::cafe::{qr_embed_keep_all, EmbeddingMatrix};
use crate::error::{Error, Result};
use crate::graph::CovarianceOperator;
use crate::linalg::{householder_qr, symmetric_eigen};
use crate::softmax::{self, ClusterConfig};
use crate::spectral::projection_residual;
use crate::sphere::{self, SphereConfig};

/// Relative tolerance on column sums for a cloud to count as centered.
pub const CENTERING_TOL: f64 = 1e-9;

/// Residual at or below which an embedding column is considered inside the
/// top-`K` principal subspace.
pub const SELECT_TOL: f64 = 1e-3;

/// `n × L` coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    x: Array2<f64>,
    centered: bool,
}

impl PointCloud {
    pub fn new(x: Array2<f64>) -> Self {
        let centered = max_column_sum(x.view()) <= centering_limit(x.view());
        Self { x, centered }
    }

    pub fn coords(&self) -> ArrayView2<'_, f64> {
        self.x.view()
    }

    pub fn into_coords(self) -> Array2<f64> {
        self.x
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn dim(&self) -> usize {
        self.x.ncols()
    }

    pub fn is_centered(&self) -> bool {
        self.centered
    }

    /// Subtracts the centroid.
    pub fn center(&self) -> PointCloud {
        center(self.x.view())
    }
}

fn max_column_sum(x: ArrayView2<f64>) -> f64 {
    x.sum_axis(Axis(0)).iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn centering_limit(x: ArrayView2<f64>) -> f64 {
    let scale = x.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    CENTERING_TOL * x.nrows().max(1) as f64 * scale
}

pub fn center(x: ArrayView2<f64>) -> PointCloud {
    let mut x = x.to_owned();
    if x.nrows() > 0 {
        let mean = x.mean_axis(Axis(0)).expect("non-empty");
        x -= &mean;
    }
    PointCloud { x, centered: true }
}

/// `d × L` matrix with orthonormal rows: Gaussian rows, orthonormalized.
pub fn random_orthonormal_rows(d: usize, l: usize, seed: u64) -> Result<Array2<f64>> {
    if l < d {
        return Err(Error::LiftDimension { target: l, dim: d });
    }
    let mut rng = crate::seeded_rng(seed);
    let g = Array2::from_shape_fn((l, d), |_| StandardNormal.sample(&mut rng));
    let (q, _) = householder_qr(g.view());
    Ok(q.reversed_axes())
}

/// Embeds the cloud in `L` dimensions with a seeded random isometry.
pub fn embed_lift(cloud: &PointCloud, l: usize, seed: u64) -> Result<PointCloud> {
    let omega = random_orthonormal_rows(cloud.dim(), l, seed)?;
    embed_lift_with(cloud, omega.view())
}

pub fn embed_lift_with(cloud: &PointCloud, omega: ArrayView2<f64>) -> Result<PointCloud> {
    if omega.nrows() != cloud.dim() {
        return Err(Error::DimensionMismatch {
            expected: cloud.dim(),
            found: omega.nrows(),
        });
    }
    if omega.ncols() < omega.nrows() {
        return Err(Error::LiftDimension {
            target: omega.ncols(),
            dim: omega.nrows(),
        });
    }
    Ok(PointCloud {
        x: cloud.x.dot(&omega),
        centered: cloud.centered,
    })
}

/// Implicit `Q = XXᵀ`. Its aggregate is `W = XᵀH`, so `z_u = Wᵀx_u - ‖x_u‖²h_u`
/// costs `O(LK)`.
#[derive(Debug, Clone, Copy)]
pub struct GramOperator<'a> {
    x: ArrayView2<'a, f64>,
    diag_zeroed: bool,
}

impl<'a> GramOperator<'a> {
    pub fn points(&self) -> ArrayView2<'a, f64> {
        self.x
    }
}

/// Fails with [`Error::NotCentered`] unless every column sums to zero.
pub fn gram_modularity(cloud: &PointCloud) -> Result<GramOperator<'_>> {
    let worst = max_column_sum(cloud.x.view());
    if worst > centering_limit(cloud.x.view()) {
        return Err(Error::NotCentered(worst));
    }
    Ok(GramOperator {
        x: cloud.x.view(),
        diag_zeroed: false,
    })
}

impl CovarianceOperator for GramOperator<'_> {
    fn n(&self) -> usize {
        self.x.nrows()
    }

    fn diag_zeroed(&self) -> bool {
        self.diag_zeroed
    }

    fn with_diag_zeroed(&self, zeroed: bool) -> Self {
        Self {
            x: self.x,
            diag_zeroed: zeroed,
        }
    }

    fn self_covariance(&self, u: usize) -> f64 {
        self.x.row(u).dot(&self.x.row(u))
    }

    fn entry(&self, u: usize, w: usize) -> f64 {
        if u == w && self.diag_zeroed {
            0.0
        } else {
            self.x.row(u).dot(&self.x.row(w))
        }
    }

    fn apply(&self, h: ArrayView2<f64>) -> Result<Array2<f64>> {
        if h.nrows() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                found: h.nrows(),
            });
        }
        let mut out = self.x.dot(&self.x.t().dot(&h));
        if self.diag_zeroed {
            for u in 0..self.n() {
                let quu = self.self_covariance(u);
                out.row_mut(u).scaled_add(-quu, &h.row(u));
            }
        }
        Ok(out)
    }

    fn aggregate(&self, h: ArrayView2<f64>) -> Array2<f64> {
        self.x.t().dot(&h)
    }

    fn off_diagonal_product(&self, h: ArrayView2<f64>, aggregate: &Array2<f64>, u: usize, out: &mut [f64]) -> usize {
        let xu = self.x.row(u);
        let norm2 = xu.dot(&xu);
        let k = h.ncols();
        for c in 0..k {
            out[c] = xu.dot(&aggregate.column(c)) - norm2 * h[[u, c]];
        }
        (xu.len() + 1) * k + xu.len()
    }

    fn shift_aggregate(&self, aggregate: &mut Array2<f64>, u: usize, old: &[f64], new: &[f64]) {
        let xu = self.x.row(u);
        for c in 0..old.len() {
            let d = new[c] - old[c];
            if d != 0.0 {
                aggregate.column_mut(c).scaled_add(d, &xu);
            }
        }
    }

    fn spectral_radius_bound(&self) -> f64 {
        self.x.iter().map(|v| v * v).sum()
    }
}

/// Row-wise softmax of `θ·M`.
fn softmax_rows(m: &Array2<f64>, theta: f64) -> Array2<f64> {
    let mut h = m * theta;
    for mut row in h.rows_mut() {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|v| (v - max).exp());
        let total = row.sum();
        row /= total;
    }
    h
}

#[derive(Debug, Clone)]
pub struct WeightIteration {
    /// `L × K`.
    pub weights: Array2<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Sweep-synchronous iteration `W ← Xᵀ softmax(θ XW)` from `W = XᵀH₀`, until
/// `‖ΔW‖ / ‖W‖ < 1e-9` or `max_sweeps`.
pub fn weight_iteration(cloud: &PointCloud, h0: ArrayView2<f64>, theta: f64, max_sweeps: usize) -> Result<WeightIteration> {
    let op = gram_modularity(cloud)?;
    if h0.nrows() != op.n() {
        return Err(Error::DimensionMismatch {
            expected: op.n(),
            found: h0.nrows(),
        });
    }
    let x = cloud.coords();
    let mut w = weights_from_assignment(cloud, h0);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_sweeps {
        iterations += 1;
        let next = x.t().dot(&softmax_rows(&x.dot(&w), theta));
        let change = (&next - &w).iter().map(|v| v * v).sum::<f64>().sqrt();
        let size = next.iter().map(|v| v * v).sum::<f64>().sqrt();
        w = next;
        if change <= 1e-9 * size {
            converged = true;
            break;
        }
    }
    Ok(WeightIteration {
        weights: w,
        iterations,
        converged,
    })
}

/// `W = XᵀH`; for a hard partition column `j` is the sum of the points in
/// cluster `j`.
pub fn weights_from_assignment(cloud: &PointCloud, h: ArrayView2<f64>) -> Array2<f64> {
    cloud.coords().t().dot(&h)
}

/// Top-`k` eigenpairs of `XXᵀ` through the `L × L` matrix `XᵀX`:
/// `v = Xu / σ` for each eigenpair `(σ², u)`.
pub fn principal_components(cloud: &PointCloud, k: usize) -> Result<(Array1<f64>, Array2<f64>)> {
    let x = cloud.coords();
    let k_eff = k.min(x.ncols()).min(x.nrows());
    if k_eff < k {
        return Err(Error::InvalidConfig(format!(
            "k = {k} exceeds the rank bound min(n, L) = {k_eff}"
        )));
    }
    let gram = x.t().dot(&x);
    let eig = symmetric_eigen(gram.view());
    let mut vectors = Array2::zeros((x.nrows(), k));
    for j in 0..k {
        let sigma = eig.values[j].max(0.0).sqrt();
        if sigma > 0.0 {
            let v = x.dot(&eig.vectors.column(j)) / sigma;
            vectors.column_mut(j).assign(&v);
        }
    }
    // directions with zero variance are completed to an orthonormal basis
    let (q, _) = householder_qr(vectors.view());
    for j in 0..k {
        if eig.values[j] <= 0.0 {
            vectors.column_mut(j).assign(&q.column(j));
        }
    }
    Ok((Array1::from(eig.values[..k].to_vec()), vectors))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReduceMethod {
    Cafe,
    Sphere,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReduceConfig {
    pub k: usize,
    pub theta: f64,
    pub beta: f64,
    pub method: ReduceMethod,
    pub max_sweeps: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for ReduceConfig {
    fn default() -> Self {
        Self {
            k: 6,
            theta: 0.01,
            beta: 0.5,
            method: ReduceMethod::Cafe,
            max_sweeps: 200,
            tol: 1e-9,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Reduction {
    /// The full `n × K` assignment, no columns removed.
    pub assignment: Array2<f64>,
    pub embedding: EmbeddingMatrix,
    /// One per embedding column.
    pub residuals: Array1<f64>,
    /// Top-`K` eigenvalues of `XXᵀ`.
    pub eigenvalues: Array1<f64>,
    /// Objective before the first sweep, then after each sweep.
    pub trace: Vec<f64>,
}

impl Reduction {
    /// Columns whose residual is at most `tol`.
    pub fn selected_columns(&self, tol: f64) -> Vec<usize> {
        (0..self.residuals.len()).filter(|&j| self.residuals[j] <= tol).collect()
    }

    /// Coordinates of the cloud projected onto the span of the selected
    /// embedding columns, expressed in an orthonormal basis of that span, so
    /// the result is `n × |columns|`.
    pub fn reconstruct(&self, cloud: &PointCloud, columns: &[usize]) -> Array2<f64> {
        let h = self.embedding.matrix().select(Axis(1), columns);
        let coeffs = h.t().dot(&cloud.coords());
        let (basis, _) = householder_qr(coeffs.t());
        h.dot(&coeffs.dot(&basis))
    }
}

/// Runs the chosen method on `XXᵀ` keeping every column of the assignment,
/// then compares the QR embedding with the top-`K` principal components.
/// Uncentered input is centered first.
pub fn reduce(cloud: &PointCloud, config: &ReduceConfig) -> Result<Reduction> {
    let centered;
    let cloud = if cloud.is_centered() {
        cloud
    } else {
        centered = cloud.center();
        &centered
    };
    let op = gram_modularity(cloud)?;
    let (assignment, trace) = match config.method {
        ReduceMethod::Cafe => {
            let cfg = ClusterConfig {
                k: config.k,
                theta: config.theta,
                max_sweeps: config.max_sweeps,
                tol: config.tol,
                seed: config.seed,
            };
            let run = softmax::run(&op, &cfg, &[])?;
            (run.assignment.into_matrix(), run.trace)
        }
        ReduceMethod::Sphere => {
            let cfg = SphereConfig {
                k: config.k,
                beta: config.beta,
                max_sweeps: config.max_sweeps,
                tol: config.tol,
                seed: config.seed,
            };
            let run = sphere::run_sphere(&op, &cfg)?;
            (run.assignment.into_matrix(), run.trace)
        }
    };
    let embedding = qr_embed_keep_all(&op, assignment.view())?;
    let (eigenvalues, vectors) = principal_components(cloud, config.k)?;
    let residuals = projection_residual(embedding.matrix(), vectors.view())?;
    Ok(Reduction {
        assignment,
        embedding,
        residuals,
        eigenvalues,
        trace,
    })
}

/// Pearson correlation between the pairwise distances of two clouds.
pub fn distance_correlation(a: ArrayView2<f64>, b: ArrayView2<f64>) -> f64 {
    let n = a.nrows();
    let mut da = Vec::with_capacity(n * (n - 1) / 2);
    let mut db = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let d = &a.row(i) - &a.row(j);
            da.push(d.dot(&d).sqrt());
            let d = &b.row(i) - &b.row(j);
            db.push(d.dot(&d).sqrt());
        }
    }
    let m = da.len() as f64;
    let (ma, mb) = (da.iter().sum::<f64>() / m, db.iter().sum::<f64>() / m);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in da.iter().zip(&db) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn center_examples() {
        let c = center(array![[1.0, 0.0], [3.0, 0.0]].view());
        assert_eq!(c.coords(), array![[-1.0, 0.0], [1.0, 0.0]]);
        assert_eq!(c.center(), c);
        let single = center(array![[4.0, -2.0, 7.0]].view());
        assert!(single.coords().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn lift_preserves_gram() {
        let cloud = center(crate::generators::concentric_circles(16).view());
        let lifted = embed_lift(&cloud, 30, 4).unwrap();
        assert_eq!(lifted.dim(), 30);
        let g0 = cloud.coords().dot(&cloud.coords().t());
        let g1 = lifted.coords().dot(&lifted.coords().t());
        assert!((&g0 - &g1).iter().all(|v| v.abs() < 1e-10));
        assert!(matches!(embed_lift(&cloud, 1, 0), Err(Error::LiftDimension { .. })));
        let same = embed_lift_with(&cloud, Array2::eye(2).view()).unwrap();
        assert_eq!(same, cloud);
    }

    #[test]
    fn gram_rejects_uncentered_and_kills_ones() {
        let raw = PointCloud::new(array![[1.0, 0.0], [3.0, 1.0]]);
        assert!(matches!(gram_modularity(&raw), Err(Error::NotCentered(_))));
        let cloud = raw.center();
        let op = gram_modularity(&cloud).unwrap();
        let ones = Array2::ones((2, 1));
        assert!(op.apply(ones.view()).unwrap().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn hard_partition_weights_are_cluster_sums() {
        let cloud = center(array![[0.0, 0.0], [1.0, 0.0], [4.0, 2.0], [5.0, 2.0]].view());
        let h = array![[1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, 1.0]];
        let w = weights_from_assignment(&cloud, h.view());
        let x = cloud.coords();
        for d in 0..2 {
            assert_eq!(w[[d, 0]], x[[0, d]] + x[[1, d]]);
            assert_eq!(w[[d, 1]], x[[2, d]] + x[[3, d]]);
        }
        let one = weights_from_assignment(&cloud, Array2::ones((4, 1)).view());
        assert!(one.iter().all(|v| v.abs() < 1e-12));
    }
}
