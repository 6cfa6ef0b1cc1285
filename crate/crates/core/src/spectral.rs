//! Dense and iterative eigensolvers for covariance operators, cosine
//! similarity, the cosine bounds between a trace-maximizing vector and the
//! dominant eigenvector, and projection residuals.

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::graph::CovarianceOperator;
use crate::linalg::{fix_sign, householder_qr, jacobi_eigen, symmetric_eigen};

/// Largest `n` accepted for dense decomposition.
pub const MAX_DENSE: usize = 5000;
pub const ITERATION_TOL: f64 = 1e-10;
pub const MAX_ITERATIONS: usize = 10_000;

/// Slack on the bound inequalities.
pub const BOUND_SLACK: f64 = 1e-12;

/// Eigenvalues in descending order with matching unit eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Array1<f64>,
    pub eigenvectors: Array2<f64>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn vector(&self, i: usize) -> ArrayView1<'_, f64> {
        self.eigenvectors.column(i)
    }

    /// The first `k` eigenvectors.
    pub fn top(&self, k: usize) -> ArrayView2<'_, f64> {
        self.eigenvectors.slice(s![.., ..k])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigenMode {
    Full,
    TopK(usize),
}

/// Each eigenvector is signed so that its largest-magnitude entry is positive.
pub fn eigendecompose<Q: CovarianceOperator>(op: &Q, mode: EigenMode) -> Result<Spectrum> {
    match mode {
        EigenMode::Full => {
            if op.n() > MAX_DENSE {
                return Err(Error::InvalidConfig(format!(
                    "dense decomposition limited to n <= {MAX_DENSE}, got {}",
                    op.n()
                )));
            }
            let eig = symmetric_eigen(op.to_dense().view());
            Ok(signed(eig.values, eig.vectors))
        }
        EigenMode::TopK(k) => orthogonal_iteration(op, k, ITERATION_TOL, MAX_ITERATIONS),
    }
}

fn signed(values: Vec<f64>, mut vectors: Array2<f64>) -> Spectrum {
    for mut col in vectors.columns_mut() {
        let mut v = col.to_owned();
        fix_sign(&mut v);
        col.assign(&v);
    }
    Spectrum {
        eigenvalues: Array1::from(values),
        eigenvectors: vectors,
    }
}

/// Top-`k` eigenpairs by orthogonal iteration on `Q + σI`, where `σ` bounds
/// the spectral radius, followed by a Rayleigh–Ritz projection. Stops when no
/// new basis vector has a component above `tol` outside the previous span.
pub fn orthogonal_iteration<Q: CovarianceOperator>(op: &Q, k: usize, tol: f64, max_iter: usize) -> Result<Spectrum> {
    let n = op.n();
    if k == 0 || k > n {
        return Err(Error::InvalidConfig(format!("k must lie in [1, {n}], got {k}")));
    }
    let shift = op.spectral_radius_bound();
    let mut rng = crate::seeded_rng(0);
    let start = Array2::from_shape_fn((n, k), |_| StandardNormal.sample(&mut rng));
    let (mut basis, _) = householder_qr(start.view());
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let mut next = op.apply(basis.view())?;
        next.scaled_add(shift, &basis);
        let (next, _) = householder_qr(next.view());
        // component of each new vector outside the old span
        let coeffs = basis.t().dot(&next);
        let outside = &next - &basis.dot(&coeffs);
        let change = outside
            .columns()
            .into_iter()
            .map(|c| c.dot(&c).sqrt())
            .fold(0.0, f64::max);
        basis = next;
        if change < tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence(iterations));
    }
    log::debug!("orthogonal iteration converged in {iterations} iterations");
    let qb = op.apply(basis.view())?;
    let mut projected = basis.t().dot(&qb);
    let sym = (&projected + &projected.t()) * 0.5;
    projected.assign(&sym);
    let small = jacobi_eigen(projected.view());
    Ok(signed(small.values, basis.dot(&small.vectors)))
}

/// `yᵀz / (‖y‖‖z‖)`.
pub fn cosine(y: ArrayView1<f64>, z: ArrayView1<f64>) -> Result<f64> {
    if y.len() != z.len() {
        return Err(Error::DimensionMismatch {
            expected: y.len(),
            found: z.len(),
        });
    }
    let ny = y.dot(&y).sqrt();
    let nz = z.dot(&z).sqrt();
    if ny == 0.0 || nz == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok((y.dot(&z) / (ny * nz)).clamp(-1.0, 1.0))
}

/// How close a vector with a large Rayleigh quotient is to the dominant
/// eigenvector, against the guaranteed lower bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    /// `max(λ₂, -λ_n) / λ₁`.
    pub delta1: f64,
    /// `1 - xᵀQx / λ₁`.
    pub epsilon: f64,
    pub cos_x: f64,
    pub cos_qx: f64,
    pub bound_x: f64,
    pub bound_qx: f64,
    /// `λ₁` strictly dominates every other eigenvalue magnitude.
    pub spectral_gap: bool,
    pub applicable: bool,
}

impl BoundReport {
    /// The three inequalities, each `true` when it holds (or is inapplicable).
    pub fn checks(&self) -> [(&'static str, bool); 3] {
        let ok = |lhs: f64, rhs: f64| !self.applicable || lhs >= rhs - BOUND_SLACK;
        [
            ("cos_x >= bound_x", ok(self.cos_x, self.bound_x)),
            ("cos_qx >= cos_x", ok(self.cos_qx, self.cos_x)),
            ("cos_qx >= bound_qx", ok(self.cos_qx, self.bound_qx)),
        ]
    }

    pub fn holds(&self) -> bool {
        self.checks().iter().all(|(_, ok)| *ok)
    }

    pub fn to_tsv(&self) -> String {
        format!(
            "delta1\t{:.16e}\nepsilon\t{:.16e}\ncos_x\t{:.16e}\ncos_qx\t{:.16e}\nbound_x\t{:.16e}\nbound_qx\t{:.16e}\nspectral_gap\t{}\napplicable\t{}\n",
            self.delta1,
            self.epsilon,
            self.cos_x,
            self.cos_qx,
            self.bound_x,
            self.bound_qx,
            self.spectral_gap,
            self.applicable
        )
    }
}

/// Bound report for the first column of `h`, computing the full spectrum.
pub fn bound_report<Q: CovarianceOperator>(op: &Q, h: ArrayView2<f64>) -> Result<BoundReport> {
    let full = op.with_diag_zeroed(false);
    let spectrum = eigendecompose(&full, EigenMode::Full)?;
    bound_report_with(&full, &spectrum, h.column(0))
}

/// Bound report for vector `x` (normalized here) given the spectrum of `op`.
pub fn bound_report_with<Q: CovarianceOperator>(
    op: &Q,
    spectrum: &Spectrum,
    x: ArrayView1<f64>,
) -> Result<BoundReport> {
    let n = op.n();
    if x.len() != n || spectrum.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: x.len().min(spectrum.len()),
        });
    }
    let norm = x.dot(&x).sqrt();
    if norm == 0.0 {
        return Err(Error::ZeroVector);
    }
    let x = &x / norm;
    let qx = op
        .apply(x.view().insert_axis(Axis(1)))?
        .index_axis_move(Axis(1), 0);

    let lambda1 = spectrum.eigenvalues[0];
    let slem = if n > 1 {
        spectrum.eigenvalues[1].max(-spectrum.eigenvalues[n - 1])
    } else {
        0.0
    };
    let spectral_gap = lambda1 > 0.0 && lambda1 > slem;
    let delta1 = if lambda1 > 0.0 { slem / lambda1 } else { f64::NAN };

    let mut v1 = spectrum.vector(0).to_owned();
    if v1.dot(&x) < 0.0 {
        v1 = -v1;
    }
    let cos_x = cosine(v1.view(), x.view())?;
    let cos_qx = if qx.dot(&qx) > 0.0 { cosine(v1.view(), qx.view())? } else { 0.0 };

    let mut epsilon = 1.0 - x.dot(&qx) / lambda1;
    if (-BOUND_SLACK..0.0).contains(&epsilon) {
        epsilon = 0.0;
    }
    let applicable = spectral_gap && epsilon >= 0.0 && epsilon <= 1.0 - delta1;
    let (bound_x, bound_qx) = if applicable {
        let head = (1.0 - epsilon - delta1).max(0.0);
        (
            (head / (1.0 - delta1)).sqrt(),
            (head / (head + delta1 * delta1)).sqrt(),
        )
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(BoundReport {
        delta1,
        epsilon,
        cos_x,
        cos_qx,
        bound_x,
        bound_qx,
        spectral_gap,
        applicable,
    })
}

/// `1 - Σ_ℓ (Ĥ_jᵀ v_ℓ)²` for each column `j` of `h_hat`, against the columns
/// of `v`.
pub fn projection_residual(h_hat: ArrayView2<f64>, v: ArrayView2<f64>) -> Result<Array1<f64>> {
    if h_hat.nrows() != v.nrows() {
        return Err(Error::DimensionMismatch {
            expected: v.nrows(),
            found: h_hat.nrows(),
        });
    }
    let coeffs = v.t().dot(&h_hat);
    Ok(coeffs.map_axis(Axis(0), |c| (1.0 - c.dot(&c)).clamp(0.0, 1.0)))
}
