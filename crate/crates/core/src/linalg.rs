//! Dense linear algebra kernels: thin QR factorizations and two symmetric
//! eigensolvers (cyclic Jacobi and Householder tridiagonalization + implicit QL).

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};

pub fn dot(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

pub fn norm(a: ArrayView1<f64>) -> f64 {
    dot(a, a).sqrt()
}

/// `max |AᵀA - I|`.
pub fn orthonormality_error(a: ArrayView2<f64>) -> f64 {
    let gram = a.t().dot(&a);
    let mut worst: f64 = 0.0;
    for ((i, j), v) in gram.indexed_iter() {
        let target = if i == j { 1.0 } else { 0.0 };
        worst = worst.max((v - target).abs());
    }
    worst
}

/// Householder thin QR of an `n × c` matrix (`n ≥ c`). Returns `(Q, R)` with
/// `Q` column-orthonormal and `R` upper triangular with nonnegative diagonal.
/// Rank-deficient input still yields an orthonormal `Q`.
pub fn householder_qr(a: ArrayView2<f64>) -> (Array2<f64>, Array2<f64>) {
    let (n, c) = a.dim();
    assert!(n >= c, "thin QR needs at least as many rows as columns");
    let mut r = a.to_owned();
    let mut reflectors: Vec<Option<Array1<f64>>> = Vec::with_capacity(c);
    for j in 0..c {
        let x = r.slice(s![j.., j]).to_owned();
        let xnorm = norm(x.view());
        if xnorm == 0.0 {
            reflectors.push(None);
            continue;
        }
        let alpha = if x[0] > 0.0 { -xnorm } else { xnorm };
        let mut v = x;
        v[0] -= alpha;
        let vnorm = norm(v.view());
        if vnorm == 0.0 {
            reflectors.push(None);
            continue;
        }
        v.mapv_inplace(|e| e / vnorm);
        let mut block = r.slice_mut(s![j.., j..]);
        for mut col in block.axis_iter_mut(Axis(1)) {
            let proj = 2.0 * dot(v.view(), col.view());
            col.scaled_add(-proj, &v);
        }
        reflectors.push(Some(v));
    }

    let mut q = Array2::zeros((n, c));
    for j in 0..c {
        q[[j, j]] = 1.0;
    }
    for j in (0..c).rev() {
        if let Some(v) = &reflectors[j] {
            let mut block = q.slice_mut(s![j.., ..]);
            for mut col in block.axis_iter_mut(Axis(1)) {
                let proj = 2.0 * dot(v.view(), col.view());
                col.scaled_add(-proj, v);
            }
        }
    }

    let mut rr = Array2::zeros((c, c));
    for i in 0..c {
        for j in i..c {
            rr[[i, j]] = r[[i, j]];
        }
    }
    for j in 0..c {
        if rr[[j, j]] < 0.0 {
            q.column_mut(j).mapv_inplace(|v| -v);
            rr.row_mut(j).mapv_inplace(|v| -v);
        }
    }
    (q, rr)
}

/// Orthonormalizes the columns of `a` left to right with twice-repeated
/// Gram–Schmidt, dropping any column whose component outside the span of the
/// earlier kept columns is at most `rel_tol` times its own norm.
///
/// Returns the orthonormal basis and the indices of the kept columns.
pub fn orthonormalize_dropping(a: ArrayView2<f64>, rel_tol: f64) -> (Array2<f64>, Vec<usize>) {
    let (n, c) = a.dim();
    let mut basis: Vec<Array1<f64>> = Vec::with_capacity(c);
    let mut kept = Vec::with_capacity(c);
    for j in 0..c {
        let original = a.column(j);
        let original_norm = norm(original);
        if original_norm == 0.0 {
            continue;
        }
        let mut v = original.to_owned();
        for _ in 0..2 {
            for b in &basis {
                let proj = dot(b.view(), v.view());
                v.scaled_add(-proj, b);
            }
        }
        let vnorm = norm(v.view());
        if vnorm <= rel_tol * original_norm {
            continue;
        }
        v.mapv_inplace(|e| e / vnorm);
        basis.push(v);
        kept.push(j);
    }
    let mut q = Array2::zeros((n, basis.len()));
    for (j, b) in basis.iter().enumerate() {
        q.column_mut(j).assign(b);
    }
    (q, kept)
}

/// Eigenpairs of a symmetric matrix, eigenvalues descending, each eigenvector
/// signed so its largest-magnitude entry is positive.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: Array2<f64>,
}

/// Dispatches to Jacobi for small matrices and tridiagonal QL otherwise.
pub fn symmetric_eigen(a: ArrayView2<f64>) -> SymmetricEigen {
    if a.nrows() <= 64 {
        jacobi_eigen(a)
    } else {
        tridiagonal_eigen(a)
    }
}

/// Cyclic Jacobi rotations.
pub fn jacobi_eigen(a: ArrayView2<f64>) -> SymmetricEigen {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "matrix must be square");
    let mut m = a.to_owned();
    let mut v = Array2::eye(n);
    let scale = m.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    if scale > 0.0 {
        for _sweep in 0..100 {
            let mut off = 0.0;
            for p in 0..n {
                for q in (p + 1)..n {
                    off += m[[p, q]] * m[[p, q]];
                }
            }
            if off.sqrt() <= 1e-15 * scale {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = m[[p, q]];
                    if apq.abs() <= 1e-300 {
                        continue;
                    }
                    let app = m[[p, p]];
                    let aqq = m[[q, q]];
                    let theta = (aqq - app) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let mkp = m[[k, p]];
                        let mkq = m[[k, q]];
                        m[[k, p]] = c * mkp - s * mkq;
                        m[[k, q]] = s * mkp + c * mkq;
                    }
                    for k in 0..n {
                        let mpk = m[[p, k]];
                        let mqk = m[[q, k]];
                        m[[p, k]] = c * mpk - s * mqk;
                        m[[q, k]] = s * mpk + c * mqk;
                    }
                    for k in 0..n {
                        let vkp = v[[k, p]];
                        let vkq = v[[k, q]];
                        v[[k, p]] = c * vkp - s * vkq;
                        v[[k, q]] = s * vkp + c * vkq;
                    }
                }
            }
        }
    }
    let values: Vec<f64> = (0..n).map(|i| m[[i, i]]).collect();
    sorted(values, v)
}

/// Householder tridiagonalization followed by the implicit QL algorithm.
pub fn tridiagonal_eigen(a: ArrayView2<f64>) -> SymmetricEigen {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "matrix must be square");
    if n == 0 {
        return SymmetricEigen {
            values: Vec::new(),
            vectors: Array2::zeros((0, 0)),
        };
    }
    let mut v = a.to_owned();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(&mut v, &mut d, &mut e);
    tql2(&mut v, &mut d, &mut e);
    sorted(d, v)
}

fn tred2(v: &mut Array2<f64>, d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    for j in 0..n {
        d[j] = v[[n - 1, j]];
    }
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for dk in &d[..i] {
            scale += dk.abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[[i - 1, j]];
                v[[i, j]] = 0.0;
                v[[j, i]] = 0.0;
            }
        } else {
            for dk in &mut d[..i] {
                *dk /= scale;
                h += *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v[[j, i]] = f;
                g = e[j] + v[[j, j]] * f;
                for k in (j + 1)..i {
                    g += v[[k, j]] * d[k];
                    e[k] += v[[k, j]] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[[k, j]] -= f * e[k] + g * d[k];
                }
                d[j] = v[[i - 1, j]];
                v[[i, j]] = 0.0;
            }
        }
        d[i] = h;
    }
    for i in 0..(n - 1) {
        v[[n - 1, i]] = v[[i, i]];
        v[[i, i]] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[[k, i + 1]] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[[k, i + 1]] * v[[k, j]];
                }
                for k in 0..=i {
                    v[[k, j]] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[[k, i + 1]] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[[n - 1, j]];
        v[[n - 1, j]] = 0.0;
    }
    v[[n - 1, n - 1]] = 1.0;
    e[0] = 0.0;
}

fn tql2(v: &mut Array2<f64>, d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            loop {
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;
                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..n {
                        h = v[[k, i + 1]];
                        v[[k, i + 1]] = s * v[[k, i]] + c * h;
                        v[[k, i]] = c * v[[k, i]] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
}

fn sorted(values: Vec<f64>, vectors: Array2<f64>) -> SymmetricEigen {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let mut out = Array2::zeros((vectors.nrows(), n));
    let mut vals = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        vals.push(values[src]);
        let mut col = vectors.column(src).to_owned();
        fix_sign(&mut col);
        out.column_mut(dst).assign(&col);
    }
    SymmetricEigen {
        values: vals,
        vectors: out,
    }
}

/// Flips `v` so its largest-magnitude entry (first on ties) is positive.
pub fn fix_sign(v: &mut Array1<f64>) {
    let mut best = 0.0f64;
    let mut sign = 1.0;
    for &x in v.iter() {
        if x.abs() > best {
            best = x.abs();
            sign = x.signum();
        }
    }
    if sign < 0.0 {
        v.mapv_inplace(|x| -x);
    }
}
