//! Dense complex matrix helpers shared by every module.
//!
//! Matrices are `ndarray::Array2<Complex64>` throughout; the operator norm is
//! computed as the largest singular value via a Hermitian eigendecomposition
//! of `M*M`, which is accurate and cheap at desk-scale dimensions.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eigh, Inverse, UPLO};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = Array2<C64>;
pub type CVector = Array1<C64>;

pub fn identity(n: usize) -> CMatrix {
    Array2::eye(n)
}

pub fn zeros(n: usize) -> CMatrix {
    Array2::zeros((n, n))
}

/// Conjugate transpose.
pub fn adjoint(m: &CMatrix) -> CMatrix {
    m.t().mapv(|z| z.conj())
}

pub fn all_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Hermitian inner product `<u, v> = sum conj(u_i) v_i`.
pub fn inner(u: &CVector, v: &CVector) -> C64 {
    u.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum()
}

pub fn vec_norm(v: &CVector) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn normalize(v: &CVector) -> CVector {
    let n = vec_norm(v);
    v.mapv(|z| z / n)
}

/// Rank-one projection `v v*` onto the span of a unit vector.
pub fn rank_one(v: &CVector) -> CMatrix {
    let n = v.len();
    let mut p = zeros(n);
    for i in 0..n {
        for j in 0..n {
            p[[i, j]] = v[i] * v[j].conj();
        }
    }
    p
}

/// Hermitian eigendecomposition; eigenvalues ascending, orthonormal columns.
pub fn herm_eig(m: &CMatrix) -> Result<(Array1<f64>, CMatrix)> {
    let (vals, vecs) = m.eigh(UPLO::Lower)?;
    // ndarray-linalg hands the complex eigenvector array back in LAPACK's
    // column-major layout; conjugating makes column k the eigenvector of
    // vals[k] under the row-major view
    Ok((vals, vecs.mapv(|z| z.conj())))
}

/// Operator norm: largest singular value, via eigendecomposition of `M*M`.
pub fn op_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let gram = adjoint(m).dot(m);
    match herm_eig(&gram) {
        Ok((vals, _)) => vals.iter().fold(0.0_f64, |a, &b| a.max(b)).max(0.0).sqrt(),
        // eigh can only fail on non-finite input; fall back to the Frobenius bound
        Err(_) => m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt(),
    }
}

/// Smallest singular value.
pub fn smallest_singular_value(m: &CMatrix) -> f64 {
    let gram = adjoint(m).dot(m);
    match herm_eig(&gram) {
        Ok((vals, _)) => vals
            .iter()
            .fold(f64::INFINITY, |a, &b| a.min(b))
            .max(0.0)
            .sqrt(),
        Err(_) => 0.0,
    }
}

/// `||MM* - M*M||`, the normality defect.
pub fn normality_residual(m: &CMatrix) -> f64 {
    let mstar = adjoint(m);
    let d = m.dot(&mstar) - mstar.dot(m);
    op_norm(&d)
}

/// `||U*U - I||`, the unitarity defect.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let n = u.nrows();
    let d = adjoint(u).dot(u) - identity(n);
    op_norm(&d)
}

/// `||M - M*||`, the Hermitian defect.
pub fn hermitian_defect(m: &CMatrix) -> f64 {
    let d = m - &adjoint(m);
    op_norm(&d)
}

pub fn require_square(m: &CMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(m.nrows())
}

/// Resolvent `(z - M)^{-1}`.
pub fn resolvent(m: &CMatrix, z: C64) -> Result<CMatrix> {
    let n = m.nrows();
    let mut shifted = -m.clone();
    for i in 0..n {
        shifted[[i, i]] += z;
    }
    Ok(shifted.inv()?)
}

/// Eigendecomposition of a normal matrix through its commuting Hermitian and
/// skew-Hermitian parts: diagonalize `H = (M + M*)/2`, then diagonalize
/// `K = (M - M*)/2i` restricted to each near-degenerate `H`-eigenspace.
/// Returns eigenvalues with an orthonormal eigenbasis (columns).
///
/// The cluster width starts tight and widens until the eigen-residuals pass;
/// a normal input always succeeds because `H` and `K` commute.
pub fn normal_eig(m: &CMatrix) -> Result<(Vec<C64>, CMatrix)> {
    let n = require_square(m)?;
    if !all_finite(m) {
        return Err(Error::NonFinite);
    }
    if n == 0 {
        return Ok((vec![], zeros(0)));
    }
    let mstar = adjoint(m);
    let h = (m + &mstar).mapv(|z| z * 0.5);
    let k = (m - &mstar).mapv(|z| z * C64::new(0.0, -0.5));
    let scale = op_norm(m).max(1.0);

    let mut cluster_tol = 1e-12 * scale;
    let mut last_err = f64::INFINITY;
    for _ in 0..4 {
        let (vals, vecs) = simultaneous_diag(&h, &k, cluster_tol)?;
        let max_residual = eigen_residual(m, &vals, &vecs);
        if max_residual <= 1e-10 * scale {
            return Ok((vals, vecs));
        }
        last_err = max_residual;
        cluster_tol *= 1e3;
    }
    Err(Error::Linalg(format!(
        "normal eigendecomposition did not converge: residual {last_err:.3e}"
    )))
}

fn eigen_residual(m: &CMatrix, vals: &[C64], vecs: &CMatrix) -> f64 {
    let mv = m.dot(vecs);
    let mut worst = 0.0_f64;
    for (j, &lambda) in vals.iter().enumerate() {
        let r: f64 = (0..m.nrows())
            .map(|i| (mv[[i, j]] - lambda * vecs[[i, j]]).norm_sqr())
            .sum::<f64>()
            .sqrt();
        worst = worst.max(r);
    }
    worst
}

fn simultaneous_diag(h: &CMatrix, k: &CMatrix, cluster_tol: f64) -> Result<(Vec<C64>, CMatrix)> {
    let n = h.nrows();
    let (hvals, hvecs) = herm_eig(h)?;
    let mut vecs = hvecs;
    let mut vals = vec![C64::new(0.0, 0.0); n];

    // hvals ascending; walk clusters of near-equal values
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (hvals[end] - hvals[end - 1]).abs() <= cluster_tol {
            end += 1;
        }
        let width = end - start;
        if width == 1 {
            let col = vecs.column(start).to_owned();
            let kcol = k.dot(&col);
            let kval = inner(&col, &kcol);
            vals[start] = C64::new(hvals[start], kval.re);
        } else {
            // project K onto the cluster and rediagonalize
            let block = vecs.slice(ndarray::s![.., start..end]).to_owned();
            let kb = adjoint(&block).dot(&k.dot(&block));
            // enforce exact Hermitian symmetry before eigh
            let kb = (&kb + &adjoint(&kb)).mapv(|z| z * 0.5);
            let (kvals, w) = herm_eig(&kb)?;
            let rotated = block.dot(&w);
            for (off, kv) in kvals.iter().enumerate() {
                let col = rotated.column(off).to_owned();
                let hcol = h.dot(&col);
                let hval = inner(&col, &hcol).re;
                vals[start + off] = C64::new(hval, *kv);
                vecs.column_mut(start + off).assign(&rotated.column(off));
            }
        }
        start = end;
    }
    Ok((vals, vecs))
}

/// Deterministic unitary completion: extend the orthonormal columns of
/// `basis` (dim x k) to a full orthonormal basis by Gram-Schmidt against
/// canonical basis vectors in index order.
pub fn complete_unitary(basis: &CMatrix) -> Result<CMatrix> {
    let dim = basis.nrows();
    let k = basis.ncols();
    let mut cols: Vec<CVector> = (0..k).map(|j| basis.column(j).to_owned()).collect();
    let mut e = 0usize;
    while cols.len() < dim {
        if e >= dim {
            return Err(Error::SpanDeficient(0));
        }
        let mut v: CVector = Array1::zeros(dim);
        v[e] = C64::new(1.0, 0.0);
        for c in &cols {
            let coeff = inner(c, &v);
            v = &v - &c.mapv(|z| z * coeff);
        }
        let nrm = vec_norm(&v);
        if nrm > 1e-6 {
            cols.push(v.mapv(|z| z / nrm));
        }
        e += 1;
    }
    let mut u = zeros(dim);
    for (j, c) in cols.iter().enumerate() {
        u.column_mut(j).assign(c);
    }
    Ok(u)
}

/// Compression `P_m M P_m`: zero all rows and columns with index >= m.
pub fn compress(m: &CMatrix, rank: usize) -> CMatrix {
    let n = m.nrows();
    let mut out = zeros(n);
    let r = rank.min(n);
    for i in 0..r {
        for j in 0..r {
            out[[i, j]] = m[[i, j]];
        }
    }
    out
}

/// Top-left `rank x rank` corner as its own matrix.
pub fn corner(m: &CMatrix, rank: usize) -> CMatrix {
    let r = rank.min(m.nrows());
    m.slice(ndarray::s![..r, ..r]).to_owned()
}

/// Embed `small` into the top-left corner of an `n x n` matrix, with `fill`
/// on the remaining diagonal.
pub fn embed(small: &CMatrix, n: usize, fill: C64) -> CMatrix {
    let k = small.nrows();
    assert!(k <= n);
    let mut out = zeros(n);
    for i in 0..k {
        for j in 0..k {
            out[[i, j]] = small[[i, j]];
        }
    }
    for i in k..n {
        out[[i, i]] = fill;
    }
    out
}

pub fn from_diag(d: &[C64]) -> CMatrix {
    let n = d.len();
    let mut m = zeros(n);
    for (i, &z) in d.iter().enumerate() {
        m[[i, i]] = z;
    }
    m
}
