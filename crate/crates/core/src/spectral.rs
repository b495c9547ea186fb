//! Spectral kernels for normal matrices: thresholded eigenframes, spectral
//! projections by contour quadrature of the resolvent, separation radii, and
//! the Hermitian PSD square root.

use std::f64::consts::PI;

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::matrix::{self, CMatrix, CVector, C64};
use crate::path::{OperatorPath, OperatorSample};

/// Thresholded eigendecomposition at one grid point: eigenvalues of modulus
/// above the threshold paired with unit eigenvectors. Everything at or below
/// the threshold is charged to the tail and never tracked.
#[derive(Debug, Clone)]
pub struct SpectralFrame {
    pub point_index: usize,
    pub values: Vec<C64>,
    /// dim x len matrix whose column k is the unit eigenvector of values[k].
    pub vectors: CMatrix,
    pub threshold: f64,
}

impl SpectralFrame {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn vector(&self, k: usize) -> CVector {
        self.vectors.column(k).to_owned()
    }

    /// Rank-one eigenprojection `v_k v_k*`.
    pub fn projection(&self, k: usize) -> CMatrix {
        matrix::rank_one(&self.vector(k))
    }

    /// Sum of the retained eigenprojections.
    pub fn retained_projection(&self) -> CMatrix {
        let mut p = matrix::zeros(self.dim());
        for k in 0..self.len() {
            p = p + self.projection(k);
        }
        p
    }

    /// Distance from `z` to the nearest retained eigenvalue other than `k`.
    pub fn separation(&self, k: usize) -> f64 {
        let z = self.values[k];
        self.values
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != k)
            .map(|(_, w)| (z - w).norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest invariant defect: Hermiticity/idempotence/trace of each
    /// projection, pairwise orthogonality, and the eigenrelation residual.
    pub fn max_defect(&self, sample: &OperatorSample) -> f64 {
        let mut worst = 0.0_f64;
        for k in 0..self.len() {
            let p = self.projection(k);
            worst = worst.max(matrix::hermitian_defect(&p));
            worst = worst.max(matrix::op_norm(&(&p.dot(&p) - &p)));
            let tr: C64 = (0..self.dim()).map(|i| p[[i, i]]).sum();
            worst = worst.max((tr - C64::new(1.0, 0.0)).norm());
            let mv = sample.matrix.dot(&self.vector(k));
            let r: f64 = mv
                .iter()
                .zip(self.vector(k).iter())
                .map(|(a, b)| (a - self.values[k] * b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            worst = worst.max(r);
            for j in 0..k {
                let q = self.projection(j);
                worst = worst.max(matrix::op_norm(&p.dot(&q)));
            }
        }
        worst
    }
}

/// Eigendecompose a validated normal sample, retaining eigenvalues of
/// modulus strictly above `threshold`, in deterministic (re, im) order.
///
/// Fails with `MultiplicityViolation` when two retained eigenvalues sit
/// closer than `tol.gap_min`: such inputs are outside the multiplicity-free
/// hypothesis every downstream argument relies on.
pub fn eigen_frame(
    sample: &OperatorSample,
    point_index: usize,
    threshold: f64,
    tol: &Tolerances,
) -> Result<SpectralFrame> {
    let (vals, vecs) = matrix::normal_eig(&sample.matrix)?;
    let mut retained: Vec<(C64, usize)> = vals
        .iter()
        .enumerate()
        .filter(|(_, v)| v.norm() > threshold)
        .map(|(k, v)| (*v, k))
        .collect();
    retained.sort_by(|a, b| {
        (a.0.re, a.0.im)
            .partial_cmp(&(b.0.re, b.0.im))
            .expect("finite eigenvalues")
    });
    let values: Vec<C64> = retained.iter().map(|(v, _)| *v).collect();
    for i in 0..values.len() {
        for j in (i + 1)..values.len() {
            let gap = (values[i] - values[j]).norm();
            if gap <= tol.gap_min {
                return Err(Error::MultiplicityViolation {
                    i,
                    j,
                    gap,
                    min: tol.gap_min,
                });
            }
        }
    }
    let dim = sample.dim();
    let mut vectors = CMatrix::zeros((dim, values.len()));
    for (slot, (_, k)) in retained.iter().enumerate() {
        vectors.column_mut(slot).assign(&vecs.column(*k));
    }
    Ok(SpectralFrame {
        point_index,
        values,
        vectors,
        threshold,
    })
}

/// Result of a contour quadrature: the projection candidate plus its
/// measured defects and the estimated quadrature error.
#[derive(Debug, Clone)]
pub struct RieszProjection {
    pub matrix: CMatrix,
    pub nodes: usize,
    /// `||Q^2 - Q||`.
    pub idempotence_defect: f64,
    /// `||Q - Q*||`.
    pub hermitian_defect: f64,
    /// Norm change over the last node doubling.
    pub quadrature_error: f64,
}

/// Trapezoidal contour quadrature of the resolvent around the positively
/// oriented circle `|z - center| = radius`, with adaptive node doubling
/// until the result is stable.
pub fn riesz_projection(
    sample: &OperatorSample,
    center: C64,
    radius: f64,
    nodes: usize,
    tol: &Tolerances,
) -> Result<RieszProjection> {
    if nodes < 16 {
        return Err(Error::PreconditionViolated(
            "contour quadrature needs at least 16 nodes".to_string(),
        ));
    }
    let (vals, _) = matrix::normal_eig(&sample.matrix)?;
    let margin = (1e-6 * radius).max(1e-12);
    let dist = vals
        .iter()
        .map(|v| ((v - center).norm() - radius).abs())
        .fold(f64::INFINITY, f64::min);
    if dist < margin {
        return Err(Error::ContourHitsSpectrum { dist, margin });
    }

    let scale = matrix::op_norm(&sample.matrix).max(1.0);
    let quad_tol = tol.norm_scale(scale);
    let mut n = nodes;
    let mut q = contour_sum(&sample.matrix, center, radius, n)?;
    loop {
        let q2 = contour_sum(&sample.matrix, center, radius, 2 * n)?;
        let delta = matrix::op_norm(&(&q2 - &q));
        if delta <= quad_tol {
            let idempotence_defect = matrix::op_norm(&(&q2.dot(&q2) - &q2));
            let hermitian_defect = matrix::hermitian_defect(&q2);
            return Ok(RieszProjection {
                matrix: q2,
                nodes: 2 * n,
                idempotence_defect,
                hermitian_defect,
                quadrature_error: delta,
            });
        }
        n *= 2;
        q = q2;
        if n > 1 << 14 {
            return Err(Error::QuadratureNotConverged { delta, nodes: n });
        }
    }
}

/// Raw trapezoidal sum at a fixed node count (no adaptivity), exposed so the
/// convergence rate itself can be measured.
pub fn contour_sum(m: &CMatrix, center: C64, radius: f64, nodes: usize) -> Result<CMatrix> {
    let dim = m.nrows();
    let mut acc = matrix::zeros(dim);
    // fixed ascending node order keeps the sum bit-stable
    for k in 0..nodes {
        let theta = 2.0 * PI * k as f64 / nodes as f64;
        let w = C64::from_polar(1.0, theta);
        let z = center + radius * w;
        let r = matrix::resolvent(m, z)?;
        acc = acc + r.mapv(|v| v * w);
    }
    Ok(acc.mapv(|v| v * C64::new(radius / nodes as f64, 0.0)))
}

/// Separation data for one frame: per retained eigenvalue, the ball radius
/// `delta_i`, a resolvent floor `r_i` probed on the surrounding annulus, and
/// the derived perturbation budgets.
#[derive(Debug, Clone)]
pub struct GapData {
    pub deltas: Vec<f64>,
    pub resolvent_floor: Vec<f64>,
    pub stability: Vec<f64>,
    pub continuity: Vec<f64>,
}

/// `delta_i = (1/3) min(gap to other retained values, |lambda_i| - threshold,
/// |lambda_i|)`; the 1/3 keeps all balls pairwise disjoint and disjoint from
/// a ball around zero with margin.
pub fn separation_radii(frame: &SpectralFrame, sample: &OperatorSample) -> Result<GapData> {
    let n = frame.len();
    let mut deltas = Vec::with_capacity(n);
    let mut floors = Vec::with_capacity(n);
    for k in 0..n {
        let v = frame.values[k];
        let sep = frame.separation(k);
        let to_zero = v.norm();
        let to_threshold = v.norm() - frame.threshold;
        let delta = sep.min(to_zero).min(to_threshold) / 3.0;
        if delta <= 0.0 {
            return Err(Error::PreconditionViolated(format!(
                "eigenvalue {k} has no positive separation radius"
            )));
        }
        // probe the annulus radius in [delta/4, delta/2] at 64 points for the
        // smallest singular value of (z - M)
        let mut floor = f64::INFINITY;
        for ring in 0..2 {
            let r = if ring == 0 { delta / 4.0 } else { delta / 2.0 };
            for a in 0..32 {
                let z = v + C64::from_polar(r, 2.0 * PI * a as f64 / 32.0);
                let mut shifted = -sample.matrix.clone();
                for i in 0..sample.dim() {
                    shifted[[i, i]] += z;
                }
                floor = floor.min(matrix::smallest_singular_value(&shifted));
            }
        }
        if floor < 1e-14 {
            return Err(Error::PreconditionViolated(format!(
                "resolvent nearly singular on the annulus around eigenvalue {k}"
            )));
        }
        deltas.push(delta);
        floors.push(floor);
    }
    Ok(GapData {
        deltas: deltas.clone(),
        resolvent_floor: floors.clone(),
        stability: floors.clone(),
        continuity: floors,
    })
}

/// Verify that a contour of radius `beta/2` around `center` captures exactly
/// one eigenvalue at grid point `g` and at its neighbors, by the trace of
/// the contour projection.
///
/// Neighbors must lie within the norm-perturbation budget (the weakest
/// resolvent floor on the probing annuli), which is what keeps the contour
/// resolvent defined there; a step exceeding the budget cannot be certified
/// and the check reports false.
pub fn local_multiplicity_check(
    path: &OperatorPath,
    g: usize,
    center: C64,
    beta: f64,
    tol: &Tolerances,
) -> Result<bool> {
    let gaps = {
        let frame = eigen_frame(&path.samples[g], g, 0.0, tol)?;
        separation_radii(&frame, &path.samples[g])?
    };
    let budget = gaps.stability.iter().copied().fold(f64::INFINITY, f64::min);
    let mut points = vec![g];
    if g > 0 {
        if path.step_gaps[g - 1] >= budget {
            return Ok(false);
        }
        points.push(g - 1);
    }
    if g + 1 <= path.grid {
        if path.step_gaps[g] >= budget {
            return Ok(false);
        }
        points.push(g + 1);
    }
    for &p in &points {
        let proj = riesz_projection(&path.samples[p], center, beta / 2.0, 64, tol)?;
        let tr: C64 = (0..path.dim()).map(|i| proj.matrix[[i, i]]).sum();
        if (tr - C64::new(1.0, 0.0)).norm() > 0.1 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Hermitian PSD square root by eigendecomposition; eigenvalues within
/// tolerance below zero are clamped to zero.
pub fn psd_sqrt(m: &CMatrix, tol: &Tolerances) -> Result<CMatrix> {
    matrix::require_square(m)?;
    let scale = matrix::op_norm(m).max(1.0);
    let herm = matrix::hermitian_defect(m);
    if herm > tol.norm_scale(scale) {
        return Err(Error::NotHermitian(herm));
    }
    let sym = (m + &matrix::adjoint(m)).mapv(|z| z * 0.5);
    let (vals, vecs) = matrix::herm_eig(&sym)?;
    let clamp = tol.norm_scale(scale);
    let mut roots = Vec::with_capacity(vals.len());
    for &v in vals.iter() {
        if v < -clamp {
            return Err(Error::NegativeEigenvalue(v));
        }
        roots.push(C64::new(v.max(0.0).sqrt(), 0.0));
    }
    let d = matrix::from_diag(&roots);
    Ok(vecs.dot(&d).dot(&matrix::adjoint(&vecs)))
}
