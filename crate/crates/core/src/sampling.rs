//! Seeded random matrices and paths for conjugation experiments and tests.
//!
//! Everything here is deterministic in the seed, so runs are reproducible
//! across machines.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::Tolerances;
use crate::error::Result;
use crate::matrix::{self, CMatrix, CVector, C64};
use crate::path::OperatorPath;

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Standard normal via Box-Muller.
pub fn randn(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.random::<f64>().max(1e-300);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

pub fn random_complex(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(randn(rng), randn(rng))
}

pub fn random_matrix(rng: &mut ChaCha8Rng, dim: usize) -> CMatrix {
    let mut m = matrix::zeros(dim);
    for i in 0..dim {
        for j in 0..dim {
            m[[i, j]] = random_complex(rng);
        }
    }
    m
}

/// Haar-like random unitary: Gram–Schmidt of a Gaussian matrix.
pub fn random_unitary(rng: &mut ChaCha8Rng, dim: usize) -> CMatrix {
    let g = random_matrix(rng, dim);
    let mut cols: Vec<CVector> = Vec::with_capacity(dim);
    for j in 0..dim {
        let mut v = g.column(j).to_owned();
        for c in &cols {
            let coeff = matrix::inner(c, &v);
            v = &v - &c.mapv(|z| z * coeff);
        }
        cols.push(matrix::normalize(&v));
    }
    let mut u = matrix::zeros(dim);
    for (j, c) in cols.iter().enumerate() {
        u.column_mut(j).assign(c);
    }
    u
}

/// Random unit vector.
pub fn random_unit_vector(rng: &mut ChaCha8Rng, dim: usize) -> CVector {
    let mut v: CVector = ndarray::Array1::zeros(dim);
    for i in 0..dim {
        v[i] = random_complex(rng);
    }
    matrix::normalize(&v)
}

/// Random normal matrix with all pairwise eigenvalue gaps at least
/// `min_separation`: eigenvalues drawn in an annulus and resampled until
/// separated, conjugated by a random unitary.
pub fn random_normal_matrix(
    rng: &mut ChaCha8Rng,
    dim: usize,
    min_separation: f64,
) -> (CMatrix, Vec<C64>) {
    let mut values: Vec<C64> = Vec::with_capacity(dim);
    while values.len() < dim {
        let cand = C64::new(
            2.0 * rng.random::<f64>() - 1.0,
            2.0 * rng.random::<f64>() - 1.0,
        );
        if values.iter().all(|v| (v - cand).norm() >= min_separation) {
            values.push(cand);
        }
    }
    let u = random_unitary(rng, dim);
    let d = matrix::from_diag(&values);
    (u.dot(&d).dot(&matrix::adjoint(&u)), values)
}

/// Conjugate every sample of a path by one fixed unitary.
pub fn conjugate_path(path: &OperatorPath, u: &CMatrix, tol: &Tolerances) -> Result<OperatorPath> {
    let mats: Vec<CMatrix> = path
        .samples
        .iter()
        .map(|s| u.dot(&s.matrix).dot(&matrix::adjoint(u)))
        .collect();
    OperatorPath::from_matrices(mats, path.tail_bound, tol)
}

/// Smooth path of well-separated diagonal values conjugated by a ramped
/// product of plane rotations: a generic certified-continuable test loop.
pub fn rotating_diagonal_path(
    rng: &mut ChaCha8Rng,
    dim: usize,
    grid: usize,
    tol: &Tolerances,
) -> Result<OperatorPath> {
    // well-separated base moduli with random phases
    let base: Vec<C64> = (0..dim)
        .map(|j| {
            let modulus = 1.0 + j as f64;
            let phase = rng.random::<f64>() * 2.0 * std::f64::consts::PI;
            C64::from_polar(modulus, phase)
        })
        .collect();
    // a couple of rotation ramps in random planes
    let planes: Vec<(usize, usize, f64)> = (0..dim.min(3))
        .map(|k| {
            let i = k % dim;
            let j = (k + 1) % dim;
            (i.min(j), i.max(j), 0.5 + rng.random::<f64>())
        })
        .collect();
    let mats: Vec<CMatrix> = (0..=grid)
        .map(|g| {
            let x = g as f64 / grid as f64;
            let mut t = matrix::identity(dim);
            for &(i, j, rate) in &planes {
                let mut r = matrix::identity(dim);
                let (s, c) = (rate * x).sin_cos();
                r[[i, i]] = C64::new(c, 0.0);
                r[[i, j]] = C64::new(-s, 0.0);
                r[[j, i]] = C64::new(s, 0.0);
                r[[j, j]] = C64::new(c, 0.0);
                t = t.dot(&r);
            }
            let d = matrix::from_diag(&base);
            t.dot(&d).dot(&matrix::adjoint(&t))
        })
        .collect();
    OperatorPath::from_matrices(mats, 0.0, tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_unitary_is_unitary_and_seeded() {
        let mut rng = rng_from_seed(7);
        let u = random_unitary(&mut rng, 5);
        assert!(matrix::unitarity_defect(&u) < 1e-12);
        let mut rng2 = rng_from_seed(7);
        let u2 = random_unitary(&mut rng2, 5);
        assert_eq!(u, u2);
    }

    #[test]
    fn random_normal_is_normal_and_separated() {
        let mut rng = rng_from_seed(11);
        let (m, vals) = random_normal_matrix(&mut rng, 8, 0.1);
        assert!(matrix::normality_residual(&m) < 1e-10);
        for i in 0..vals.len() {
            for j in 0..i {
                assert!((vals[i] - vals[j]).norm() >= 0.1);
            }
        }
    }
}
