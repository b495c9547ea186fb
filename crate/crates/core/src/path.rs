//! Discretized operator-valued paths over [0,1] and loops over the circle.
//!
//! A path is a uniform grid of matrix samples together with a declared tail
//! bound: the norm of the compact tail discarded when the operator was
//! windowed down to a finite matrix. Every sample is validated as normal on
//! construction.

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::matrix::{self, CMatrix};

/// One validated grid sample: the matrix plus its measured normality defect.
#[derive(Debug, Clone)]
pub struct OperatorSample {
    pub matrix: CMatrix,
    pub normality_residual: f64,
}

impl OperatorSample {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Validate one matrix sample: square, finite entries, normal within `tol`.
///
/// `tol` is the absolute bound on `||MM* - M*M||`; callers normally pass
/// `Tolerances::normality(||M||)`.
pub fn validate_sample(matrix: CMatrix, tol: f64) -> Result<OperatorSample> {
    matrix::require_square(&matrix)?;
    if !matrix::all_finite(&matrix) {
        return Err(Error::NonFinite);
    }
    let residual = matrix::normality_residual(&matrix);
    if residual > tol {
        return Err(Error::NotNormal { residual, tol });
    }
    Ok(OperatorSample {
        matrix,
        normality_residual: residual,
    })
}

/// A discretized operator path: samples at `x_g = g/G` for `g = 0..=G`.
#[derive(Debug, Clone)]
pub struct OperatorPath {
    pub samples: Vec<OperatorSample>,
    pub is_loop: bool,
    pub tail_bound: f64,
    /// Grid size G; `samples.len() == G + 1`.
    pub grid: usize,
    /// Per-step norm gaps `||M_{g+1} - M_g||`, the measured continuity modulus.
    pub step_gaps: Vec<f64>,
}

impl OperatorPath {
    /// Assemble a path from raw matrices, validating every sample.
    pub fn from_matrices(
        matrices: Vec<CMatrix>,
        tail_bound: f64,
        tol: &Tolerances,
    ) -> Result<OperatorPath> {
        if matrices.len() < 2 {
            return Err(Error::Format(
                "a path needs at least two grid samples".to_string(),
            ));
        }
        let dim = matrices[0].nrows();
        let mut samples = Vec::with_capacity(matrices.len());
        for m in matrices {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(Error::DimMismatch(format!(
                    "all samples must share one dimension; expected {dim}, got {}x{}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            let norm = matrix::op_norm(&m);
            samples.push(validate_sample(m, tol.normality(norm))?);
        }
        if !tail_bound.is_finite() || tail_bound < 0.0 {
            return Err(Error::Format("tail_bound must be nonnegative".to_string()));
        }
        let grid = samples.len() - 1;
        let step_gaps: Vec<f64> = (0..grid)
            .map(|g| matrix::op_norm(&(&samples[g + 1].matrix - &samples[g].matrix)))
            .collect();
        let closure = matrix::op_norm(&(&samples[grid].matrix - &samples[0].matrix));
        let scale = matrix::op_norm(&samples[0].matrix);
        let is_loop = closure <= tol.norm_scale(scale);
        Ok(OperatorPath {
            samples,
            is_loop,
            tail_bound,
            grid,
            step_gaps,
        })
    }

    pub fn dim(&self) -> usize {
        self.samples[0].dim()
    }

    pub fn grid_x(&self, g: usize) -> f64 {
        g as f64 / self.grid as f64
    }

    pub fn matrix(&self, g: usize) -> &CMatrix {
        &self.samples[g].matrix
    }

    pub fn max_norm(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| matrix::op_norm(&s.matrix))
            .fold(0.0, f64::max)
    }

    pub fn max_step_gap(&self) -> f64 {
        self.step_gaps.iter().copied().fold(0.0, f64::max)
    }

    /// Endpoint gap `||M_G - M_0||`.
    pub fn closure_gap(&self) -> f64 {
        matrix::op_norm(&(&self.samples[self.grid].matrix - &self.samples[0].matrix))
    }
}

/// Compress every sample to its top-left `m x m` corner (embedded back at
/// full dimension) and charge the discarded block to the tail bound.
pub fn truncate_path(path: &OperatorPath, m: usize) -> Result<OperatorPath> {
    let dim = path.dim();
    if m > dim || m == 0 {
        return Err(Error::DimMismatch(format!(
            "truncation rank {m} out of range 1..={dim}"
        )));
    }
    let mut increment = 0.0_f64;
    let mut samples = Vec::with_capacity(path.samples.len());
    for s in &path.samples {
        let compressed = matrix::compress(&s.matrix, m);
        increment = increment.max(matrix::op_norm(&(&compressed - &s.matrix)));
        let residual = matrix::normality_residual(&compressed);
        samples.push(OperatorSample {
            matrix: compressed,
            normality_residual: residual,
        });
    }
    let grid = path.grid;
    let step_gaps: Vec<f64> = (0..grid)
        .map(|g| matrix::op_norm(&(&samples[g + 1].matrix - &samples[g].matrix)))
        .collect();
    Ok(OperatorPath {
        samples,
        is_loop: path.is_loop,
        tail_bound: path.tail_bound + increment,
        grid,
        step_gaps,
    })
}

/// Result of a tail-index search.
#[derive(Debug, Clone, Copy)]
pub struct TailIndex {
    pub m: usize,
    /// Set when even the full window cannot bring the tail below epsilon.
    pub insufficient_resolution: bool,
}

/// Smallest `m` with `max_g ||P_m M_g P_m - M_g|| + tail_bound < eps`.
pub fn tail_index(path: &OperatorPath, eps: f64) -> TailIndex {
    let dim = path.dim();
    if path.tail_bound >= eps {
        return TailIndex {
            m: dim,
            insufficient_resolution: true,
        };
    }
    for m in 1..=dim {
        let worst = path
            .samples
            .iter()
            .map(|s| matrix::op_norm(&(&matrix::compress(&s.matrix, m) - &s.matrix)))
            .fold(0.0, f64::max);
        if worst + path.tail_bound < eps {
            return TailIndex {
                m,
                insufficient_resolution: false,
            };
        }
    }
    TailIndex {
        m: dim,
        insufficient_resolution: true,
    }
}

/// Clear the loop flag, leaving samples untouched, so path-only algorithms
/// can consume a loop.
pub fn unroll_loop(path: &OperatorPath) -> Result<OperatorPath> {
    if !path.is_loop {
        return Err(Error::NotALoop(path.closure_gap()));
    }
    let mut out = path.clone();
    out.is_loop = false;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{from_diag, C64};
    use ndarray::array;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn constant_path(d: &[C64], steps: usize) -> OperatorPath {
        let m = from_diag(d);
        OperatorPath::from_matrices(vec![m; steps + 1], 0.0, &Tolerances::default()).unwrap()
    }

    #[test]
    fn diagonal_sample_is_normal() {
        let s = validate_sample(from_diag(&[c(1.0, 0.0), c(0.0, 1.0)]), 1e-12).unwrap();
        assert_eq!(s.normality_residual, 0.0);
    }

    #[test]
    fn nilpotent_sample_is_rejected() {
        let m = array![[c(0.0, 0.0), c(1.0, 0.0)], [c(0.0, 0.0), c(0.0, 0.0)]];
        match validate_sample(m, 1e-10) {
            Err(Error::NotNormal { residual, .. }) => assert!((residual - 1.0).abs() < 1e-12),
            other => panic!("expected NotNormal, got {other:?}"),
        }
    }

    #[test]
    fn hermitian_sample_has_zero_residual() {
        let m = array![[c(1.0, 0.0), c(2.0, 3.0)], [c(2.0, -3.0), c(-1.0, 0.0)]];
        let s = validate_sample(m, 1e-8).unwrap();
        assert!(s.normality_residual < 1e-13);
    }

    #[test]
    fn truncation_charges_discarded_block() {
        let p = constant_path(&[c(1.0, 0.0), c(0.5, 0.0), c(0.25, 0.0)], 4);
        let t = truncate_path(&p, 2).unwrap();
        assert!((t.tail_bound - 0.25).abs() < 1e-14);
        assert_eq!(t.samples[0].matrix[[2, 2]], c(0.0, 0.0));
        // truncating at the full dimension changes nothing
        let full = truncate_path(&p, 3).unwrap();
        assert_eq!(full.tail_bound, 0.0);
        // idempotent
        let tt = truncate_path(&t, 2).unwrap();
        assert_eq!(tt.tail_bound, t.tail_bound);
        assert_eq!(tt.samples[1].matrix, t.samples[1].matrix);
    }

    #[test]
    fn tail_index_examples() {
        let p = constant_path(&[c(1.0, 0.0), c(0.5, 0.0), c(0.25, 0.0), c(0.125, 0.0)], 2);
        let t = tail_index(&p, 0.3);
        assert_eq!(t.m, 2);
        assert!(!t.insufficient_resolution);

        let zero = constant_path(&[c(0.0, 0.0), c(0.0, 0.0)], 2);
        assert_eq!(tail_index(&zero, 0.1).m, 1);

        let mut declared = constant_path(&[c(1.0, 0.0), c(0.5, 0.0)], 2);
        declared.tail_bound = 0.2;
        let t = tail_index(&declared, 0.1);
        assert_eq!(t.m, 2);
        assert!(t.insufficient_resolution);
    }

    #[test]
    fn tail_index_is_monotone_in_eps() {
        let p = constant_path(&[c(1.0, 0.0), c(0.5, 0.0), c(0.25, 0.0), c(0.125, 0.0)], 2);
        let mut last = p.dim() + 1;
        for eps in [0.05, 0.2, 0.6, 1.5] {
            let t = tail_index(&p, eps);
            assert!(t.m <= last);
            last = t.m;
        }
    }

    #[test]
    fn unroll_requires_loop() {
        let p = constant_path(&[c(1.0, 0.0)], 3);
        assert!(p.is_loop);
        let unrolled = unroll_loop(&p).unwrap();
        assert!(!unrolled.is_loop);

        let ramp: Vec<CMatrix> = (0..=3)
            .map(|g| from_diag(&[c(1.0 + g as f64, 0.0)]))
            .collect();
        let open = OperatorPath::from_matrices(ramp, 0.0, &Tolerances::default()).unwrap();
        assert!(!open.is_loop);
        assert!(matches!(unroll_loop(&open), Err(Error::NotALoop(_))));
    }
}
