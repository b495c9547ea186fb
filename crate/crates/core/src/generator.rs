//! Parametric path generators: a small segment language for building
//! operator paths as conjugated diagonal families, plus the two built-in
//! model loops used by the test suite and the CLI.
//!
//! A generator is an x-dependent diagonal together with an ordered list of
//! conjugation segments. Each segment is a matrix-valued function supported
//! on a subinterval of [0,1]: above its support it is the identity, inside
//! it follows its expressions, below it stays clamped at its left-endpoint
//! value. The sample at x is `T(x) D(x) T(x)*` with `T` the left-to-right
//! product of the segment factors (first segment leftmost). For the product
//! to be continuous, every segment whose support ends before x = 1 must equal
//! the identity at its right endpoint; violations are reported as
//! `DiscontinuousSegment`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::matrix::{self, CMatrix, C64};
use crate::path::OperatorPath;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SegmentSpec {
    /// Plane rotation by `angle(x)` in coordinates `(i, j)`.
    RotationBlock {
        indices: (usize, usize),
        angle: String,
        support: (f64, f64),
    },
    /// Diagonal factor with `scales(x)` at coordinates `(i, j)`.
    DiagonalBlock {
        indices: (usize, usize),
        scales: (String, String),
        support: (f64, f64),
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub dim: usize,
    /// Complex-valued expressions in x, one per diagonal entry.
    pub initial_diagonal: Vec<String>,
    #[serde(default)]
    pub segments: Vec<SegmentSpec>,
    #[serde(default)]
    pub tail_bound: f64,
}

struct CompiledSegment {
    kind: CompiledKind,
    support: (f64, f64),
}

enum CompiledKind {
    Rotation {
        i: usize,
        j: usize,
        angle: Expression,
    },
    Diagonal {
        i: usize,
        j: usize,
        scales: (Expression, Expression),
    },
}

impl CompiledSegment {
    fn factor(&self, dim: usize, x: f64) -> Result<CMatrix> {
        let (a, b) = self.support;
        let xc = x.clamp(a, b);
        if x > b {
            return Ok(matrix::identity(dim));
        }
        let mut m = matrix::identity(dim);
        match &self.kind {
            CompiledKind::Rotation { i, j, angle } => {
                let v = angle.eval(xc);
                if v.im.abs() > 1e-9 * (1.0 + v.re.abs()) {
                    return Err(Error::Format(format!(
                        "rotation angle must be real, got {v} at x = {xc}"
                    )));
                }
                let (s, c) = v.re.sin_cos();
                m[[*i, *i]] = C64::new(c, 0.0);
                m[[*i, *j]] = C64::new(s, 0.0);
                m[[*j, *i]] = C64::new(-s, 0.0);
                m[[*j, *j]] = C64::new(c, 0.0);
            }
            CompiledKind::Diagonal { i, j, scales } => {
                m[[*i, *i]] = scales.0.eval(xc);
                m[[*j, *j]] = scales.1.eval(xc);
            }
        }
        Ok(m)
    }
}

fn compile(spec: &GeneratorSpec) -> Result<(Vec<Expression>, Vec<CompiledSegment>)> {
    if spec.dim == 0 || spec.initial_diagonal.len() != spec.dim {
        return Err(Error::Format(format!(
            "initial_diagonal must have exactly dim = {} entries",
            spec.dim
        )));
    }
    let diagonal = spec
        .initial_diagonal
        .iter()
        .map(|s| Expression::parse(s))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let mut segments = Vec::with_capacity(spec.segments.len());
    for seg in &spec.segments {
        let (indices, support) = match seg {
            SegmentSpec::RotationBlock {
                indices, support, ..
            }
            | SegmentSpec::DiagonalBlock {
                indices, support, ..
            } => (*indices, *support),
        };
        if indices.0 >= spec.dim || indices.1 >= spec.dim || indices.0 == indices.1 {
            return Err(Error::Format(format!(
                "segment indices {indices:?} out of range for dim {}",
                spec.dim
            )));
        }
        if !(0.0..=1.0).contains(&support.0)
            || !(0.0..=1.0).contains(&support.1)
            || support.0 >= support.1
        {
            return Err(Error::Format(format!(
                "segment support {support:?} must be an interval inside [0,1]"
            )));
        }
        let kind = match seg {
            SegmentSpec::RotationBlock { angle, .. } => CompiledKind::Rotation {
                i: indices.0,
                j: indices.1,
                angle: Expression::parse(angle)?,
            },
            SegmentSpec::DiagonalBlock { scales, .. } => CompiledKind::Diagonal {
                i: indices.0,
                j: indices.1,
                scales: (Expression::parse(&scales.0)?, Expression::parse(&scales.1)?),
            },
        };
        segments.push(CompiledSegment { kind, support });
    }
    Ok((diagonal, segments))
}

/// Evaluate a generator on a uniform grid of size `grid`.
pub fn evaluate_generator(
    spec: &GeneratorSpec,
    grid: usize,
    tol: &Tolerances,
) -> Result<OperatorPath> {
    if grid < 2 {
        return Err(Error::Format("grid size must be at least 2".to_string()));
    }
    let (diagonal, segments) = compile(spec)?;

    // a segment that stops before x = 1 must return to the identity there,
    // otherwise the clamped product jumps at the support boundary
    for seg in &segments {
        let b = seg.support.1;
        if b < 1.0 {
            let f = seg.factor(spec.dim, b)?;
            let dev = matrix::op_norm(&(&f - &matrix::identity(spec.dim)));
            if dev > tol.norm_scale(1.0) {
                return Err(Error::DiscontinuousSegment { at: b, dev });
            }
        }
    }

    let mut matrices = Vec::with_capacity(grid + 1);
    for g in 0..=grid {
        let x = g as f64 / grid as f64;
        let d: Vec<C64> = diagonal.iter().map(|e| e.eval(x)).collect();
        let mut t = matrix::identity(spec.dim);
        for seg in &segments {
            t = t.dot(&seg.factor(spec.dim, x)?);
        }
        let sample = t.dot(&matrix::from_diag(&d)).dot(&matrix::adjoint(&t));
        matrices.push(sample);
    }
    OperatorPath::from_matrices(matrices, spec.tail_bound, tol)
}

/// Built-in bilateral-window loop: a diagonal family of eigenvalue tracks
/// conjugated by a rotation ramp closing into a cyclic coordinate shift.
///
/// `window` is the half-width k; the matrix dimension is 2k+1 and position
/// `j` carries the track with index `n = j - k`. Interior tracks follow
/// closed forms whose endpoint values chain under the shift `n -> n-1`; the
/// two boundary tracks are bridged through the upper half-plane so the
/// finite window closes exactly and the spectrum stays away from zero.
pub fn window_shift_loop_spec(window: usize) -> GeneratorSpec {
    assert!(window >= 1, "window half-width must be at least 1");
    let k = window as i64;
    let dim = (2 * window + 1) as usize;
    let mut initial_diagonal = Vec::with_capacity(dim);
    for j in 0..dim {
        let n = j as i64 - k;
        let expr = if n == -1 {
            // bridge from -1/2 to +1: modulus (1+x)/2, phase pi(1-x)
            "((1+x)/2)*exp(pi*i*(1-x))".to_string()
        } else if n < -1 {
            // -2^n (x+1)
            format!("-(x+1)/2^{}", -n)
        } else if n < k {
            // 1/2^n - x/2^(n+1)
            format!("1/2^{} - x/2^{}", n, n + 1)
        } else {
            // wrap track: constant modulus 1/2^k, phase 0 -> pi,
            // ending at -1/2^k to meet the most-negative track's start
            format!("exp(pi*i*x)/2^{}", k)
        };
        initial_diagonal.push(expr);
    }
    let segments = (0..dim - 1)
        .map(|j| SegmentSpec::RotationBlock {
            indices: (j, j + 1),
            angle: "pi/2*x".to_string(),
            support: (0.0, 1.0),
        })
        .collect();
    GeneratorSpec {
        dim,
        initial_diagonal,
        segments,
        tail_bound: (0.5_f64).powi(k as i32 + 1),
    }
}

/// The closed-form diagonal of [`window_shift_loop_spec`] evaluated directly,
/// for endpoint assertions in tests: value of track `n` at parameter `x`.
pub fn window_track_value(window: usize, n: i64, x: f64) -> C64 {
    let k = window as i64;
    assert!(n.abs() <= k);
    if n == -1 {
        C64::from_polar((1.0 + x) / 2.0, PI * (1.0 - x))
    } else if n < -1 {
        C64::new(-(x + 1.0) * (2.0_f64).powi(n as i32), 0.0)
    } else if n < k {
        C64::new(
            (0.5_f64).powi(n as i32) - x * (0.5_f64).powi(n as i32 + 1),
            0.0,
        )
    } else {
        C64::from_polar((0.5_f64).powi(k as i32), PI * x)
    }
}

/// Built-in descending-cascade path on [0,1]: the top eigenvalue track is
/// handed down a dyadic interval cascade, halving its modulus at each level,
/// so it cannot extend continuously to x = 0 above any positive threshold.
///
/// `depth` is the number of cascade levels; the dimension is depth + 2.
/// With `repair = true` the diagonal hand-off intervals move the two active
/// eigenvalues along antipodal circular arcs (continuous, multiplicity-free);
/// with `repair = false` the literal discontinuous diagonal-scale segments
/// are evaluated and rejected by the segment continuity check.
pub fn descending_cascade_path(
    depth: usize,
    grid: usize,
    repair: bool,
    tol: &Tolerances,
) -> Result<OperatorPath> {
    assert!(depth >= 1);
    let dim = depth + 2;
    if !repair {
        return evaluate_generator(&descending_cascade_literal_spec(depth), grid, tol);
    }
    if grid < 2 {
        return Err(Error::Format("grid size must be at least 2".to_string()));
    }
    let base: Vec<C64> = (0..dim)
        .map(|j| C64::new((0.5_f64).powi(j as i32), 0.0))
        .collect();
    let mut matrices = Vec::with_capacity(grid + 1);
    for g in 0..=grid {
        let x = g as f64 / grid as f64;
        matrices.push(cascade_sample(&base, depth, x));
    }
    let tail = (0.5_f64).powi(depth as i32 + 1);
    OperatorPath::from_matrices(matrices, tail, tol)
}

fn cascade_sample(base: &[C64], depth: usize, x: f64) -> CMatrix {
    let dim = base.len();
    let floor = (0.5_f64).powi(depth as i32 + 1);
    if x <= floor {
        // frozen pattern with the deepest entry ramping into the tail
        let mut d = base.to_vec();
        d[dim - 1] = C64::new(x, 0.0);
        return matrix::from_diag(&d);
    }
    for n in 0..=depth {
        let lo = (0.5_f64).powi(n as i32 + 1); // 1/2^(n+1)
        let mid = 3.0 * (0.5_f64).powi(n as i32 + 2); // 3/2^(n+2)
        let hi = (0.5_f64).powi(n as i32); // 1/2^n
        if x >= mid && x <= hi {
            // rotation interval: eigenvalues fixed, frame turning
            let theta = (2.0_f64).powi(n as i32 + 1) * PI * (hi - x);
            let mut r = matrix::identity(dim);
            let (s, c) = theta.sin_cos();
            r[[n, n]] = C64::new(c, 0.0);
            r[[n, n + 1]] = C64::new(s, 0.0);
            r[[n + 1, n]] = C64::new(-s, 0.0);
            r[[n + 1, n + 1]] = C64::new(c, 0.0);
            let d = matrix::from_diag(base);
            return r.dot(&d).dot(&matrix::adjoint(&r));
        }
        if x >= lo && x < mid {
            // hand-off interval: the two active eigenvalues trade places
            // along antipodal arcs around their midpoint
            let s = (mid - x) / (mid - lo); // 0 at the right end, 1 at the left
            let center = 3.0 * (0.5_f64).powi(n as i32 + 2);
            let radius = (0.5_f64).powi(n as i32 + 2);
            let arc = C64::from_polar(radius, PI * s);
            let mut d = base.to_vec();
            d[n] = C64::new(center, 0.0) - arc;
            d[n + 1] = C64::new(center, 0.0) + arc;
            return matrix::from_diag(&d);
        }
    }
    // x beyond all supports only happens for x outside [floor, 1]
    matrix::from_diag(base)
}

/// The cascade exactly as printed: diagonal hand-off segments that fail to
/// return to the identity at their right support endpoints.
pub fn descending_cascade_literal_spec(depth: usize) -> GeneratorSpec {
    let dim = depth + 2;
    let initial_diagonal = (0..dim).map(|j| format!("1/2^{j}")).collect();
    let mut segments = Vec::new();
    // deepest segments leftmost so each factor conjugates everything below it
    for n in (0..=depth).rev() {
        let lo = (0.5_f64).powi(n as i32 + 1);
        let mid = 3.0 * (0.5_f64).powi(n as i32 + 2);
        let hi = (0.5_f64).powi(n as i32);
        segments.push(SegmentSpec::DiagonalBlock {
            indices: (n, n + 1),
            scales: (
                format!(
                    "(4 - 2^{}*x)/sqrt(2)*exp(2*pi*i*(3 - 2^{}*x))",
                    n + 2,
                    n + 2
                ),
                format!(
                    "sqrt(2)/(4 - 2^{}*x)*exp(-2*pi*i*(3 - 2^{}*x))",
                    n + 2,
                    n + 2
                ),
            ),
            support: (lo, mid),
        });
        segments.push(SegmentSpec::RotationBlock {
            indices: (n, n + 1),
            angle: format!("2^{}*pi*(1/2^{} - x)", n + 1, n),
            support: (mid, hi),
        });
    }
    GeneratorSpec {
        dim,
        initial_diagonal,
        segments,
        tail_bound: (0.5_f64).powi(depth as i32 + 1),
    }
}

/// Modulus of the descending track of [`descending_cascade_path`] at `x`:
/// constant `1/2^n` on rotation intervals, a circular arc on hand-offs, and
/// the bare ramp below the deepest level.
pub fn cascade_track_modulus(depth: usize, x: f64) -> f64 {
    let floor = (0.5_f64).powi(depth as i32 + 1);
    if x <= floor {
        return x;
    }
    for n in 0..=depth {
        let lo = (0.5_f64).powi(n as i32 + 1);
        let mid = 3.0 * (0.5_f64).powi(n as i32 + 2);
        let hi = (0.5_f64).powi(n as i32);
        if x >= mid && x <= hi {
            return (0.5_f64).powi(n as i32);
        }
        if x >= lo && x < mid {
            let s = (mid - x) / (mid - lo);
            let center = 3.0 * (0.5_f64).powi(n as i32 + 2);
            let radius = (0.5_f64).powi(n as i32 + 2);
            return (C64::new(center, 0.0) + C64::from_polar(radius, PI * s)).norm();
        }
    }
    1.0
}
