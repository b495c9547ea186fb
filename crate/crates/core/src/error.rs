use thiserror::Error;

use crate::expr::ExprError;

/// Errors produced by the analysis pipeline.
///
/// Each variant maps to one refusal mode; the CLI assigns a stable exit code
/// per variant class (see the `spectralloop` binary).
#[derive(Debug, Error)]
pub enum Error {
    #[error(
        "matrix is not normal: commutator residual {residual:.3e} exceeds tolerance {tol:.3e}"
    )]
    NotNormal { residual: f64, tol: f64 },

    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: {0}")]
    DimMismatch(String),

    #[error("path is not a loop: endpoint gap {0:.3e}")]
    NotALoop(f64),

    #[error("retained eigenvalues {i} and {j} coincide: gap {gap:.3e} below {min:.3e}")]
    MultiplicityViolation {
        i: usize,
        j: usize,
        gap: f64,
        min: f64,
    },

    #[error(
        "contour passes too close to the spectrum: distance {dist:.3e} below margin {margin:.3e}"
    )]
    ContourHitsSpectrum { dist: f64, margin: f64 },

    #[error("contour quadrature did not converge: delta {delta:.3e} at {nodes} nodes")]
    QuadratureNotConverged { delta: f64, nodes: usize },

    #[error("matrix is not Hermitian: deviation {0:.3e}")]
    NotHermitian(f64),

    #[error("negative eigenvalue {0:.3e} beyond tolerance")]
    NegativeEigenvalue(f64),

    #[error("projection families have different sizes: {0} vs {1}")]
    SizeMismatch(usize, usize),

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("projections too far apart for transport: ||p - q|| = {0:.6}")]
    TooFar(f64),

    #[error("operator does not intertwine the projection families: residual {0:.3e}")]
    NotIntertwining(f64),

    #[error("grid too coarse at step {step}: {detail}")]
    RefineGrid { step: usize, detail: String },

    #[error("no certified loop closure: {0}")]
    NoCertifiedClosure(String),

    #[error("eigenvector transport breakdown at step {step}: overlap {overlap:.3e} below 1/2")]
    TransportBreakdown { step: usize, overlap: f64 },

    #[error("sections do not span the retained subspace at grid point {0}")]
    SpanDeficient(usize),

    #[error("eigenvalue continuation does not cover the whole interval; cannot proceed")]
    Condition1Missing,

    #[error("no eigenvalue track reaches modulus 1/{0}")]
    EmptySn(u32),

    #[error("cannot separate modified eigenvalue tracks within perturbation budget {0:.3e}")]
    CannotSeparate(f64),

    #[error("retained spectra differ at grid point {g}: {detail}")]
    SpectraMismatch { g: usize, detail: String },

    #[error("chart condition fails at step {step}: consecutive triple distance {dist:.4} is not below 1/4")]
    ChartTooCoarse { step: usize, dist: f64 },

    #[error("loop closure defect is not a diagonal gauge: {0}")]
    ClosureDefectNotDiagonal(String),

    #[error("no feasible truncation rank within dimension {0}")]
    NoFeasibleM(usize),

    #[error("block to dilate is not a contraction: norm {0:.6}")]
    NotAContraction(f64),

    #[error("certified bound violated: measured {measured:.6e}, target {target:.6e}")]
    BoundViolated { measured: f64, target: f64 },

    #[error("discontinuous segment: value at support endpoint x={at} differs from identity by {dev:.3e}")]
    DiscontinuousSegment { at: f64, dev: f64 },

    #[error(transparent)]
    Expression(#[from] ExprError),

    #[error("linear algebra backend error: {0}")]
    Linalg(String),

    #[error("input format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Linalg(e.to_string())
    }
}
