//! Analysis of discretized normal compact-operator paths over [0,1] and
//! loops over the circle: eigenvalue continuation and monodromy, spectral
//! projections by contour quadrature, a bottleneck metric on projection
//! triples, finite-rank loop approximants, and constructive certificates of
//! approximate unitary equivalence by block dilation.

pub mod braid;
pub mod config;
pub mod equivalence;
pub mod error;
pub mod expr;
pub mod finite_rank;
pub mod generator;
pub mod io;
pub mod matrix;
pub mod path;
pub mod perm;
pub mod sampling;
pub mod spectral;
pub mod triples;

pub use config::Tolerances;
pub use error::{Error, Result};
pub use matrix::{CMatrix, CVector, C64};
pub use path::{
    tail_index, truncate_path, unroll_loop, validate_sample, OperatorPath, OperatorSample,
};
pub use perm::Permutation;
