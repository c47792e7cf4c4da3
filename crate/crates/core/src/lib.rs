//! Estimation of multi-attribute conditional independence graphs.
//!
//! Each of `p` nodes carries an `m`-dimensional Gaussian attribute vector and
//! the graph is read off the `m × m` blocks of the `mp × mp` precision matrix.
//! The estimator minimizes a sparse-group penalized negative log-likelihood
//! (lasso, log-sum or SCAD penalties) with ADMM, wrapping non-convex penalties
//! in local linear approximation rounds.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the experiment
//! harness and the command-line tool live in the `magl` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod admm;
pub mod datagen;
pub mod diagnostics;
pub mod eigen;
pub mod error;
pub mod estimator;
pub mod graph;
pub mod matrix;
pub mod metrics;
pub mod penalty;
pub mod select;

pub use admm::{AdmmConfig, AdmmSolver, SolverResult};
pub use eigen::{SpectralDecomposition, SymmetricEigensolver, TridiagonalQl};
pub use error::{Error, Result};
pub use estimator::{FitOptions, GraphEstimate};
pub use graph::EdgeSet;
pub use matrix::{BlockMatrix, BlockNormMap, Matrix};
pub use penalty::{LlaWeights, PenaltyKind, PenaltySpec};
