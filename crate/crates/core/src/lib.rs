//! Robust direction-of-arrival estimation under complex elliptical noise.
//!
//! The crate synthesizes array snapshots from elliptically symmetric
//! distributions, estimates the normalized scatter (shape) matrix with the
//! sample covariance, Tyler's fixed point, or a rank-based one-step update,
//! feeds the result to MUSIC, and compares the frequency MSE against a
//! semiparametric performance bound. A Monte Carlo harness ties the pieces
//! together for reproducible sweep experiments.

pub mod array;
pub mod ces;
pub mod estimators;
pub mod linalg;
pub mod mc;
pub mod music;
pub mod rng;
pub mod snapshots;
pub mod sscrb;

use nalgebra::{DMatrix, DVector};

pub type Cx = num_complex::Complex64;
pub type CMat = DMatrix<Cx>;
pub type CVec = DVector<Cx>;
pub type RMat = DMatrix<f64>;
pub type RVec = DVector<f64>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("domain: {0}")]
    Domain(String),
    #[error("matrix not Hermitian positive definite: {0}")]
    NotPositiveDefinite(String),
    #[error("singular matrix: {0}")]
    Singular(String),
    #[error("degenerate data: {0}")]
    Degenerate(String),
    #[error("no convergence: {0}")]
    NonConvergence(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("parse: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
