//! Sparse PCA through a sparse-linear-regression black box.
//!
//! Under the spiked covariance model N(0, I + θuuᵀ) with a k-sparse unit
//! spike u, every support coordinate is linearly predictable from the rest.
//! Regressing each column on the others with any k-sparse regression solver
//! and scoring the gain Qᵢ = (1/n)‖y‖² − (1/n)‖y − Xβ̂‖² turns that solver
//! into a tester and support-recovery procedure for the spike.
//!
//! Modules:
//! - [`model`]: domain types and closed-form oracles (β*, σ², signal,
//!   design eigenvalues).
//! - [`sampler`]: seeded sampling, rescaling, empirical covariance.
//! - [`slr`]: the pluggable solvers (thresholded Lasso, OMP, exhaustive ℓ0)
//!   plus prediction-error and restricted-eigenvalue diagnostics.
//! - [`detect`]: Q statistics, the threshold test, support recovery, and
//!   the unknown-sparsity wrapper.
//! - [`baselines`]: diagonal/covariance thresholding, truncated power
//!   method, MDP statistic.
//! - [`harness`]: seeded benchmark experiments with CSV output.
//!
//! Core numerics are generic over the scalar type via [`num::Real`]
//! (`f32` or `f64`); the concrete aliases below fix `f64`, which is what
//! the CLI and the experiment harness use.

pub mod baselines;
pub mod cli;
pub mod detect;
pub mod harness;
pub mod linalg;
pub mod model;
pub mod num;
pub mod sampler;
pub mod selfcheck;
pub mod slr;

use thiserror::Error as ThisError;

/// Crate-wide error type.
#[derive(Debug, ThisError)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("singular matrix: {0}")]
    Singular(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("unknown name: {0}")]
    UnknownName(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// CLI exit code: 1 for parameter/usage problems, 2 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter(_)
            | Error::DimensionMismatch(_)
            | Error::Capacity(_)
            | Error::UnknownName(_)
            | Error::Config(_) => 1,
            Error::Singular(_) | Error::DegenerateInput(_) | Error::Numerical(_) | Error::Io(_) => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

// Concrete f64 aliases for the main domain types.
pub type Spike64 = model::Spike<f64>;
pub type SpikedModel64 = model::SpikedModel<f64>;
pub type LinearModelOracle64 = model::LinearModelOracle<f64>;
pub type SampleMatrix64 = sampler::SampleMatrix<f64>;
pub type RegressionInstance64 = slr::RegressionInstance<f64>;
pub type SparseCoefficients64 = slr::SparseCoefficients<f64>;
pub type SolverConfig64 = slr::SolverConfig<f64>;
pub type QReport64 = detect::QReport<f64>;
