//! Crate-wide error type.
//!
//! One enum rather than per-module enums: the pipelines chain geometry,
//! meshing, assembly, and eigensolves in single expressions, and the CLI maps
//! the variants onto process exit codes, so a shared type keeps both sides
//! simple.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Invalid or degenerate boundary curve, inadmissible strip width, or a
    /// point query outside the curve's reach.
    #[error("geometry: {0}")]
    Geometry(String),

    /// Malformed mesh file. Carries the 1-based line number of the offender.
    #[error("parse: line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// Inconsistent or out-of-range run configuration.
    #[error("config: {0}")]
    Config(String),

    /// A solver failed to reach its tolerance (factorization breakdown,
    /// Lanczos non-convergence, ill-conditioned fit, ...).
    #[error("numerics: {0}")]
    Numerics(String),

    /// Matrix/vector dimensions do not line up.
    #[error("shape: {0}")]
    Shape(String),

    /// A caller-visible precondition did not hold (non-normalized input,
    /// non-symmetric matrix where symmetry is required, ...).
    #[error("contract: {0}")]
    Contract(String),

    /// An eigenvalue that must be simple for the requested operation is part
    /// of a degenerate cluster and no symmetry-class reduction applies.
    #[error("degeneracy: {0}")]
    Degeneracy(String),

    /// The Fredholm compatibility check failed beyond tolerance.
    #[error("compatibility: {0}")]
    Compatibility(String),

    /// Eigenvalue-branch tracking across the family of problems became
    /// ambiguous (two candidates indistinguishable within tolerance).
    #[error("tracking: {0}")]
    Tracking(String),

    /// Root bracketing or refinement failed on a scalar equation.
    #[error("root: {0}")]
    Root(String),

    /// A log-log slope fit has too few usable rows or mixed-sign data.
    #[error("fit: {0}")]
    Fit(String),

    /// Argument outside a special function's supported domain.
    #[error("domain: {0}")]
    Domain(String),

    /// Underlying I/O failure while reading or writing mesh/report files.
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
