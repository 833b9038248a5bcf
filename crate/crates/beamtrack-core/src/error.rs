//! Error type shared by every module of the core crate.

use alloc::string::String;

/// Failure modes of the core numerics.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A configuration value violates its documented invariant.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    /// A direction parameter vector does not correspond to a physical arrival direction.
    #[error("direction parameter vector is outside the physical range")]
    OutOfPhysicalRange,
    /// An offset set violates the main-lobe or distinctness invariant.
    #[error("invalid exploration offsets: {0}")]
    InvalidOffsets(String),
    /// A Fisher information matrix is singular or too ill-conditioned to invert.
    #[error("Fisher information matrix is singular or ill-conditioned")]
    SingularFisher,
    /// The identifiability solver found no root within tolerance.
    #[error("no solution: {0}")]
    NoSolution(String),
    /// The identifiability solver found two distinct roots within tolerance.
    #[error("ambiguous solution: two distinct roots fit the observation")]
    AmbiguousSolution,
    /// No optimizer restart improved on the coarse-grid incumbent.
    #[error("no optimizer restart improved on the grid incumbent")]
    NoImprovement,
}

/// Convenience alias for results carrying [`Error`].
pub type Result<T> = core::result::Result<T, Error>;
