use alloc::string::String;

/// Errors raised by the subspace toolkit.
///
/// Variants are coarse on purpose: the CLI maps each one onto a distinct
/// process exit code.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// Arguments outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// The problem is larger than the dense desk-scale engines allow.
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    /// Two objects that must describe the same space do not.
    #[error("dimension mismatch: {0}")]
    Mismatch(String),
    /// Input data violates a structural invariant (symmetry, finiteness, ...).
    #[error("invalid data: {0}")]
    Data(String),
    /// A factorization met a pivot it cannot accept.
    #[error("decomposition failed: {0}")]
    Decomposition(String),
    /// Every overlap eigenvalue fell below the threshold.
    #[error("empty subspace: no overlap eigenvalue above threshold {threshold:e} (largest {largest:e})")]
    EmptySubspace { threshold: f64, largest: f64 },
    /// An iterative method ran out of iterations.
    #[error("no convergence after {iterations} iterations (max residual {residual:e})")]
    NotConverged {
        iterations: usize,
        residual: f64,
        /// Best Ritz values reached before giving up.
        best: alloc::vec::Vec<f64>,
    },
    /// A numerical step (e.g. QITE) failed its acceptance test.
    #[error("step rejected: {0}")]
    Step(String),
}

pub type Result<T> = core::result::Result<T, Error>;
