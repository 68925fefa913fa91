use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid parameters, bounds or regime mismatch.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("size mismatch: expected {expected}, got {got} ({what})")]
    SizeMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("fields live on different meshes")]
    MeshMismatch,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("{0}")]
    Domain(String),

    /// The iteration ran out of budget; the trace is attached.
    #[error("no convergence after {iterations} iterations (relative gradient {rel_grad:.3e})")]
    NonConvergence {
        iterations: usize,
        rel_grad: f64,
        trace: Box<crate::solver::IterationTrace>,
    },

    /// The energy decreased without bound: the functional is not bounded below.
    #[error("supercritical evidence: energy unbounded below ({0})")]
    Supercritical(String),

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
