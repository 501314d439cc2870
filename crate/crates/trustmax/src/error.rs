use thiserror::Error;

/// Errors produced by graph loading, solvers and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input data. `line` is 1-based.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// Structurally valid input that violates a model constraint.
    #[error("invalid input: {0}")]
    Validation(String),

    /// A caller asked for something contradictory (bad flag combination,
    /// unknown method name, pinning a node twice, ...).
    #[error("usage: {0}")]
    Usage(String),

    /// Refusing to allocate or enumerate something too large. The message
    /// names the limit and how to override it where an override exists.
    #[error("size limit: {0}")]
    Size(String),

    /// A numerical invariant failed (singular system, out-of-range solution).
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Fixed-point iteration ran out of iterations.
    #[error("no convergence after {iters} iterations (residual {residual:.3e})")]
    Convergence { iters: usize, residual: f64 },

    /// A rank-one pin update hit a vanishing diagonal entry of Q.
    #[error("degenerate pivot at node {node}: |q_ii| = {value:.3e}")]
    DegeneratePivot { node: usize, value: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the CLI: 1 usage, 2 bad data, 3 numerical.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Usage(_) => 1,
            Error::Parse { .. } | Error::Validation(_) | Error::Size(_) | Error::Io(_) => 2,
            Error::Numerical(_) | Error::Convergence { .. } | Error::DegeneratePivot { .. } => 3,
        }
    }
}
