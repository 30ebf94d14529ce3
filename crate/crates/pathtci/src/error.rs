use thiserror::Error;

/// Error variants shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on an argument was violated.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Two path objects do not live on the same grid / dimension.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// An evaluator produced a non-finite value during integration.
    #[error("simulation failure at step {step}, path {path}: {message}")]
    Simulation {
        step: usize,
        path: usize,
        message: String,
    },

    /// Exact-solver problem size above the configured cap.
    #[error("problem size {rows}x{cols} = {} entries exceeds the exact-solver cap of {cap}; use the entropic solver", rows * cols)]
    SizeCap {
        rows: usize,
        cols: usize,
        cap: usize,
    },

    /// An iterative numerical routine failed to converge.
    #[error("{context}: did not converge, residual {residual:.3e}")]
    NoConvergence { context: String, residual: f64 },

    /// Input outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Configuration schema violations; all collected, not just the first.
    #[error("configuration rejected:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// Malformed serialized data.
    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
