//! Crate-wide error type.

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by any stage of the pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Tensor dimensions incompatible with the requested operation.
    #[error("shape mismatch in {context}: {lhs:?} vs {rhs:?}")]
    Shape {
        context: String,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },

    /// Bad user-supplied input (empty query, oversize sequence, ...).
    #[error("invalid input: {0}")]
    Input(String),

    /// Bad configuration (vocabulary, model config, experiment config).
    #[error("configuration error: {0}")]
    Config(String),

    /// Text parse failure with a position (line number for files,
    /// byte offset for the ablation grammar).
    #[error("parse error at {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    /// Weight archive problems: missing tensors, shape mismatches,
    /// corrupt headers. Carries the offending tensor name where known.
    #[error("weight archive error: {0}")]
    Load(String),

    /// Numeric failure (e.g. SVD non-convergence).
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// Evaluation errors (missing queries, degenerate statistics, ...).
    #[error("evaluation error: {0}")]
    Eval(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn shape(context: impl Into<String>, lhs: &[usize], rhs: &[usize]) -> Self {
        Error::Shape {
            context: context.into(),
            lhs: lhs.to_vec(),
            rhs: rhs.to_vec(),
        }
    }
}
