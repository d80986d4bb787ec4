use thiserror::Error;

/// Errors produced by the geometry, solver and experiment layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("root finder did not converge on [{lo}, {hi}] after {iterations} iterations")]
    RootNotFound { lo: f64, hi: f64, iterations: usize },

    #[error("parameter singularity: {0}")]
    ParameterSingularity(String),

    #[error("regularity violated: curve {curve}, segment {segment} has length {length:e}")]
    Regularity { curve: usize, segment: usize, length: f64 },

    #[error("size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("singular step system (span condition fails for curve {curve})")]
    SingularSystem { curve: usize },

    #[error("energy inequality violated: {after:.16e} + {dissipation:.16e} > {before:.16e}")]
    Stability { before: f64, after: f64, dissipation: f64 },

    #[error("multipliers do not sum to zero (sum = {0:e})")]
    MultiplierSum(f64),

    #[error("invalid configuration at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("not horizontal: {0}")]
    NotHorizontal(String),

    #[error("{0}")]
    Invalid(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
