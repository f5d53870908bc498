use thiserror::Error;

/// Errors raised across the surface Darcy pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("point outside the closest-point neighborhood: {0}")]
    Domain(String),

    #[error("numerical breakdown: {0}")]
    Numerical(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("degenerate mesh: {0}")]
    DegenerateMesh(String),

    #[error("degenerate element {cell}: {reason}")]
    DegenerateElement { cell: usize, reason: String },

    #[error("solver did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("singular system: {0}")]
    SingularSystem(String),

    #[error("invalid value: {0}")]
    Value(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
