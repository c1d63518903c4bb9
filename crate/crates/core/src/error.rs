use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("empty field")]
    EmptyField,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("cell {cell} is not unit length (|m| = {norm})")]
    NonUnitMagnetization { cell: usize, norm: f64 },

    #[error("GMRES did not converge: {iterations} iterations, residual {residual:e} (target {target:e})")]
    KrylovNotConverged {
        iterations: usize,
        residual: f64,
        target: f64,
    },

    #[error("cell {cell} has vanishing norm {norm:e} before projection")]
    DegenerateProjection { cell: usize, norm: f64 },

    #[error("step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invariant audit failed:\n{}", .0.join("\n"))]
    Audit(Vec<String>),

    #[error("configuration error:\n{}", .0.join("\n"))]
    Config(Vec<String>),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// True for errors raised by the numerical core rather than by input validation.
    pub fn is_solver_failure(&self) -> bool {
        match self {
            Error::KrylovNotConverged { .. } | Error::DegenerateProjection { .. } | Error::Audit(_) => true,
            Error::Step { source, .. } => source.is_solver_failure(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
