use thiserror::Error;

/// Errors raised by the geometry kernels, classifier heads and training loop.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("matrix is not symmetric (asymmetry {asymmetry:.3e} exceeds tolerance {tolerance:.3e})")]
    NotSymmetric { asymmetry: f64, tolerance: f64 },

    #[error("matrix is not positive definite (non-positive pivot {pivot:.3e} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("numeric failure in {op}: {detail}")]
    Numeric { op: &'static str, detail: String },

    #[error("domain error in {op}: {detail}")]
    Domain { op: &'static str, detail: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("matrices do not commute (commutator norm {commutator:.3e} exceeds {tolerance:.3e})")]
    NonCommuting { commutator: f64, tolerance: f64 },

    #[error("step rejected: updated matrix leaves the SPD cone (smallest eigenvalue {min_eigenvalue:.3e})")]
    StepRejected { min_eigenvalue: f64 },

    #[error("degenerate direction: {0}")]
    DegenerateDirection(String),

    #[error("parse error at {location}: {detail}")]
    Parse { location: String, detail: String },

    #[error("io error: {0}")]
    Io(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn numeric(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Numeric { op, detail: detail.into() }
    }

    pub(crate) fn domain(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain { op, detail: detail.into() }
    }

    /// Wraps the error with a human-readable location such as `epoch 3, batch 7`.
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context { context: context.into(), source: Box::new(self) }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
