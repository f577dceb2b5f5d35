use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("eigensolver did not converge (pair {index}, residual {residual:e})")]
    NonConvergence { index: usize, residual: f64 },
    #[error("ambiguous kernel threshold: gap ratio {ratio:.3e} < 10; refine the mesh")]
    AmbiguousKernel { ratio: f64 },
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("config error at {path}: {message}")]
    Config { path: String, message: String },
    #[error("{module}: {source}")]
    Module { module: &'static str, source: Box<Error> },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn context(self, module: &'static str) -> Error {
        Error::Module { module, source: Box::new(self) }
    }

    /// Innermost error, skipping module wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Module { source, .. } => source.root(),
            e => e,
        }
    }
}
