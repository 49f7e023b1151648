use thiserror::Error;

#[derive(Debug, Error)]
pub enum RlabError {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("invalid atomic function: {0}")]
    InvalidFunction(String),
    #[error("functions are not co-atomic")]
    NotCoAtomic,
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("solver did not converge: {0}")]
    NoConvergence(String),
    #[error("io error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, RlabError>;
