use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mode {mode} for tensor of order {order}")]
    InvalidMode { mode: usize, order: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("duplicate mode {0} in factor list")]
    DuplicateMode(usize),

    #[error("non-finite value in {0} input")]
    NonFinite(&'static str),

    #[error("{routine} did not converge after {sweeps} sweeps (residual {residual:e})")]
    Convergence {
        routine: &'static str,
        sweeps: usize,
        residual: f64,
    },

    #[error("regularized within-class scatter is not positive definite (min eigenvalue {min_eig:e}); increase the ridge")]
    Singular { min_eig: f64 },

    #[error("mode {mode}: {source}")]
    InMode {
        mode: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("degenerate mode: all singular values are zero")]
    Degenerate,

    #[error("requested rank {rank} exceeds extent {extent} of mode {mode}")]
    RankTooLarge {
        mode: usize,
        rank: usize,
        extent: usize,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error in {path} at byte {offset}: {message}")]
    Parse {
        path: PathBuf,
        offset: usize,
        message: String,
    },

    #[error("data error: {0}")]
    Data(String),

    #[error("model format error: {0}")]
    Format(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Coarse classification used by front-ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Data,
    Numeric,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Config(_) => ErrorClass::Usage,
            Error::NonFinite(_)
            | Error::Convergence { .. }
            | Error::Singular { .. }
            | Error::Degenerate => ErrorClass::Numeric,
            Error::InMode { source, .. } => source.class(),
            _ => ErrorClass::Data,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_mode(self, mode: usize) -> Self {
        Error::InMode {
            mode,
            source: Box::new(self),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
