use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, NgcaError>;

#[derive(Debug, Error)]
pub enum NgcaError {
    #[error("invalid data matrix: {0}")]
    InvalidData(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("column {column} has zero variance")]
    ConstantFeature { column: usize },

    #[error("ill-conditioned covariance: eigenvalue {eigenvalue:e} is below the floor {floor:e}")]
    IllConditionedCovariance { eigenvalue: f64, floor: f64 },

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    Asymmetric(f64),

    #[error("matrix is rank deficient: column residual {residual:e} below tolerance {tolerance:e}")]
    RankDeficient { residual: f64, tolerance: f64 },

    #[error("linear system is singular or not positive definite")]
    SingularSystem,

    #[error("basis is not orthonormal (max deviation {0:e})")]
    NotOrthonormal(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty validation set")]
    EmptyValidationSet,

    #[error("fastica update collapsed to a zero vector")]
    DegenerateDirection,

    #[error("normalization radicand {0:e} is not positive")]
    DegenerateNormalization(f64),

    #[error("no beta vector survived the threshold {tau}")]
    NoSurvivors { tau: f64 },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("not enough samples in class {label}: need {needed}, have {available}")]
    InsufficientClass { label: i8, needed: usize, available: usize },

    #[error("schema mismatch: {0}")]
    Schema(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl NgcaError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        NgcaError::Io {
            path: path.into(),
            source,
        }
    }
}
