use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cone {cone} has a singular ray matrix")]
    SingularCone { cone: usize },

    #[error("fan does not cover direction {direction:?}")]
    NotComplete { direction: Vec<f64> },

    #[error("cones {first} and {second} both contain direction {direction:?} in their interiors")]
    Overlapping {
        first: usize,
        second: usize,
        direction: Vec<f64>,
    },

    #[error("fan would need {rays} rays, above the limit of {limit}")]
    SizeLimit { rays: usize, limit: usize },

    #[error("rays {first} and {second} point in the same direction")]
    DuplicateDirection { first: usize, second: usize },

    #[error("invalid fan: {0}")]
    InvalidFan(String),

    #[error("no cone contains {}(best coefficient violation {violation:e})", .index.map(|i| format!("point {i} ")).unwrap_or_default())]
    NoCone {
        index: Option<usize>,
        violation: f64,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("parameter a[{index}] is at or below the degeneracy floor; its star vertex lies at infinity")]
    DegenerateRay { index: usize },

    #[error("point {index} is positively labeled but has f = 0; the likelihood is undefined")]
    UndefinedAtZero { index: usize },

    #[error("{points} data points exceed the enumeration cap of {cap}")]
    TooManyPoints { points: usize, cap: usize },

    #[error("parameter box is empty in coordinate {coordinate} (lo = {lo}, hi = {hi})")]
    InfeasibleBox { coordinate: usize, lo: f64, hi: f64 },

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("label {value:?} at row {row} is not 0 or 1")]
    Label { row: usize, value: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn at_point(self, index: usize) -> Self {
        match self {
            Error::NoCone { violation, .. } => Error::NoCone {
                index: Some(index),
                violation,
            },
            other => other,
        }
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
