use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the pipeline.
///
/// Variants fall into two families: user/validation problems (bad files,
/// bad options, insufficient data for the requested model) and numeric
/// failures (rank deficiency, non-convergence). [`Error::is_numeric`] tells
/// them apart; the CLI maps them to different exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {0}")]
    MissingFile(PathBuf),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error at data row {row}, column {col}: {msg}")]
    Parse { row: usize, col: usize, msg: String },

    #[error("ragged rows: data row {row} has {found} fields, expected {expected}")]
    RaggedRows { row: usize, expected: usize, found: usize },

    #[error("invalid panel: {0}")]
    InvalidPanel(String),

    #[error("invalid order: {0}")]
    InvalidOrder(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("insufficient sample: {0}")]
    InsufficientSample(String),

    #[error("non-finite input to {0}")]
    NonFiniteInput(&'static str),

    #[error("symmetric eigensolver did not converge within {sweeps} sweeps")]
    ConvergenceFailure { sweeps: usize },

    #[error("every eigenvalue was floored (largest eigenvalue {lambda_max:e})")]
    AllEigenvaluesFloored { lambda_max: f64 },

    #[error("rank deficient design: detected rank {rank} of {cols} columns{}", series_suffix(.series))]
    RankDeficient {
        rank: usize,
        cols: usize,
        series: Option<usize>,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate spectrum: all eigenvalues are numerically zero")]
    DegenerateSpectrum,

    #[error("matrix does not have orthonormal columns (deviation {0:e})")]
    NotOrthonormal(f64),

    #[error("degenerate draw: loading matrix ill-conditioned after {0} attempts")]
    DegenerateDraw(usize),

    #[error("rolling origin {origin}: {source}")]
    AtOrigin {
        origin: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

fn series_suffix(series: &Option<usize>) -> String {
    match series {
        Some(i) => format!(" (series {i})"),
        None => String::new(),
    }
}

impl Error {
    /// True for failures of the numerical machinery rather than of the input.
    pub fn is_numeric(&self) -> bool {
        match self {
            Error::ConvergenceFailure { .. }
            | Error::AllEigenvaluesFloored { .. }
            | Error::RankDeficient { .. }
            | Error::Domain(_)
            | Error::DegenerateSpectrum
            | Error::NotOrthonormal(_)
            | Error::DegenerateDraw(_)
            | Error::NonFiniteInput(_) => true,
            Error::AtOrigin { source, .. } => source.is_numeric(),
            _ => false,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
