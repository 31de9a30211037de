use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("block size exceeds sample size (m = {block_size}, N = {rows})")]
    BlockSizeTooLarge { block_size: usize, rows: usize },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("cannot parse value {value:?} at row {row}, column `{column}`")]
    Parse {
        row: usize,
        column: String,
        value: String,
    },

    #[error("dates are not in strictly increasing order at row {row}")]
    UnorderedDates { row: usize },

    #[error(
        "insufficient effective sample: {0} observations carry positive weight, need at least 3"
    )]
    InsufficientEffectiveSample(usize),

    #[error("no feasible start: objective is infinite at every trial point")]
    NoFeasibleStart,

    #[error("quantile level {0} is not above the intermediate order tau0 = 0.8")]
    BelowIntermediateOrder(f64),

    #[error("prediction failed at query point {point:?}: {source}")]
    Prediction {
        point: Vec<f64>,
        #[source]
        source: Box<Error>,
    },

    #[error("unsupported document format `{found}` (expected `{expected}`)")]
    UnsupportedFormat { expected: String, found: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
