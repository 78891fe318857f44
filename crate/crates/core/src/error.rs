use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("non-numeric cell {value:?} at row {row}, column {column}")]
    NonNumericCell {
        row: usize,
        column: String,
        value: String,
    },

    #[error("label value {0:?} not covered by the label coding")]
    UnknownLabel(String),

    #[error("duplicate column name {0:?}")]
    DuplicateColumn(String),

    #[error("column {0:?} not found")]
    MissingColumn(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("split would leave an empty partition")]
    DegenerateSplit,

    #[error("dataset has no {0} examples")]
    EmptyClass(&'static str),

    #[error("operation requires class labels but the response is real-valued")]
    NotClassification,

    #[error("operation requires a real-valued response but the response is class labels")]
    NotRegression,

    #[error("gram matrix is already centered")]
    AlreadyCentered,

    #[error("base learner failed: weighted error {epsilon} >= 0.5 on the first round")]
    BaseLearnerFailure { epsilon: f64 },

    #[error("exhaustive search capped at d <= {cap}, got d = {d}")]
    SubsetTooLarge { d: usize, cap: usize },

    #[error("least squares needs n > |mask|+1: n = {n}, |mask| = {size}")]
    Unfittable { n: usize, size: usize },

    #[error("fold {fold} rejected: {reason}")]
    FoldRejected { fold: usize, reason: String },
}
