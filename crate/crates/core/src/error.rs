use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("role spec: {0}")]
    RoleSpec(String),

    #[error("column `{0}` named in role spec is not in the data")]
    UnknownColumn(String),

    #[error("column `{0}` has no role")]
    UnassignedColumn(String),

    #[error("duplicate column name `{0}`")]
    DuplicateColumn(String),

    #[error("row {row}, column `{column}`: cannot parse `{token}` as a number")]
    ParseNumber { row: usize, column: String, token: String },

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("subject `{subject}` has conflicting values for time-fixed predictor `{column}`")]
    InconsistentSubject { subject: String, column: String },

    #[error("subject sets differ: `{0}` is present in only one input")]
    SubjectMismatch(String),

    #[error("contingency table has fewer than two nonzero rows or columns")]
    DegenerateTable,

    #[error("lowess: {0}")]
    Lowess(String),

    #[error("no split possible")]
    NoSplit,

    #[error("variable is unsplittable in this node")]
    Unsplittable,

    #[error("value type does not match split variable")]
    TypeMismatch,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("model: {0}")]
    Model(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
