use chrono::NaiveDate;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed header: {0}")]
    MalformedHeader(String),

    #[error("row {row}: unparseable date {value:?} (expected YYYY-MM-DD)")]
    BadDate { row: usize, value: String },

    #[error("row {row}: date {date} does not follow the previous date")]
    DateOrder { row: usize, date: NaiveDate },

    #[error("row {row}, column {column:?}: unparseable price {value:?}")]
    BadNumber {
        row: usize,
        column: String,
        value: String,
    },

    #[error("row {row}, column {column:?}: non-positive price {value}")]
    NonPositivePrice {
        row: usize,
        column: String,
        value: f64,
    },

    #[error("row {row}: expected {expected} cells, found {found}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("asset {asset:?} has {fraction:.1}% missing cells (limit 10%)")]
    TooManyMissing { asset: String, fraction: f64 },

    #[error("need at least {needed} rows, found {found}")]
    TooFewRows { needed: usize, found: usize },

    #[error("panels share no dates")]
    EmptyIntersection,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("duplicate asset label {0:?}")]
    DuplicateLabel(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("covariance matrix numerically singular (condition estimate {condition:.3e})")]
    Singular { condition: f64 },

    #[error("{solver} did not converge within {iterations} iterations")]
    NonConvergence {
        solver: &'static str,
        iterations: usize,
        best: Vec<f64>,
    },

    #[error("internal solver failure: {0}")]
    Internal(String),

    #[error("estimation failed: {reason} (best objective {best_objective:.6e})")]
    Estimation { reason: String, best_objective: f64 },

    #[error("iteration {iteration}: {source}")]
    AtIteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("asset {asset:?}: {source}")]
    AtAsset {
        asset: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{failed} of {total} assets failed to fit: {details}")]
    AssetFits {
        failed: usize,
        total: usize,
        details: String,
    },

    #[error("{failed} of {total} rolling windows failed (limit 5%); first: {first}")]
    TooManyWindowFailures {
        failed: usize,
        total: usize,
        first: String,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by the input data rather than by numerics.
    pub fn is_data_error(&self) -> bool {
        match self {
            Error::MalformedHeader(_)
            | Error::BadDate { .. }
            | Error::DateOrder { .. }
            | Error::BadNumber { .. }
            | Error::NonPositivePrice { .. }
            | Error::RaggedRow { .. }
            | Error::TooManyMissing { .. }
            | Error::TooFewRows { .. }
            | Error::EmptyIntersection
            | Error::DimensionMismatch(_)
            | Error::DuplicateLabel(_)
            | Error::Csv(_)
            | Error::Io(_) => true,
            Error::AtIteration { source, .. } | Error::AtAsset { source, .. } => {
                source.is_data_error()
            }
            _ => false,
        }
    }
}
