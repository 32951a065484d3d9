use std::path::PathBuf;

use crate::game::BimodalContext;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("player set of size {size} exceeds the cap of {cap}")]
    PlayerSetTooLarge { size: usize, cap: usize },

    #[error("player index {index} out of range for a player set of size {size}")]
    PlayerOutOfRange { index: usize, size: usize },

    #[error("lattice of 2^{exponent} evaluations exceeds the budget of 2^{budget}")]
    BudgetExceeded { exponent: u32, budget: u32 },

    #[error("oracle failure at {context}: {reason}")]
    OracleFailure {
        context: Box<BimodalContext>,
        reason: String,
    },

    #[error("protocol mismatch: {0}")]
    ProtocolMismatch(String),

    #[error("value table is missing v(image={image:#b}, text={text:#b})")]
    IncompleteTable { image: u32, text: u32 },

    #[error("sample {sample}: {what} has no {role} players")]
    MissingRole { sample: String, what: String, role: String },

    #[error("sample {sample}: {what} has no {region} region")]
    MissingRegion {
        sample: String,
        what: String,
        region: String,
    },

    #[error("sample {sample}: missing {what}")]
    MissingCounterpart { sample: String, what: String },

    #[error("sample {sample}: normalizer for {metric} is zero")]
    DegenerateNormalizer { sample: String, metric: String },

    #[error("series has zero variance")]
    ZeroVariance,

    #[error("pearson needs two equal-length series of length >= 2 (got {left} and {right})")]
    SeriesLength { left: usize, right: usize },

    #[error("no samples to aggregate")]
    EmptyDataset,

    #[error("samples mix aspects {first} and {second}")]
    InconsistentAspect { first: String, second: String },

    #[error("{path}:{line}: {message}")]
    Schema {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("no rows to write")]
    EmptyReport,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn oracle(context: &BimodalContext, reason: impl Into<String>) -> Self {
        Error::OracleFailure {
            context: Box::new(context.clone()),
            reason: reason.into(),
        }
    }
}
