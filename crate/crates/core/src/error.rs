use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Pivot magnitude fell below the singularity tolerance at the given
    /// (1-based) elimination step.
    #[error("matrix is singular at elimination step {step}")]
    Singular { step: usize },

    #[error("column {column} is identically zero")]
    DegenerateColumn { column: usize },

    #[error("weighted least-squares system is singular (all weights vanish or rank lost)")]
    SingularWeightedSystem,

    /// Subsampling ran out of observations at the given (1-based) step.
    #[error("design is rank deficient: observations exhausted at elimination step {step}")]
    RankDeficient { step: usize },

    #[error("no nonsingular subsample found in {tries} tries")]
    ExhaustedTries { tries: u64 },

    #[error("no candidate could be refined")]
    NoCandidates,

    #[error("too many subsets to enumerate: {count} exceeds the limit of {limit}")]
    TooLarge { count: f64, limit: f64 },

    #[error("required subsample count overflows")]
    Overflow,

    #[error("unknown column `{0}`")]
    UnknownColumn(String),

    #[error("factor `{0}` has a single level")]
    SingleLevelFactor(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("infeasible level frequencies: {0}")]
    InfeasibleFrequencies(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("thread pool: {0}")]
    ThreadPool(String),
}

impl Error {
    /// True for errors caused by malformed or inconsistent input data.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Dimension(_)
                | Error::NonFinite(_)
                | Error::InvalidArgument(_)
                | Error::UnknownColumn(_)
                | Error::SingleLevelFactor(_)
                | Error::Parse(_)
                | Error::InfeasibleFrequencies(_)
                | Error::Csv(_)
                | Error::Io(_)
                | Error::DegenerateColumn { .. }
        )
    }

    /// True for rank and feasibility failures of the numerical pipeline.
    pub fn is_rank_error(&self) -> bool {
        matches!(
            self,
            Error::Singular { .. }
                | Error::RankDeficient { .. }
                | Error::ExhaustedTries { .. }
                | Error::NoCandidates
                | Error::TooLarge { .. }
                | Error::Overflow
                | Error::SingularWeightedSystem
        )
    }
}
