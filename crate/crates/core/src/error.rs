use thiserror::Error;

use crate::ids::UserId;

/// Errors surfaced by the motif/PageRank pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("input contains no messages")]
    EmptyInput,

    #[error("duplicate join record for user {user}")]
    DuplicateJoin { user: UserId },

    #[error("join record later than first message for users: {}", format_users(.users))]
    JoinAfterFirstMessage { users: Vec<UserId> },

    #[error("timestamp {timestamp} precedes the store origin {t0}")]
    BeforeOrigin { timestamp: i64, t0: i64 },

    #[error("unknown user {user}")]
    UnknownUser { user: UserId },

    #[error("user {user} has not joined by end of week {week}")]
    NotYetJoined { user: UserId, week: u32 },

    #[error("negative inter-event gap of {delta}s (events out of order)")]
    NegativeGap { delta: i64 },

    #[error("k-gram length must be at least 1, got {k}")]
    InvalidKgramLength { k: usize },

    #[error("giant component is empty at week {week}")]
    EmptyGiantComponent { week: u32 },

    #[error("damping factor must lie in (0,1), got {value}")]
    InvalidDamping { value: f64 },

    #[error("invalid bin configuration: {message}")]
    InvalidBinConfig { message: String },

    #[error("score {score} outside the bin range [{lo}, {hi}]")]
    ScoreOutOfRange { score: f64, lo: f64, hi: f64 },

    #[error("no users joined by week {cutoff_week} remain in the giant component at week {label_week}")]
    EmptyPopulation { cutoff_week: u32, label_week: u32 },

    #[error("invalid fold plan: {message}")]
    InvalidFolds { message: String },

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("training labels contain a single class")]
    SingleClass,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("correlation undefined for constant input")]
    ConstantInput,

    #[error("feature row has width {got}, model expects {expected}")]
    FeatureWidthMismatch { expected: usize, got: usize },

    #[error("invalid configuration: {message}")]
    InvalidConfig { message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Whether the error stems from invalid input data rather than a
    /// runtime failure. The CLI maps data errors to a dedicated exit code.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::EmptyInput
                | Error::DuplicateJoin { .. }
                | Error::JoinAfterFirstMessage { .. }
                | Error::BeforeOrigin { .. }
                | Error::UnknownUser { .. }
                | Error::NotYetJoined { .. }
                | Error::EmptyPopulation { .. }
        )
    }
}

fn format_users(users: &[UserId]) -> String {
    let mut joined = String::new();
    for (i, user) in users.iter().enumerate() {
        if i > 0 {
            joined.push_str(", ");
        }
        joined.push_str(user.as_str());
    }
    joined
}
