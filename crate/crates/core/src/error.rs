use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse failure class, used by the command line to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Corpus,
    Query,
    Numeric,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("malformed snapshot: {0}")]
    Snapshot(String),

    #[error("corpus has an empty vocabulary")]
    EmptyVocabulary,

    #[error("corpus stores expressions up to grade {have}, grade {need} required")]
    InsufficientGrade { need: usize, have: usize },

    #[error("window radius mismatch: corpus built with {have}, requested {need}")]
    WindowMismatch { need: usize, have: usize },

    #[error("unknown word `{0}`")]
    UnknownWord(String),

    #[error("expression `{0}` does not occur in the corpus")]
    UnknownExpression(String),

    #[error("expressions have different grades ({left} vs {right})")]
    GradeMismatch { left: usize, right: usize },

    #[error("no completion for context `{left} _ {right}`")]
    NoCompletion { left: String, right: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("tensor product of `{0}` is trivial")]
    EmptyTensor(String),

    #[error("element `{0}` splits in more than one way across the tensor factors")]
    AmbiguousSplit(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("label mismatch between codomain and domain at position {0}")]
    LabelMismatch(usize),

    #[error("row {row} sums to {sum}, not 1")]
    NotStochastic { row: usize, sum: f64 },

    #[error("entry ({row}, {col}) = {value} is outside [0, 1]")]
    EntryOutOfRange { row: usize, col: usize, value: f64 },

    #[error("entry ({0}, {1}) is zero where a positive value is required")]
    ZeroEntry(String, String),

    #[error("requested {dim} dimensions for {n} points")]
    DimensionTooLarge { dim: usize, n: usize },

    #[error("loss became non-finite at iteration {iteration}")]
    Diverged { iteration: usize },

    #[error("{0}")]
    Unsupported(String),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Io(_)
            | Error::Json(_)
            | Error::Csv(_)
            | Error::Snapshot(_)
            | Error::EmptyVocabulary
            | Error::InsufficientGrade { .. }
            | Error::WindowMismatch { .. } => ErrorClass::Corpus,
            Error::UnknownWord(_)
            | Error::UnknownExpression(_)
            | Error::GradeMismatch { .. }
            | Error::NoCompletion { .. }
            | Error::InvalidParameter(_)
            | Error::EmptyTensor(_)
            | Error::AmbiguousSplit(_)
            | Error::DimensionTooLarge { .. }
            | Error::Unsupported(_) => ErrorClass::Query,
            Error::ShapeMismatch(_)
            | Error::LabelMismatch(_)
            | Error::NotStochastic { .. }
            | Error::EntryOutOfRange { .. }
            | Error::ZeroEntry(..)
            | Error::Diverged { .. } => ErrorClass::Numeric,
        }
    }
}
