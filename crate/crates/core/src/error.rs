use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Broad failure classes, used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    /// Bad invocation or unusable configuration.
    Config,
    /// Input data is malformed or cannot support the request.
    Data,
    /// A numerical precondition failed (rank, degenerate statistics).
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("format error: {0}")]
    Format(String),

    #[error("format error at line {line}: {message}")]
    FormatAtLine { line: usize, message: String },

    #[error("truncated record at byte offset {offset}")]
    Truncated { offset: u64 },

    #[error("duplicate word `{0}`")]
    DuplicateWord(String),

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("unknown class `{0}`")]
    UnknownClass(String),

    #[error("undefined IDF: term `{0}` occurs in no document")]
    UndefinedIdf(String),

    #[error("requested dimension {requested} exceeds available rank {cap}")]
    Dimension { requested: usize, cap: usize },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("invalid weight {value} at position {index}; weights must be positive and finite")]
    Weight { index: usize, value: f64 },

    #[error("ambient dimension mismatch: {left} vs {right}")]
    AmbientMismatch { left: usize, right: usize },

    #[error("number of angles t={t} out of range 1..={max}")]
    AngleCount { t: usize, max: usize },

    #[error("class `{0}` has no in-vocabulary words")]
    EmptyClass(String),

    #[error("degenerate query: {0}")]
    DegenerateQuery(String),

    #[error("training error: {0}")]
    Training(String),

    #[error("corpus too small: {found} documents, need at least {needed}")]
    CorpusTooSmall { found: usize, needed: usize },

    #[error("no feasible grid point: {0}")]
    NoFeasibleGridPoint(String),

    #[error("degenerate test: {0}")]
    DegenerateTest(String),

    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("model container: {0}")]
    Container(String),

    #[error("configuration: {0}")]
    Config(String),
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Config(_) => ErrorCategory::Config,
            Error::Io(_)
            | Error::Format(_)
            | Error::FormatAtLine { .. }
            | Error::Truncated { .. }
            | Error::DuplicateWord(_)
            | Error::EmptyCorpus
            | Error::UnknownClass(_)
            | Error::EmptyClass(_)
            | Error::DegenerateQuery(_)
            | Error::AmbientMismatch { .. }
            | Error::Container(_)
            | Error::CorpusTooSmall { .. }
            | Error::Training(_) => ErrorCategory::Data,
            Error::UndefinedIdf(_)
            | Error::Dimension { .. }
            | Error::DegenerateInput(_)
            | Error::Weight { .. }
            | Error::AngleCount { .. }
            | Error::NoFeasibleGridPoint(_)
            | Error::DegenerateTest(_) => ErrorCategory::Numerical,
            Error::Fold { source, .. } => source.category(),
        }
    }

    pub(crate) fn in_fold(self, fold: usize) -> Error {
        Error::Fold {
            fold,
            source: Box::new(self),
        }
    }
}
