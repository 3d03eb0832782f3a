use thiserror::Error;

use crate::dataset::ClassBin;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("trial `{trial_id}` has no samples left after quality filtering")]
    EmptyTrial { trial_id: String },

    #[error("trial `{trial_id}` has no samples")]
    NoSamples { trial_id: String },

    #[error("session `{participant_id}` has no neutral trials with valid samples")]
    NoNeutralTrials { participant_id: String },

    #[error("screen dimension is zero or negative")]
    ZeroScreenDimension,

    #[error("no valid samples: {0}")]
    NoValidSamples(String),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("channel `{0}` has no data points")]
    EmptyChannel(String),

    #[error("value {value} out of range for {what} (expected {expected})")]
    OutOfRange {
        what: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("unknown label `{0}`")]
    UnknownLabel(String),

    #[error("class {0:?} has no records")]
    EmptyClass(ClassBin),

    #[error("{0} is empty")]
    EmptySet(&'static str),

    #[error("record `{0}` has no labels")]
    MissingLabels(String),

    #[error("empty rating group: {0}")]
    EmptyGroup(String),

    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: String, found: String },

    #[error("training diverged at epoch {epoch}: loss is not finite")]
    Divergence { epoch: usize },

    #[error("grid search has no cells")]
    EmptyGrid,

    #[error("{path}: schema error{}: {msg}", row.map(|r| format!(" at row {r}")).unwrap_or_default())]
    Schema {
        path: String,
        row: Option<usize>,
        msg: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    /// Groups error variants for CLI exit-code mapping.
    pub fn kind(&self) -> ErrorKind {
        use Error::*;
        match self {
            Divergence { .. } => ErrorKind::Numeric,
            Io { .. } | Csv { .. } | Json { .. } => ErrorKind::Io,
            _ => ErrorKind::Validation,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Numeric,
    Io,
}
