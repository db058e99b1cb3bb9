use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },

    #[error("malformed tree: {0}")]
    TreeStructure(String),

    #[error("duplicate leaf label {0:?}")]
    DuplicateLabel(String),

    #[error("tree has no leaves")]
    EmptyTree,

    #[error("unknown label {0:?}")]
    UnknownLabel(String),

    #[error("label mismatch: {0}")]
    LabelMismatch(String),

    #[error("zero-norm embedding vector for labels: {}", .0.join(", "))]
    ZeroVector(Vec<String>),

    #[error("embedding for {label:?} has dimension {found}, expected {expected}")]
    DimensionMismatch {
        label: String,
        expected: usize,
        found: usize,
    },

    #[error("invalid embedding value for {label:?}: {message}")]
    InvalidEmbedding { label: String, message: String },

    #[error("matrix is not normalized into [0, 1]")]
    NotNormalized,

    #[error("invalid distance value {value} between {a:?} and {b:?}")]
    InvalidDistance { a: String, b: String, value: f64 },

    #[error("blend weight {0} outside [0, 1]")]
    InvalidWeight(f64),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("{requested} clusters cannot be formed because of tied merge heights (nearest attainable: {})", nearest(*.below, *.above))]
    UnattainableK {
        requested: usize,
        below: Option<usize>,
        above: Option<usize>,
    },

    #[error("number of clusters {k} outside 1..={n}")]
    KOutOfRange { k: usize, n: usize },

    #[error("invalid dendrogram: {0}")]
    InvalidDendrogram(String),

    #[error("invalid record: {0}")]
    InvalidRecord(String),

    #[error("purchased item {item:?} (keyword {keyword:?}) is not in the clustered label set")]
    UnknownItem { keyword: String, item: String },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("no attainable (alpha, K) cell in the grid")]
    NoAttainableCell,

    #[error("unknown {kind} {name:?} (available: {})", .available.join(", "))]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        available: Vec<String>,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("{stage}{}: {source}", .segment.map(|s| format!(" (segment {s})")).unwrap_or_default())]
    Stage {
        stage: &'static str,
        segment: Option<usize>,
        #[source]
        source: Box<Error>,
    },

    #[error("internal invariant violated: {0}")]
    Internal(String),
}

fn nearest(below: Option<usize>, above: Option<usize>) -> String {
    match (below, above) {
        (Some(b), Some(a)) => format!("{b} below, {a} above"),
        (Some(b), None) => format!("{b} below"),
        (None, Some(a)) => format!("{a} above"),
        (None, None) => "none".into(),
    }
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_stage(self, stage: &'static str, segment: Option<usize>) -> Self {
        Error::Stage {
            stage,
            segment,
            source: Box::new(self),
        }
    }

    /// Innermost error, looking through stage provenance wrappers.
    pub fn root_cause(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root_cause(),
            other => other,
        }
    }
}
