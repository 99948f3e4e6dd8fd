use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("shape mismatch in {context}: expected {expected:?}, got {actual:?}")]
    Shape {
        context: &'static str,
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("backward called before forward on {0}")]
    NoForwardCache(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("label {label} out of range for {num_classes} classes")]
    LabelOutOfRange { label: usize, num_classes: usize },

    #[error("index {index} out of range for {len} samples")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("unknown {what}: {value}")]
    Unknown { what: &'static str, value: String },

    #[error("csv: empty file")]
    CsvEmpty,

    #[error("csv: missing label column")]
    CsvMissingLabel,

    #[error("csv: non-numeric feature at row {row}, column {column}")]
    CsvNonNumericFeature { row: usize, column: String },

    #[error("csv: non-integer label at row {row}")]
    CsvNonIntegerLabel { row: usize },

    #[error("class {class} has {count} samples; at least {required} needed to stratify")]
    TooFewSamples {
        class: usize,
        count: usize,
        required: usize,
    },

    #[error("config: {0}")]
    Config(String),

    #[error("{phase} failed at seed {seed}, episode {episode}, step {step}: {source}")]
    Run {
        phase: &'static str,
        seed: u64,
        episode: usize,
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
