use thiserror::Error;

use crate::model::Frequency;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid P-state: {0}")]
    InvalidPState(String),

    #[error("invalid processor: {0}")]
    InvalidProcessor(String),

    #[error("invalid slice timing: {0}")]
    InvalidTiming(String),

    #[error("{0} is not a P-state of this processor")]
    ForeignPState(Frequency),

    #[error("frequency {freq} is above f_max ({fmax})")]
    AboveMax { freq: Frequency, fmax: Frequency },

    #[error("frequency must be non-zero")]
    ZeroFrequency,

    #[error("MAPI is undefined for a slice with zero instructions")]
    ZeroInstructions,

    #[error("MAPI must be a non-negative number, got {0}")]
    InvalidMapi(f64),

    #[error("insufficient history: predictor window is empty")]
    InsufficientHistory,

    #[error("invalid policy table: {0}")]
    InvalidTable(String),

    #[error("invalid workload spec: {0}")]
    InvalidWorkload(String),

    #[error("unknown preset `{0}` (expected one of cg, ft, mg, sp)")]
    UnknownPreset(String),

    #[error("line {line}, column {column}: {message}")]
    Parse { line: u64, column: String, message: String },

    #[error("slice {index}: {message}")]
    Validation { index: usize, message: String },

    #[error("schedule has {schedule} entries but trace has {trace} slices")]
    LengthMismatch { schedule: usize, trace: usize },

    #[error("reports are not comparable: {0}")]
    FingerprintMismatch(String),

    #[error("invalid calibration input: {0}")]
    Calibration(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl From<toml::de::Error> for Error {
    fn from(e: toml::de::Error) -> Self {
        Error::Config(e.to_string())
    }
}

impl From<toml::ser::Error> for Error {
    fn from(e: toml::ser::Error) -> Self {
        Error::Config(e.to_string())
    }
}
