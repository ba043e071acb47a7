use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("EDF: {0}")]
    Edf(String),

    #[error("summary line {line}: {msg}")]
    Summary { line: usize, msg: String },

    #[error("invalid annotation for `{record_id}`: {msg}")]
    Annotation { record_id: String, msg: String },

    #[error("invalid recording: {0}")]
    Recording(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("record id mismatch: recording `{recording}`, annotation `{annotation}`")]
    RecordMismatch { recording: String, annotation: String },

    #[error("{what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("band `{name}` [{lo_hz}, {hi_hz}) Hz is invalid at {sample_rate_hz} Hz sampling (Nyquist {nyquist} Hz)")]
    Band {
        name: String,
        lo_hz: f64,
        hi_hz: f64,
        sample_rate_hz: f64,
        nyquist: f64,
    },

    #[error("feature extraction failed for epoch {epoch}, channel `{channel}`: {source}")]
    Feature {
        epoch: usize,
        channel: String,
        #[source]
        source: Box<Error>,
    },

    #[error("training labels contain a single class")]
    SingleClass,

    #[error("split: {0}")]
    Split(String),

    #[error("{model} did not converge: {detail}")]
    NotConverged { model: &'static str, detail: String },

    #[error("model file: {0}")]
    ModelFile(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
