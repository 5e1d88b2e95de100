use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid latent shape {c}x{h}x{w}: every dimension must be at least 1")]
    InvalidShape { c: u32, h: u32, w: u32 },

    #[error("invalid embedding parameters: {0}")]
    InvalidParams(String),

    #[error("invalid watermark: {0}")]
    InvalidWatermark(String),

    #[error("sample too imbalanced to embed: {0}")]
    ImbalancedSample(String),

    #[error("size mismatch: {0}")]
    SizeMismatch(String),

    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: String, actual: String },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("sigma must be finite and positive, got {0}")]
    NonpositiveSigma(f64),

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("attribution directory is empty")]
    EmptyDirectory,

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("malformed latent file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
