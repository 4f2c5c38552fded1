use thiserror::Error;

/// Errors shared across the sketch types and the wire format.
#[derive(Debug, Error)]
pub enum Error {
    #[error("key 0 is not a valid element of the key universe")]
    KeyZero,
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    #[error("value out of range: {0}")]
    Range(String),
    #[error("trit vectors have different widths")]
    WidthMismatch,
    #[error("packed trit value exceeds 2")]
    MalformedTrits,
    #[error("sketches have incompatible parameters: {0}")]
    IncompatibleSketch(String),
    #[error("syndrome decoding failed (more differences than the stash capacity)")]
    DecodeFailed,
    #[error("bad sketch file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
