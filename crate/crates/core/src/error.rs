use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Array shapes disagree with each other or with a declared geometry.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// An argument is outside its documented domain.
    #[error("invalid input: {0}")]
    Invalid(String),

    /// A NaN or infinity showed up where only finite samples are allowed.
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    /// Mask calibration could not hit the requested sampling density.
    #[error(
        "mask calibration failed: target fraction {target:.6}, best {best:.6} after {attempts} attempts"
    )]
    MaskCalibration {
        target: f64,
        best: f64,
        attempts: usize,
    },

    /// The iteration produced non-finite values.
    #[error("numerical divergence at iteration {iteration}")]
    NumericalDivergence { iteration: usize },

    /// The dense linear algebra backend reported a failure.
    #[error("linear algebra backend: {0}")]
    Linalg(String),

    /// The raw-file header could not be parsed.
    #[error("raw header: {0}")]
    RawHeader(String),

    /// The raw-file payload ended before the header-declared length.
    #[error("raw payload truncated: expected {expected} bytes, got {got}")]
    RawTruncated { expected: usize, got: usize },

    /// The raw-file payload is longer than the header-declared length.
    #[error("raw payload size mismatch: expected {expected} bytes, got {got}")]
    RawPayloadMismatch { expected: usize, got: usize },

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("image encode: {0}")]
    Image(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::ShapeMismatch(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
}
