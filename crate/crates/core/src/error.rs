//! Error taxonomy shared by every module in the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input violates a basic precondition (empty raster, bad parameter).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Two rasters that must share dimensions do not.
    #[error("dimension mismatch: {context}: {expected_width}x{expected_height} vs {got_width}x{got_height}")]
    DimensionMismatch {
        context: &'static str,
        expected_width: u32,
        expected_height: u32,
        got_width: u32,
        got_height: u32,
    },

    /// A mask that must contain at least one pixel is empty.
    #[error("empty mask: {0}")]
    EmptyMask(&'static str),

    /// A documented type invariant does not hold.
    #[error("invariant violation: {0}")]
    InvariantViolation(String),

    /// Malformed raster file. `offset` is the byte position of the defect.
    #[error("format error at byte {offset}: {message}")]
    Format { offset: u64, message: String },

    /// Fewer than two support pixels for a scale-and-shift fit.
    #[error("insufficient support: {pixels} pixel(s), need at least 2")]
    InsufficientSupport { pixels: usize },

    /// The normal system of the scale-and-shift fit is singular
    /// (source values effectively constant on the support).
    #[error("degenerate support: source values are constant on the support")]
    DegenerateSupport,

    /// The occluder covers the whole target object; the sample is rejected.
    #[error("fully occluded object: no visible pixel remains")]
    FullyOccluded,

    /// Foreground depth is not strictly in front of the background at some
    /// masked pixel (strict compositing mode only).
    #[error("depth order violation at pixel ({u}, {v}): foreground {foreground} >= background {background}")]
    DepthOrderViolation {
        u: u32,
        v: u32,
        foreground: f64,
        background: f64,
    },

    /// A synthetic scene description cannot be rendered.
    #[error("invalid scene spec: {0}")]
    InvalidSpec(String),

    /// No prediction raster for a manifest sample.
    #[error("missing prediction for sample {sample_id}: {path}")]
    MissingPrediction { sample_id: String, path: String },

    /// Depth values are non-positive where a logarithm is required.
    #[error("invalid depth: {0}")]
    InvalidDepth(String),

    /// A velocity field returned a non-finite value during integration.
    #[error("numerical error at integration step {step}: non-finite field output")]
    NumericalError { step: usize },

    /// Manifest-level defect (duplicate id, unreadable line).
    #[error("manifest error: {0}")]
    Manifest(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn dims(context: &'static str, expected: (u32, u32), got: (u32, u32)) -> Self {
        Error::DimensionMismatch {
            context,
            expected_width: expected.0,
            expected_height: expected.1,
            got_width: got.0,
            got_height: got.1,
        }
    }
}
