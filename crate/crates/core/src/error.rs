use thiserror::Error;

/// Failures while reading or writing the on-disk formats.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormatError {
    #[error("bad magic: expected {expected:?}")]
    BadMagic { expected: &'static str },
    #[error("malformed header: {0}")]
    Header(String),
    #[error("payload length {actual} does not match {expected} bytes implied by the header")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("invalid label byte {value} at index {index}")]
    InvalidLabel { index: usize, value: u8 },
    #[error("fringe order {0} does not fit in 16 bits")]
    OrderOverflow(i32),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("data length {actual} does not match {width}x{height}")]
    BadLength {
        width: usize,
        height: usize,
        actual: usize,
    },
    #[error("non-finite value")]
    NonFinite,
    #[error("phase shifting needs at least 3 steps, got {0}")]
    TooFewSteps(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("empty region")]
    EmptyRegion,
    #[error("map has no valid points")]
    NoValidPoints,
    #[error("degenerate map: normalization maximum {0} is not positive")]
    DegenerateMap(f64),
    #[error("epipolar line is parallel to the fringe axis")]
    DegenerateGeometry,
    #[error("triangulated point lies at infinity")]
    PointAtInfinity,
    #[error("calibration matrix {0} is rank deficient")]
    RankDeficient(&'static str),
    #[error("invalid scene spec: {0}")]
    InvalidSpec(String),
    #[error("unknown scene suite {0:?}")]
    UnknownSuite(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
