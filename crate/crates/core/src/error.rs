use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("illumination channel {channel} is {value}, must be at least {min}")]
    IlluminationTooSmall { channel: usize, value: f64, min: f64 },

    #[error("image has no pixels")]
    EmptyImage,

    #[error("buffer holds {len} values but a {width}x{height} grid needs {expected}")]
    BufferLength {
        width: usize,
        height: usize,
        len: usize,
        expected: usize,
    },

    #[error("dimension mismatch: {left:?} vs {right:?}")]
    DimensionMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("invalid value {value} at pixel index {index}")]
    InvalidValue { index: usize, value: f64 },

    #[error("pixel ({x}, {y}) is outside the {width}x{height} grid")]
    OutOfBounds {
        x: usize,
        y: usize,
        width: usize,
        height: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown preset `{0}` (expected blob, bars or ramp)")]
    UnknownPreset(String),

    #[error("scene size {width}x{height} is below the {min}x{min} minimum")]
    SizeTooSmall {
        width: usize,
        height: usize,
        min: usize,
    },

    #[error("mask selects no pixels")]
    EmptyMask,

    #[error("state sequence is empty")]
    EmptySequence,
}
