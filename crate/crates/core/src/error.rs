use thiserror::Error;

/// Errors raised by the sensor model, solver and processing stages.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SensorError {
    #[error("invalid sensor configuration: {0}")]
    InvalidConfig(String),

    #[error("unknown preset `{0}` (expected one of 4x4, 3x16, 8x8)")]
    UnknownPreset(String),

    #[error("failed to parse configuration: {0}")]
    ConfigParse(String),

    #[error("ADC reading {reading} exceeds full scale {full_scale}")]
    ReadingOutOfRange { reading: u32, full_scale: u32 },

    #[error("taxel index ({row}, {col}) outside {rows}x{cols} grid")]
    IndexOutOfRange {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },

    #[error("grid is {got_rows}x{got_cols}, expected {rows}x{cols}")]
    DimensionMismatch {
        rows: usize,
        cols: usize,
        got_rows: usize,
        got_cols: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("nodal system is singular at pivot {pivot}")]
    SingularSystem { pivot: usize },
}

pub type Result<T, E = SensorError> = std::result::Result<T, E>;
