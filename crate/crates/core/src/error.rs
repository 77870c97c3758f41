use thiserror::Error;

/// Errors raised by the simulator and the analysis routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("bit width {0} is outside 1..=64")]
    InvalidWidth(u32),

    #[error("operand value {value} does not fit in {width} bits")]
    OperandOutOfRange { value: u64, width: u32 },

    #[error("operand widths differ: {left} vs {right}")]
    WidthMismatch { left: u32, right: u32 },

    #[error("splitting point t={t} is outside 1..={max} for n={n}", max = n.saturating_sub(1))]
    SplitOutOfRange { n: u32, t: u32 },

    #[error("configuration n={n}, t={t} is outside the closed-form regime: {reason}")]
    OutOfRegime { n: u32, t: u32, reason: &'static str },

    #[error("n={n} exceeds the exhaustive ceiling of {ceiling}")]
    AboveCeiling { n: u32, ceiling: u32 },

    #[error("bit index {index} out of range for a {width}-bit product")]
    BitIndex { index: u32, width: u32 },

    #[error("accumulation index {index} out of range for n={n}")]
    AccumulationIndex { index: u32, n: u32 },

    #[error("invalid input distribution: {0}")]
    Distribution(String),

    #[error("invalid sampling plan: {0}")]
    Plan(String),

    #[error("malformed image: {0}")]
    Image(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid sweep: {0}")]
    Sweep(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Process exit status for a successful run.
pub const EXIT_OK: i32 = 0;
/// Invalid arguments or configuration.
pub const EXIT_USAGE: i32 = 2;
/// Request beyond what the tool will compute, such as an exhaustive run
/// above the ceiling.
pub const EXIT_CEILING: i32 = 3;
/// Reading or writing a file failed, or an input file is malformed.
pub const EXIT_IO: i32 = 4;

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::AboveCeiling { .. } => EXIT_CEILING,
            Error::Io(_) | Error::Image(_) => EXIT_IO,
            _ => EXIT_USAGE,
        }
    }
}
