use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument outside the operation's domain (bad index, length mismatch).
    #[error("domain error: {0}")]
    Domain(String),

    /// A required precondition on the data does not hold.
    #[error("precondition failed: {0}")]
    Precondition(String),

    /// A zero row or column marginal; the expected count for that line is zero.
    #[error("zero marginal in {axis} {index}")]
    ZeroMarginal { axis: Axis, index: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("protocol error: {0}")]
    Protocol(String),

    /// Fixed-point encoding would leave the field's signed range after summation.
    #[error("fixed-point overflow at coordinate {index}: |{value}| * scale exceeds the headroom for {summands} summands")]
    Overflow { index: usize, value: f64, summands: usize },

    #[error("unknown {kind} `{name}`; available: {available}")]
    Unknown { kind: &'static str, name: String, available: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Row,
    Column,
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Axis::Row => "row",
            Axis::Column => "column",
        })
    }
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn protocol(msg: impl Into<String>) -> Self {
        Error::Protocol(msg.into())
    }

    /// True for errors caused by user configuration rather than data or runtime faults.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Unknown { .. } | Error::Parse(_))
    }
}
