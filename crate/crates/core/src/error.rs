use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parameter out of range: {0}")]
    ParameterOutOfRange(String),

    #[error("invalid finite series: {0}")]
    InvalidFiniteSeries(String),

    #[error("inconsistent series at index {index}: remaining mass is zero but c_k > 0")]
    InconsistentSeries { index: usize },

    #[error("stopping probability d_{index} is not defined past the terminal index {terminal}")]
    BeyondTerminal { index: usize, terminal: usize },

    #[error("insufficient precision ({bits} bits): {what}")]
    InsufficientPrecision { what: String, bits: u32 },

    #[error("division by zero")]
    DivisionByZero,

    #[error("index must be positive (got 0)")]
    ZeroIndex,

    #[error("sampler exceeded the cap of {cap} inputs")]
    Truncated { cap: u64 },

    #[error("tolerance {tol:e} not reached within {cap} terms")]
    ToleranceUnachievable { tol: f64, cap: usize },

    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },

    #[error("invalid experiment: {0}")]
    InvalidExperiment(String),

    #[error("not enough replications: {0}")]
    InsufficientReplications(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
