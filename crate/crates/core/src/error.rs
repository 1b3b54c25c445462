use thiserror::Error;

/// Errors raised by tensor algebra, chaining functionals and the bound machinery.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("singular tensor: {0}")]
    Singular(String),
    #[error("unknown metric id `{0}`")]
    Lookup(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    #[error("degenerate metric: {0}")]
    DegenerateMetric(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("constant fit failed: {0}")]
    FitFailure(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

macro_rules! ensure {
    ($cond:expr, $variant:ident, $($arg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err($crate::error::Error::$variant(format!($($arg)+)));
        }
    };
}
pub(crate) use ensure;
