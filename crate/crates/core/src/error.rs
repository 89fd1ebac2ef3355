use thiserror::Error;

pub type Result<T> = std::result::Result<T, PbdmError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PbdmError {
    #[error("configuration error on axis {axis}: {reason}")]
    Grid { axis: &'static str, reason: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("singular system: zero pivot at row {pivot}")]
    Singular { pivot: usize },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("undefined: {0}")]
    Undefined(String),
}
