use thiserror::Error;

/// Errors raised anywhere in the simulation pipeline.
#[derive(Debug, Error)]
pub enum CascadeError {
    #[error("operator built for {expected} used on a space of dimension {found}")]
    SpaceMismatch { expected: String, found: usize },

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("integration failed at t = {time_ps} ps: {reason}")]
    Integration { time_ps: f64, reason: String },

    #[error("no density-matrix snapshot retained at t = {0} ps")]
    MissingSnapshot(f64),

    #[error("degenerate two-photon matrix: trace {trace:e} below floor {floor:e}")]
    Degenerate { trace: f64, floor: f64 },

    #[error("non-finite entry in {0}")]
    NonFinite(String),

    #[error("two-photon matrix trace {0} differs from 1")]
    NotNormalized(f64),

    #[error("config: {0}")]
    Config(String),

    #[error("csv schema violation in {file}: {reason}")]
    Schema { file: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CascadeError {
    pub fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        CascadeError::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// Short machine-readable tag used in the CLI's error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            CascadeError::SpaceMismatch { .. } => "space_mismatch",
            CascadeError::InvalidParameter { .. } => "invalid_parameter",
            CascadeError::InvalidState(_) => "invalid_state",
            CascadeError::Integration { .. } => "integration",
            CascadeError::MissingSnapshot(_) => "missing_snapshot",
            CascadeError::Degenerate { .. } => "degenerate",
            CascadeError::NonFinite(_) => "non_finite",
            CascadeError::NotNormalized(_) => "not_normalized",
            CascadeError::Config(_) => "config",
            CascadeError::Schema { .. } => "schema",
            CascadeError::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, CascadeError>;
