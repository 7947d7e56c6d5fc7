use thiserror::Error;

/// Errors produced by the model, analysis and solver layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("endemic equilibrium absent: reproduction number {r} <= 1")]
    EndemicAbsent { r: f64 },

    #[error("singular sensitivity: reverse-transcriptase efficacy equals 1")]
    Singular,

    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("positivity violated at t = {t}: component {component} = {value:e} below {limit:e}")]
    PositivityViolation {
        t: f64,
        component: usize,
        value: f64,
        limit: f64,
    },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("closed-form and numeric stability verdicts disagree: {0}")]
    VerdictMismatch(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// Whether the failure stems from the numerical machinery rather than the inputs.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::StepSizeUnderflow { .. }
                | Error::PositivityViolation { .. }
                | Error::Numeric(_)
                | Error::VerdictMismatch(_)
        )
    }
}
