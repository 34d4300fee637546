use thiserror::Error;

pub type Result<T> = std::result::Result<T, ToaError>;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum ToaError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unknown figure preset `{0}`")]
    UnknownPreset(String),

    #[error("unit systems do not match: {0}")]
    UnitMismatch(String),

    #[error("quadrature did not converge: best value {value}, error estimate {err_estimate:e}")]
    NonConvergence {
        value: num_complex::Complex64,
        err_estimate: f64,
    },

    #[error("integration window {window:e} does not contain the wavefunction support")]
    WindowTooSmall { window: f64 },

    #[error("vanishing normalization for {method}: the state never reaches the detector within the window")]
    VanishingNormalization { method: String },

    #[error("flux inapplicable: {0}")]
    FluxInapplicable(String),

    #[error("semiclassical distribution requires a single localized packet: {0}")]
    TrajectoryInterpretationRequired(String),

    #[error("{method} is not available for this state: {reason}")]
    UnsupportedState { method: String, reason: String },

    #[error("operation expects a {expected} curve, got {got}")]
    WrongMethod { expected: String, got: String },

    #[error("curves cannot be discriminated: separation D is zero")]
    Indistinguishable,

    #[error("curve takes negative values and cannot be sampled")]
    NegativeCurve,

    #[error("not enough samples for the chi-square expected-count rule: {0}")]
    TooFewSamples(String),
}

impl ToaError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        ToaError::InvalidInput(msg.into())
    }
}
