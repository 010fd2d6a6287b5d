use thiserror::Error;

/// Errors raised while building or evaluating geometric data.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error("argument error: {0}")]
    Argument(String),

    /// A pointwise domain violation without a known chart point.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("evaluation error at {point:?}: {reason}")]
    Evaluation { point: Vec<f64>, reason: String },

    #[error("construction error: {0}")]
    Construction(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("incompatible structure at {point:?}: {reason}")]
    Incompatible { point: Vec<f64>, reason: String },

    #[error("verification failed: residual {residual:e} exceeds {tolerance:e} at {point:?}")]
    Verification {
        residual: f64,
        tolerance: f64,
        point: Vec<f64>,
    },

    #[error("insufficient derivative order: need {needed}, have {have}")]
    InsufficientOrder { needed: u8, have: u8 },
}

impl GeomError {
    /// Attach a chart point to a bare domain error.
    pub fn at(self, point: &[f64]) -> GeomError {
        match self {
            GeomError::Domain(reason) => GeomError::Evaluation {
                point: point.to_vec(),
                reason,
            },
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, GeomError>;
