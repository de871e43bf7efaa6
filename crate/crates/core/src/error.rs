use thiserror::Error;

pub type Result<T, E = CarlemanError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CarlemanError {
    /// The packed exponent key would not fit in a 64-bit word.
    #[error("packing overflow: {detail}")]
    PackingOverflow { detail: String },

    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("monomial degree {degree} outside 1..={max}")]
    DegreeOutOfRange { degree: u32, max: u32 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("singular matrix: pivot {pivot:e} at column {column}")]
    SingularMatrix { column: usize, pivot: f64 },

    #[error("step size underflow at t = {t}: h = {h:e}")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("time grids differ: {0}")]
    GridMismatch(String),

    #[error("arithmetic overflow computing {0}")]
    Overflow(&'static str),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CarlemanError {
    /// Numerical breakdowns, as opposed to bad input or configuration.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            CarlemanError::SingularMatrix { .. } | CarlemanError::StepSizeUnderflow { .. }
        )
    }

    pub(crate) fn packing(detail: impl Into<String>) -> Self {
        CarlemanError::PackingOverflow {
            detail: detail.into(),
        }
    }
}
