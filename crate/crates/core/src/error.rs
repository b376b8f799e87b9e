use thiserror::Error;

#[derive(Debug, Error)]
pub enum StefanError {
    /// Kernel evaluated at or after its source time.
    #[error("kernel domain error: t - tau = {0} must be strictly positive")]
    KernelDomain(f64),

    #[error("dimension mismatch: {what} (expected {expected}, got {got})")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("matrix is not positive definite: pivot {pivot:e} at row {row}")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("melting front collapsed: s = {s:e} at t = {t}")]
    FrontCollapse { t: f64, s: f64 },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("self-test failed: {0}")]
    CheckFailed(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl StefanError {
    /// Numerical failures (as opposed to bad input) map to a distinct exit status.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            StefanError::NotPositiveDefinite { .. }
                | StefanError::FrontCollapse { .. }
                | StefanError::NonFinite(_)
                | StefanError::CheckFailed(_)
        )
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        StefanError::InvalidInput(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, StefanError>;
