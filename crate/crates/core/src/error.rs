use thiserror::Error;

#[derive(Debug, Error)]
pub enum QrfError {
    #[error("argument error: {0}")]
    Argument(String),

    #[error("dimension mismatch in {op}: expected {expected}, found {found}")]
    DimMismatch {
        op: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("{0}")]
    Construction(String),

    #[error("resolution-of-identity failure: frame operator deviates from a multiple of I by {residual:e}")]
    ResolutionOfIdentity { residual: f64 },

    #[error("unsupported frame: {0}")]
    UnsupportedFrame(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = QrfError> = std::result::Result<T, E>;

pub(crate) fn dim_check(op: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(QrfError::DimMismatch { op, expected, found })
    }
}
