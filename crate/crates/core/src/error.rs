use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {found}")]
    Dimension {
        context: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("non-finite value at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("SVD did not converge after {iterations} sweeps")]
    SvdNoConvergence { iterations: usize },
    #[error("matrix is singular or numerically singular: {0}")]
    Singular(String),
    #[error("estimation failed: {0}")]
    Estimation(String),
    #[error("predictor build failed: {0}")]
    PredictorBuild(String),
    #[error("insufficient data: {required} samples required, {available} available")]
    InsufficientData { required: usize, available: usize },
    #[error("scale undefined: channel {channel} of {signal} has zero mean absolute value")]
    ScaleUndefined { signal: &'static str, channel: usize },
}

impl Error {
    pub(crate) fn dim(context: &'static str, expected: usize, found: usize) -> Self {
        Error::Dimension {
            context,
            expected,
            found,
        }
    }
}
