use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid series: {0}")]
    InvalidSeries(String),

    #[error("csv line {line}: {message}")]
    Csv { line: usize, message: String },

    #[error("empty dataset: {0}")]
    EmptyDataset(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("Mackey-Glass trajectory diverged at step {step} (y = {value}); check the sign of the decay term")]
    Diverged { step: usize, value: f64 },

    #[error("power iteration did not converge after {iterations} iterations (last estimate {estimate})")]
    NoConvergence { iterations: usize, estimate: f64 },

    #[error("degenerate reservoir: spectral radius stayed zero after {attempts} draws")]
    DegenerateReservoir { attempts: usize },

    #[error("Gram matrix is singular with lambda = 0; use a ridge parameter lambda > 0")]
    SingularGram,

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("metric: {0}")]
    Metric(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Whether the failure is numerical (divergence, singularity,
    /// non-convergence) rather than a usage or input problem.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::Diverged { .. }
                | Error::NoConvergence { .. }
                | Error::DegenerateReservoir { .. }
                | Error::SingularGram
                | Error::NonFinite(_)
        )
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
