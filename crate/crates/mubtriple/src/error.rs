use thiserror::Error;

/* Crate-wide error type; variants carry enough context to print a usable diagnostic. */
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("quadrature axes are degenerate (angle difference {theta_d} has |sin| below {min_sin})")]
    DegenerateAxes { theta_d: f64, min_sin: f64 },

    #[error("state is not physical: {0}")]
    NonPhysical(String),

    #[error("fit did not converge after {iterations} iterations (last chi2 {chi2})")]
    FitFailure {
        iterations: usize,
        chi2: f64,
        last: Box<crate::analysis::GaussianFitResult>,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
