use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("sector {row} has zero gross output")]
    ZeroOutput { row: usize },

    #[error("row {row} has sum {sum} >= 1; I - M is not guaranteed invertible")]
    NotSubstochastic { row: usize, sum: f64 },

    #[error("mean row sum {mean} >= 1; rank-1 estimator undefined")]
    MeanRowSum { mean: f64 },

    #[error("linear system is singular or ill-conditioned (residual {residual:e} at row {row})")]
    Singular { row: usize, residual: f64 },

    #[error("fixed-point iteration did not converge in {iterations} steps (last step {last_step:e})")]
    NoConvergence { iterations: usize, last_step: f64 },

    #[error("quadrature did not reach tolerance after {evaluations} evaluations (error estimate {error:e})")]
    Quadrature { evaluations: usize, error: f64 },

    #[error("covariance routes disagree: moments {moment_route}, closed form {closed_form}")]
    RouteMismatch { moment_route: f64, closed_form: f64 },

    #[error("outside model validity: {0}")]
    OutsideValidity(String),

    #[error("non-finite result for N={n}, mu={mu}, mu_f={mu_f}")]
    Overflow { n: usize, mu: f64, mu_f: f64 },

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("instance {instance}: {source}")]
    Instance {
        instance: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid input: {0}")]
    Format(String),

    #[error("accounting identity violated:\n{0}")]
    Identity(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
