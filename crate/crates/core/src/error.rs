use std::path::PathBuf;

use crate::sarimax::FittedSarimax;

/// Errors returned by this crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A required column is absent or a header is malformed.
    #[error("schema error: {0}")]
    Schema(String),
    /// Input data violates an invariant (duplicate dates, negative flows, gaps).
    #[error("data error: {0}")]
    Data(String),
    /// Inconsistent configuration, e.g. a split that does not fit the dataset.
    #[error("configuration error: {0}")]
    Config(String),
    /// A series or window is too short for the requested operation.
    #[error("length error: {0}")]
    Length(String),
    /// A value lies outside the domain of a transform or model.
    #[error("domain error: {0}")]
    Domain(String),
    /// Mismatched vector or matrix shapes.
    #[error("dimension error: {0}")]
    Dimension(String),
    /// A constant series where variation is required.
    #[error("degenerate series: {0}")]
    DegenerateSeries(String),
    /// An invalid model parameter, e.g. a non-positive MCP concavity.
    #[error("parameter error: {0}")]
    Parameter(String),
    /// Regressors are linearly dependent.
    #[error("collinearity error: {0}")]
    Collinearity(String),
    /// A missing input, e.g. future exogenous rows for a forecast.
    #[error("input error: {0}")]
    Input(String),
    /// The rolling schedule could not be built.
    #[error("schedule error: {0}")]
    Schedule(String),
    /// State forecasts could not be summed to the national level.
    #[error("aggregation error: {0}")]
    Aggregation(String),
    /// An iterative solver did not reach its tolerance.
    #[error("no convergence after {iterations} iterations: {message}")]
    Convergence { iterations: usize, message: String },
    /// SARIMAX maximum likelihood ran out of iterations; carries the best parameters found.
    #[error("SARIMAX optimizer did not converge after {iterations} iterations (gradient norm {grad_norm:.3e})")]
    SarimaxConvergence {
        iterations: usize,
        grad_norm: f64,
        best: Box<FittedSarimax>,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by the input files rather than the models or configuration.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Schema(_) | Error::Data(_) | Error::Io { .. } | Error::Csv(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
