//! Forecasting daily epidemic mortality with exogenous covariates.
//!
//! The crate bundles four statistical forecasters and the machinery to
//! compare them on multi-horizon rolling windows:
//!
//! * [`sarimax`]: seasonal ARIMA with exogenous regressors, fitted by exact
//!   Kalman-filter maximum likelihood.
//! * [`mcp`]: lagged weekly log-return regression with sure independence
//!   screening and a minimax concave penalty solved by coordinate descent.
//! * [`var`]: vector autoregression by least squares with BIC order selection.
//! * [`baselines`]: the Gaussian random walk.
//!
//! [`graph`] turns origin-destination mobility flows into a binary,
//! full-rank adjacency and runs a two-layer GCN forward pass. [`evaluation`]
//! schedules rolling windows, scores every horizon by sMAPE and renders
//! report tables. [`ingest`] reads the COVID and mobility CSV files.

pub mod baselines;
mod error;
pub mod evaluation;
pub mod graph;
pub mod ingest;
mod linalg;
pub mod mcp;
pub mod sarimax;
pub mod series;
pub mod synthetic;
pub mod var;

pub use error::{Error, Result};
pub use evaluation::{EvaluationReport, ModelKind, RollingSchedule};
pub use ingest::{FlowRecord, Level, PanelDataset, Region};
pub use sarimax::{FittedSarimax, SarimaxSpec};
pub use series::{TimeSeries, TransformKind, TransformTag};

/// Daily death counts column in the COVID CSV files.
pub const TARGET_COLUMN: &str = "deathIncrease";

/// Exogenous hospitalization columns recognized by the loaders.
pub const EXOGENOUS_COLUMNS: [&str; 4] = [
    "hospitalizedCurrently",
    "inIcuCurrently",
    "onVentilatorCurrently",
    "hospitalizedCumulative",
];
