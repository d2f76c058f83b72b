//! Gaussian random walk `y_t = y_{t-1} + ε_t`.

use crate::series::TimeSeries;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomWalkModel {
    /// Biased variance of the first differences.
    pub sigma2: f64,
    pub last_value: f64,
}

pub fn fit_rw(y: &TimeSeries) -> Result<RandomWalkModel> {
    let v = y.values();
    if v.len() < 2 {
        return Err(Error::Length(format!(
            "random walk needs 2 observations, got {}",
            v.len()
        )));
    }
    let diffs: Vec<f64> = v.windows(2).map(|w| w[1] - w[0]).collect();
    let n = diffs.len() as f64;
    let mean = diffs.iter().sum::<f64>() / n;
    let sigma2 = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n;
    Ok(RandomWalkModel {
        sigma2,
        last_value: y.last(),
    })
}

/// Point forecasts: the last observation at every horizon.
pub fn forecast_rw(model: &RandomWalkModel, h: usize) -> Vec<f64> {
    vec![model.last_value; h]
}
