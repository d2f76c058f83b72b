//! Time-series primitives shared by every model: transforms, seasonal
//! differencing, autocorrelation and the sMAPE accuracy score.

use chrono::{Duration, NaiveDate};

use crate::{Error, Result};

/// A dated univariate series on a daily calendar.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    start_date: NaiveDate,
    values: Vec<f64>,
}

impl TimeSeries {
    /// Builds a series, rejecting empty or non-finite input.
    pub fn new(start_date: NaiveDate, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Length("time series must hold at least one value".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite value at index {i}")));
        }
        Ok(Self { start_date, values })
    }

    /// Convenience constructor for undated data; the calendar starts at 2020-01-01.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        Self::new(NaiveDate::from_ymd_opt(2020, 1, 1).unwrap(), values)
    }

    pub fn start_date(&self) -> NaiveDate {
        self.start_date
    }

    pub fn end_date(&self) -> NaiveDate {
        self.date_at(self.values.len() - 1)
    }

    pub fn date_at(&self, index: usize) -> NaiveDate {
        self.start_date + Duration::days(index as i64)
    }

    /// Index of `date` on this series' calendar, if covered.
    pub fn index_of(&self, date: NaiveDate) -> Option<usize> {
        let offset = (date - self.start_date).num_days();
        (offset >= 0 && (offset as usize) < self.values.len()).then_some(offset as usize)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn last(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// The sub-series `[start, end)`, keeping dates aligned.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.values.len() {
            return Err(Error::Length(format!(
                "slice {start}..{end} out of range for series of length {}",
                self.values.len()
            )));
        }
        Ok(Self {
            start_date: self.date_at(start),
            values: self.values[start..end].to_vec(),
        })
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// How a log is taken of count data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogOffset {
    /// `log(y)`; requires strictly positive values.
    Plain,
    /// `log(y + 1)`; tolerates zero counts.
    PlusOne,
}

impl LogOffset {
    fn offset(self) -> f64 {
        match self {
            LogOffset::Plain => 0.0,
            LogOffset::PlusOne => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransformKind {
    Identity,
    Log1p,
    WeeklyLogReturn,
}

/// Records a transform applied to a series together with what is needed to undo it.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformTag {
    pub kind: TransformKind,
    /// For weekly log-returns: the first seven values of the original series.
    pub anchor: Vec<f64>,
}

impl TransformTag {
    /// Applies `kind` to `series`; log transforms use the `+1` offset.
    pub fn apply(series: &TimeSeries, kind: TransformKind) -> Result<(TimeSeries, TransformTag)> {
        let tag = TransformTag {
            kind,
            anchor: Vec::new(),
        };
        match kind {
            TransformKind::Identity => Ok((series.clone(), tag)),
            TransformKind::Log1p => {
                let values = log1p_counts(series.values())?;
                Ok((TimeSeries::new(series.start_date(), values)?, tag))
            }
            TransformKind::WeeklyLogReturn => {
                let z = weekly_log_return(series, LogOffset::PlusOne)?;
                let anchor = series.values()[..7].to_vec();
                Ok((z, TransformTag { kind, anchor }))
            }
        }
    }

    /// Inverts the transform recorded in this tag.
    pub fn invert(&self, transformed: &TimeSeries) -> Result<TimeSeries> {
        match self.kind {
            TransformKind::Identity => Ok(transformed.clone()),
            TransformKind::Log1p => TimeSeries::new(
                transformed.start_date(),
                transformed.values().iter().map(|v| v.exp_m1()).collect(),
            ),
            TransformKind::WeeklyLogReturn => {
                if self.anchor.len() != WEEK {
                    return Err(Error::Input("weekly log-return tag needs 7 anchor values".into()));
                }
                let mut out = self.anchor.clone();
                for (t, z) in transformed.values().iter().enumerate() {
                    out.push((out[t] + 1.0) * z.exp() - 1.0);
                }
                TimeSeries::new(transformed.start_date() - Duration::days(WEEK as i64), out)
            }
        }
    }
}

pub(crate) const WEEK: usize = 7;

/// `log(y + 1)` of non-negative counts.
pub fn log1p_counts(values: &[f64]) -> Result<Vec<f64>> {
    values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            if v <= -1.0 {
                Err(Error::Domain(format!("log1p undefined for {v} at index {i}")))
            } else {
                Ok(v.ln_1p())
            }
        })
        .collect()
}

/// Coefficients of `(1 - B)^d (1 - B^s)^D`, lowest power first.
pub fn difference_polynomial(d: usize, seasonal_d: usize, season: usize) -> Vec<f64> {
    let mut poly = vec![1.0];
    for _ in 0..d {
        poly = poly_mul(&poly, &[1.0, -1.0]);
    }
    if seasonal_d > 0 {
        let mut seasonal = vec![0.0; season + 1];
        seasonal[0] = 1.0;
        seasonal[season] = -1.0;
        for _ in 0..seasonal_d {
            poly = poly_mul(&poly, &seasonal);
        }
    }
    poly
}

pub(crate) fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Applies `∇^d ∇_s^D` to raw values; the output drops the first `d + D·s` points.
pub fn difference_values(values: &[f64], d: usize, seasonal_d: usize, season: usize) -> Result<Vec<f64>> {
    let poly = difference_polynomial(d, seasonal_d, season);
    let lost = poly.len() - 1;
    if values.len() <= lost {
        return Err(Error::Length(format!(
            "differencing (d={d}, D={seasonal_d}, s={season}) needs more than {lost} values, got {}",
            values.len()
        )));
    }
    Ok((lost..values.len())
        .map(|t| poly.iter().enumerate().map(|(k, c)| c * values[t - k]).sum())
        .collect())
}

/// Differences a dated series; the result starts `d + D·s` days later.
pub fn difference(s: &TimeSeries, d: usize, seasonal_d: usize, season: usize) -> Result<TimeSeries> {
    if seasonal_d > 0 && season == 0 {
        return Err(Error::Parameter("season length must be positive".into()));
    }
    let lost = d + seasonal_d * season;
    let values = difference_values(s.values(), d, seasonal_d, season)?;
    TimeSeries::new(s.date_at(lost), values)
}

/// Inverts [`difference_values`] given the `d + D·s` values that preceded the differenced ones.
pub fn integrate_values(
    differenced: &[f64],
    initial: &[f64],
    d: usize,
    seasonal_d: usize,
    season: usize,
) -> Result<Vec<f64>> {
    let poly = difference_polynomial(d, seasonal_d, season);
    let lost = poly.len() - 1;
    if initial.len() != lost {
        return Err(Error::Length(format!(
            "integration needs exactly {lost} initial values, got {}",
            initial.len()
        )));
    }
    let mut out = initial.to_vec();
    out.reserve(differenced.len());
    for w in differenced {
        let t = out.len();
        let carried: f64 = poly[1..].iter().enumerate().map(|(k, c)| c * out[t - 1 - k]).sum();
        out.push(w - carried);
    }
    Ok(out)
}

/// Weekly log-return `z_t = log(y_t + o) - log(y_{t-7} + o)`; the output is 7 shorter.
pub fn weekly_log_return(s: &TimeSeries, offset: LogOffset) -> Result<TimeSeries> {
    let values = weekly_log_return_values(s.values(), offset)?;
    TimeSeries::new(s.date_at(WEEK), values)
}

pub fn weekly_log_return_values(values: &[f64], offset: LogOffset) -> Result<Vec<f64>> {
    if values.len() <= WEEK {
        return Err(Error::Length(format!(
            "weekly log-return needs more than 7 values, got {}",
            values.len()
        )));
    }
    let o = offset.offset();
    let logs: Vec<f64> = values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            if v + o <= 0.0 {
                Err(Error::Domain(format!(
                    "log undefined for {v} (offset {o}) at index {i}"
                )))
            } else {
                Ok((v + o).ln())
            }
        })
        .collect::<Result<_>>()?;
    Ok((WEEK..logs.len()).map(|t| logs[t] - logs[t - WEEK]).collect())
}

/// Level implied by a weekly log-return forecast: `(base + 1)·exp(z) - 1`, floored at zero.
pub fn invert_weekly_log_return(base: f64, z: f64) -> f64 {
    ((base + 1.0) * z.exp() - 1.0).max(0.0)
}

/// Sample autocorrelations for lags `0..=max_lag` with the biased (divide by n) estimator.
pub fn acf(s: &TimeSeries, max_lag: usize) -> Result<Vec<f64>> {
    acf_values(s.values(), max_lag)
}

pub fn acf_values(values: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let n = values.len();
    if max_lag == 0 {
        return Err(Error::Parameter("max_lag must be positive".into()));
    }
    if n <= max_lag {
        return Err(Error::Length(format!(
            "acf up to lag {max_lag} needs more than {max_lag} values, got {n}"
        )));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = values.iter().map(|v| v - mean).collect();
    let c0: f64 = centered.iter().map(|v| v * v).sum();
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    if c0 <= (scale * f64::EPSILON).powi(2) * n as f64 {
        return Err(Error::DegenerateSeries("autocorrelation of a constant series".into()));
    }
    Ok((0..=max_lag)
        .map(|lag| {
            let ck: f64 = (lag..n).map(|t| centered[t] * centered[t - lag]).sum();
            ck / c0
        })
        .collect())
}

/// Symmetric mean absolute percentage error on the 0-200 scale.
///
/// Terms where forecast and actual are both zero contribute zero.
pub fn smape(forecast: &[f64], actual: &[f64]) -> Result<f64> {
    if forecast.len() != actual.len() {
        return Err(Error::Dimension(format!(
            "forecast has {} values, actual has {}",
            forecast.len(),
            actual.len()
        )));
    }
    if forecast.is_empty() {
        return Err(Error::Dimension("sMAPE of empty vectors".into()));
    }
    let total: f64 = forecast
        .iter()
        .zip(actual)
        .map(|(f, a)| {
            let denom = f.abs() + a.abs();
            if denom == 0.0 {
                0.0
            } else {
                2.0 * (f - a).abs() / denom
            }
        })
        .sum();
    Ok(100.0 * total / forecast.len() as f64)
}
