//! Rolling-origin evaluation: window schedule, per-window fitting and
//! forecasting, pooled per-horizon sMAPE, state aggregation and report tables.
//!
//! Indices are 0-based. A window with `train_end = T` fits on observations
//! `0..T` and forecasts indices `T..T+h_max`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};

use chrono::{Duration, NaiveDate};
use log::warn;
use rayon::prelude::*;

use crate::baselines::{fit_rw, forecast_rw};
use crate::ingest::{PanelDataset, Region};
use crate::mcp::{McpConfig, McpHorizonSet};
use crate::sarimax::{self, FittedSarimax, SarimaxSpec};
use crate::series::{smape, TimeSeries};
use crate::var::{VarCountModel, DEFAULT_MAX_ORDER};
use crate::{Error, Result, EXOGENOUS_COLUMNS};

pub const DEFAULT_STEP: usize = 14;
pub const DEFAULT_H_MAX: usize = 14;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Window {
    pub train_end: usize,
    pub targets: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RollingSchedule {
    pub initial_train_end: usize,
    pub step: usize,
    pub h_max: usize,
    pub windows: Vec<Window>,
}

/// Windows at `initial_train, initial_train + step, ...` while `train_end + h_max ≤ len`.
pub fn build_schedule(
    series_length: usize,
    initial_train: usize,
    step: usize,
    h_max: usize,
) -> Result<RollingSchedule> {
    if step == 0 || h_max == 0 || initial_train == 0 {
        return Err(Error::Schedule(
            "initial training size, step and horizon must be positive".into(),
        ));
    }
    let mut windows = Vec::new();
    let mut train_end = initial_train;
    while train_end + h_max <= series_length {
        windows.push(Window {
            train_end,
            targets: (train_end..train_end + h_max).collect(),
        });
        train_end += step;
    }
    if windows.is_empty() {
        return Err(Error::Schedule(format!(
            "no window fits: {initial_train} training + {h_max} forecast days exceed series length {series_length}"
        )));
    }
    Ok(RollingSchedule {
        initial_train_end: initial_train,
        step,
        h_max,
        windows,
    })
}

/// What one model sees during one window: the target strictly before
/// `train_end` and exogenous actuals up to the forecast target.
pub struct WindowView<'a> {
    start_date: NaiveDate,
    target: &'a [f64],
    exog: BTreeMap<&'a str, &'a [f64]>,
    train_end: usize,
    h_max: usize,
    max_exog_index: AtomicUsize,
}

const NOT_ACCESSED: usize = usize::MAX;

impl<'a> WindowView<'a> {
    pub fn new(
        start_date: NaiveDate,
        target: &'a [f64],
        exog: BTreeMap<&'a str, &'a [f64]>,
        train_end: usize,
        h_max: usize,
    ) -> Result<Self> {
        if train_end == 0 || train_end > target.len() || exog.values().any(|c| c.len() != target.len()) {
            return Err(Error::Dimension("window view does not fit the data".into()));
        }
        Ok(WindowView {
            start_date,
            target,
            exog,
            train_end,
            h_max,
            max_exog_index: AtomicUsize::new(NOT_ACCESSED),
        })
    }

    fn from_dataset(ds: &'a PanelDataset, region: &Region, train_end: usize, h_max: usize) -> Result<Self> {
        let exog = ds
            .exog_names()
            .iter()
            .map(|n| Ok((n.as_str(), ds.exog(region, n)?)))
            .collect::<Result<_>>()?;
        Self::new(ds.start_date(), ds.target_values(region)?, exog, train_end, h_max)
    }

    pub fn train_end(&self) -> usize {
        self.train_end
    }

    pub fn h_max(&self) -> usize {
        self.h_max
    }

    /// Target observations `0..train_end`.
    pub fn history(&self) -> Result<TimeSeries> {
        TimeSeries::new(self.start_date, self.target[..self.train_end].to_vec())
    }

    fn column(&self, name: &str) -> Result<&'a [f64]> {
        self.exog
            .get(name)
            .copied()
            .ok_or_else(|| Error::Schema(format!("exogenous column `{name}` not in dataset")))
    }

    fn record(&self, index: usize) {
        let _ = self
            .max_exog_index
            .fetch_update(Ordering::Relaxed, Ordering::Relaxed, |cur| {
                (cur == NOT_ACCESSED || index > cur).then_some(index)
            });
    }

    /// Exogenous columns over `0..train_end`.
    pub fn exog_history(&self, names: &[String]) -> Result<Vec<Vec<f64>>> {
        if !names.is_empty() {
            self.record(self.train_end - 1);
        }
        names
            .iter()
            .map(|n| Ok(self.column(n)?[..self.train_end].to_vec()))
            .collect()
    }

    /// Exogenous actuals for the next `h` days (retrospective use of observed covariates).
    pub fn exog_future(&self, names: &[String], h: usize) -> Result<Vec<Vec<f64>>> {
        if h > self.h_max {
            return Err(Error::Input(format!(
                "requested {h} future rows, window allows {}",
                self.h_max
            )));
        }
        if self.train_end + h > self.target.len() {
            return Err(Error::Input("future exogenous rows beyond the dataset".into()));
        }
        if !names.is_empty() && h > 0 {
            self.record(self.train_end + h - 1);
        }
        names
            .iter()
            .map(|n| Ok(self.column(n)?[self.train_end..self.train_end + h].to_vec()))
            .collect()
    }

    /// Largest exogenous index handed out so far, if any.
    pub fn max_exog_index(&self) -> Option<usize> {
        match self.max_exog_index.load(Ordering::Relaxed) {
            NOT_ACCESSED => None,
            i => Some(i),
        }
    }
}

/// A model fitted on one window.
pub trait FittedForecaster: Send + Sync {
    /// Forecasts for horizons `1..=view.h_max()`.
    fn forecast(&self, view: &WindowView<'_>) -> Result<Vec<f64>>;
    /// Plain-text parameter dump.
    fn describe(&self) -> String;
}

pub trait Forecaster: Send + Sync {
    fn name(&self) -> String;
    fn fit(&self, view: &WindowView<'_>) -> Result<Box<dyn FittedForecaster>>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ModelKind {
    Rw,
    Sarima,
    Sarimax,
    Mcp,
    Var,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::Rw,
        ModelKind::Sarimax,
        ModelKind::Sarima,
        ModelKind::Mcp,
        ModelKind::Var,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ModelKind::Rw => "RW",
            ModelKind::Sarima => "SARIMA",
            ModelKind::Sarimax => "SARIMAX",
            ModelKind::Mcp => "MCP",
            ModelKind::Var => "VAR",
        }
    }

    /// Whether parameters are re-estimated at every window. SARIMA and
    /// SARIMAX follow `refit_per_window`; the other models always refit.
    pub fn refits(self, settings: &ModelSettings) -> bool {
        settings.refit_per_window || !matches!(self, ModelKind::Sarimax | ModelKind::Sarima)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "RW" => Ok(ModelKind::Rw),
            "SARIMA" => Ok(ModelKind::Sarima),
            "SARIMAX" => Ok(ModelKind::Sarimax),
            "MCP" => Ok(ModelKind::Mcp),
            "VAR" => Ok(ModelKind::Var),
            other => Err(Error::Config(format!("unknown model `{other}`"))),
        }
    }
}

/// Per-model settings used by [`forecaster`].
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSettings {
    pub sarimax: SarimaxSpec,
    pub sarima: SarimaxSpec,
    pub mcp: McpConfig,
    pub mcp_exog: Vec<String>,
    pub var_exog: Vec<String>,
    pub var_max_order: usize,
    /// Re-estimate SARIMA/SARIMAX at every window instead of once on the
    /// first training split.
    pub refit_per_window: bool,
}

impl Default for ModelSettings {
    fn default() -> Self {
        let sarimax = SarimaxSpec::covid_default();
        let sarima = sarimax.clone().with_exog(Vec::<String>::new());
        let all: Vec<String> = EXOGENOUS_COLUMNS.iter().map(|s| s.to_string()).collect();
        ModelSettings {
            sarimax,
            sarima,
            mcp: McpConfig::default(),
            mcp_exog: all.clone(),
            var_exog: all,
            var_max_order: DEFAULT_MAX_ORDER,
            refit_per_window: false,
        }
    }
}

struct RwForecaster;

struct FittedRw(crate::baselines::RandomWalkModel);

impl Forecaster for RwForecaster {
    fn name(&self) -> String {
        "RW".into()
    }

    fn fit(&self, view: &WindowView<'_>) -> Result<Box<dyn FittedForecaster>> {
        Ok(Box::new(FittedRw(fit_rw(&view.history()?)?)))
    }
}

impl FittedForecaster for FittedRw {
    fn forecast(&self, view: &WindowView<'_>) -> Result<Vec<f64>> {
        // The random walk always restarts from the latest observation.
        let model = fit_rw(&view.history()?).unwrap_or(self.0);
        Ok(forecast_rw(&model, view.h_max()))
    }

    fn describe(&self) -> String {
        format!("sigma2 = {}\nlast_value = {}\n", self.0.sigma2, self.0.last_value)
    }
}

struct SarimaxForecaster {
    name: &'static str,
    spec: SarimaxSpec,
}

struct FittedSarimaxForecaster(FittedSarimax);

impl Forecaster for SarimaxForecaster {
    fn name(&self) -> String {
        self.name.into()
    }

    fn fit(&self, view: &WindowView<'_>) -> Result<Box<dyn FittedForecaster>> {
        let y = view.history()?;
        let exog = view.exog_history(&self.spec.exog_names)?;
        let fitted = match sarimax::fit(&self.spec, &y, &exog) {
            Ok(f) => f,
            Err(Error::SarimaxConvergence {
                iterations,
                grad_norm,
                best,
            }) => {
                warn!(
                    "{} at train_end {}: optimizer stopped after {iterations} iterations (gradient {grad_norm:.2e}); using best parameters",
                    self.name,
                    view.train_end()
                );
                *best
            }
            Err(e) => return Err(e),
        };
        Ok(Box::new(FittedSarimaxForecaster(fitted)))
    }
}

impl FittedForecaster for FittedSarimaxForecaster {
    fn forecast(&self, view: &WindowView<'_>) -> Result<Vec<f64>> {
        let names = &self.0.spec.exog_names;
        let history = view.history()?;
        let exog_history = view.exog_history(names)?;
        let exog_future = view.exog_future(names, view.h_max())?;
        self.0.forecast(&history, &exog_history, &exog_future, view.h_max())
    }

    fn describe(&self) -> String {
        self.0.to_key_value()
    }
}

struct McpForecaster {
    config: McpConfig,
    exog: Vec<String>,
}

struct FittedMcp {
    set: McpHorizonSet,
    exog: Vec<String>,
}

impl Forecaster for McpForecaster {
    fn name(&self) -> String {
        "MCP".into()
    }

    fn fit(&self, view: &WindowView<'_>) -> Result<Box<dyn FittedForecaster>> {
        let y = view.history()?;
        let exog = view.exog_history(&self.exog)?;
        let set = McpHorizonSet::fit(&y, &exog, &self.exog, view.h_max(), &self.config)?;
        Ok(Box::new(FittedMcp {
            set,
            exog: self.exog.clone(),
        }))
    }
}

impl FittedForecaster for FittedMcp {
    fn forecast(&self, view: &WindowView<'_>) -> Result<Vec<f64>> {
        let y = view.history()?;
        let exog = view.exog_history(&self.exog)?;
        self.set.forecast(&y, &exog)
    }

    fn describe(&self) -> String {
        self.set
            .models
            .iter()
            .map(|m| m.to_text())
            .collect::<Vec<_>>()
            .join("\n")
    }
}

struct VarForecaster {
    exog: Vec<String>,
    max_order: usize,
}

struct FittedVar {
    model: VarCountModel,
    exog: Vec<String>,
}

impl Forecaster for VarForecaster {
    fn name(&self) -> String {
        "VAR".into()
    }

    fn fit(&self, view: &WindowView<'_>) -> Result<Box<dyn FittedForecaster>> {
        let y = view.history()?;
        let exog = view.exog_history(&self.exog)?;
        let model = VarCountModel::fit(y.values(), &exog, &self.exog, self.max_order)?;
        Ok(Box::new(FittedVar {
            model,
            exog: self.exog.clone(),
        }))
    }
}

impl FittedForecaster for FittedVar {
    fn forecast(&self, view: &WindowView<'_>) -> Result<Vec<f64>> {
        let y = view.history()?;
        let exog = view.exog_history(&self.exog)?;
        self.model.forecast(y.values(), &exog, view.h_max())
    }

    fn describe(&self) -> String {
        self.model.model.to_text()
    }
}

/// The forecaster for a model kind.
pub fn forecaster(kind: ModelKind, settings: &ModelSettings) -> Box<dyn Forecaster> {
    match kind {
        ModelKind::Rw => Box::new(RwForecaster),
        ModelKind::Sarima => Box::new(SarimaxForecaster {
            name: "SARIMA",
            spec: settings.sarima.clone(),
        }),
        ModelKind::Sarimax => Box::new(SarimaxForecaster {
            name: "SARIMAX",
            spec: settings.sarimax.clone(),
        }),
        ModelKind::Mcp => Box::new(McpForecaster {
            config: settings.mcp,
            exog: settings.mcp_exog.clone(),
        }),
        ModelKind::Var => Box::new(VarForecaster {
            exog: settings.var_exog.clone(),
            max_order: settings.var_max_order,
        }),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowResult {
    pub train_end: usize,
    pub forecasts: Option<Vec<f64>>,
    pub error: Option<String>,
    pub params: Option<String>,
}

/// All window forecasts of one model for one region.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionForecasts {
    pub model: String,
    pub region: Region,
    pub start_date: NaiveDate,
    pub h_max: usize,
    pub windows: Vec<WindowResult>,
}

impl RegionForecasts {
    pub fn excluded(&self) -> usize {
        self.windows.iter().filter(|w| w.forecasts.is_none()).count()
    }
}

fn run_window(model: &dyn Forecaster, fitted: Option<&dyn FittedForecaster>, view: &WindowView<'_>) -> WindowResult {
    let outcome = match fitted {
        Some(f) => f.forecast(view).map(|fc| (fc, None)),
        None => model
            .fit(view)
            .and_then(|f| Ok((f.forecast(view)?, Some(f.describe())))),
    };
    match outcome {
        Ok((fc, params)) if fc.len() == view.h_max() && fc.iter().all(|v| v.is_finite()) => WindowResult {
            train_end: view.train_end(),
            forecasts: Some(fc),
            error: None,
            params,
        },
        Ok(_) => WindowResult {
            train_end: view.train_end(),
            forecasts: None,
            error: Some("forecast has the wrong length or non-finite values".into()),
            params: None,
        },
        Err(e) => WindowResult {
            train_end: view.train_end(),
            forecasts: None,
            error: Some(e.to_string()),
            params: None,
        },
    }
}

/// Fits and forecasts every window, in parallel; the output is in window order.
///
/// With `refit` false the model is fitted once on the first window and its
/// parameters are reused for later windows with updated histories.
pub fn forecast_region(
    model: &dyn Forecaster,
    ds: &PanelDataset,
    region: &Region,
    schedule: &RollingSchedule,
    refit: bool,
) -> Result<RegionForecasts> {
    if schedule.windows.last().map_or(0, |w| w.train_end + schedule.h_max) > ds.len() {
        return Err(Error::Schedule("schedule extends past the dataset".into()));
    }
    let name = model.name();
    let windows: Vec<WindowResult> = if refit {
        schedule
            .windows
            .par_iter()
            .map(
                |w| match WindowView::from_dataset(ds, region, w.train_end, schedule.h_max) {
                    Ok(view) => run_window(model, None, &view),
                    Err(e) => WindowResult {
                        train_end: w.train_end,
                        forecasts: None,
                        error: Some(e.to_string()),
                        params: None,
                    },
                },
            )
            .collect()
    } else {
        let first = WindowView::from_dataset(ds, region, schedule.windows[0].train_end, schedule.h_max)?;
        match model.fit(&first) {
            Ok(fitted) => {
                let params = fitted.describe();
                let mut out: Vec<WindowResult> = schedule
                    .windows
                    .par_iter()
                    .map(
                        |w| match WindowView::from_dataset(ds, region, w.train_end, schedule.h_max) {
                            Ok(view) => run_window(model, Some(fitted.as_ref()), &view),
                            Err(e) => WindowResult {
                                train_end: w.train_end,
                                forecasts: None,
                                error: Some(e.to_string()),
                                params: None,
                            },
                        },
                    )
                    .collect();
                out[0].params = Some(params);
                out
            }
            Err(e) => schedule
                .windows
                .iter()
                .map(|w| WindowResult {
                    train_end: w.train_end,
                    forecasts: None,
                    error: Some(e.to_string()),
                    params: None,
                })
                .collect(),
        }
    };
    for w in &windows {
        if let Some(e) = &w.error {
            warn!("{name} {} train_end {}: window excluded: {e}", region, w.train_end);
        }
    }
    Ok(RegionForecasts {
        model: name,
        region: region.clone(),
        start_date: ds.start_date(),
        h_max: schedule.h_max,
        windows,
    })
}

/// Per-horizon pooled sMAPE and the number of excluded windows.
#[derive(Debug, Clone, PartialEq)]
pub struct HorizonScores {
    pub smape: Vec<f64>,
    pub windows: usize,
    pub excluded: usize,
}

impl HorizonScores {
    pub fn average(&self) -> f64 {
        self.smape.iter().sum::<f64>() / self.smape.len() as f64
    }
}

fn pooled_scores(h_max: usize, cells: &[(Vec<f64>, Vec<f64>)], windows: usize) -> Result<HorizonScores> {
    let smape_h = (0..h_max)
        .map(|h| {
            if cells.is_empty() {
                return Ok(f64::NAN);
            }
            let f: Vec<f64> = cells.iter().map(|(f, _)| f[h]).collect();
            let a: Vec<f64> = cells.iter().map(|(_, a)| a[h]).collect();
            smape(&f, &a)
        })
        .collect::<Result<_>>()?;
    Ok(HorizonScores {
        smape: smape_h,
        windows,
        excluded: windows - cells.len(),
    })
}

/// Scores forecasts against `actual`, which shares the forecasts' start date.
pub fn score_region(rf: &RegionForecasts, actual: &[f64]) -> Result<HorizonScores> {
    let mut cells = Vec::new();
    for w in &rf.windows {
        if let Some(f) = &w.forecasts {
            let end = w.train_end + rf.h_max;
            if end > actual.len() {
                return Err(Error::Schedule("actual series shorter than the schedule".into()));
            }
            cells.push((f.clone(), actual[w.train_end..end].to_vec()));
        }
    }
    pooled_scores(rf.h_max, &cells, rf.windows.len())
}

/// Forecasts and scores one model on one region.
pub fn evaluate_model(
    kind: ModelKind,
    settings: &ModelSettings,
    ds: &PanelDataset,
    region: &Region,
    schedule: &RollingSchedule,
) -> Result<HorizonScores> {
    let model = forecaster(kind, settings);
    let rf = forecast_region(model.as_ref(), ds, region, schedule, kind.refits(settings))?;
    score_region(&rf, ds.target_values(region)?)
}

fn national_cells(
    per_state: &[RegionForecasts],
    national: &TimeSeries,
    strict: bool,
) -> Result<(usize, Vec<(Vec<f64>, Vec<f64>)>)> {
    let first = per_state
        .first()
        .ok_or_else(|| Error::Aggregation("no state forecasts to aggregate".into()))?;
    let h_max = first.h_max;
    let n_windows = first.windows.len();
    for rf in per_state {
        if rf.h_max != h_max || rf.windows.len() != n_windows || rf.start_date != first.start_date {
            return Err(Error::Aggregation(format!(
                "{} forecasts use a different schedule",
                rf.region
            )));
        }
    }
    let mut cells = Vec::new();
    for w in 0..n_windows {
        let train_end = first.windows[w].train_end;
        let mut sum = vec![0.0; h_max];
        let mut complete = true;
        for rf in per_state {
            match &rf.windows[w].forecasts {
                Some(f) => sum.iter_mut().zip(f).for_each(|(s, v)| *s += v),
                None if strict => {
                    return Err(Error::Aggregation(format!(
                        "missing forecast for {} in window with train_end {train_end}",
                        rf.region
                    )))
                }
                None => complete = false,
            }
        }
        if !complete {
            continue;
        }
        let actual = (0..h_max)
            .map(|h| {
                let date = first.start_date + Duration::days((train_end + h) as i64);
                national
                    .index_of(date)
                    .map(|i| national.values()[i])
                    .ok_or_else(|| Error::Aggregation(format!("national series has no value for {date}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        cells.push((sum, actual));
    }
    Ok((n_windows, cells))
}

/// Sums state forecasts per (window, horizon) and scores them against the
/// national series, matched by date. Any missing state cell is an error.
pub fn aggregate_states_to_national(per_state: &[RegionForecasts], national: &TimeSeries) -> Result<HorizonScores> {
    let (n, cells) = national_cells(per_state, national, true)?;
    pooled_scores(per_state[0].h_max, &cells, n)
}

/// Like [`aggregate_states_to_national`] but windows where some state failed
/// are excluded and counted instead.
pub fn aggregate_states_excluding_failed(
    per_state: &[RegionForecasts],
    national: &TimeSeries,
) -> Result<HorizonScores> {
    let (n, cells) = national_cells(per_state, national, false)?;
    pooled_scores(per_state[0].h_max, &cells, n)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportColumn {
    pub model: String,
    pub scores: HorizonScores,
}

/// sMAPE by horizon (rows) and model (columns), plus an average row.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub h_max: usize,
    pub columns: Vec<ReportColumn>,
}

impl EvaluationReport {
    pub fn new(h_max: usize) -> Self {
        EvaluationReport {
            h_max,
            columns: Vec::new(),
        }
    }

    pub fn push(&mut self, model: impl Into<String>, scores: HorizonScores) -> Result<()> {
        if scores.smape.len() != self.h_max {
            return Err(Error::Dimension(format!(
                "expected {} horizons, got {}",
                self.h_max,
                scores.smape.len()
            )));
        }
        self.columns.push(ReportColumn {
            model: model.into(),
            scores,
        });
        Ok(())
    }

    pub fn averages(&self) -> Vec<f64> {
        self.columns.iter().map(|c| c.scores.average()).collect()
    }

    pub fn column(&self, model: &str) -> Option<&HorizonScores> {
        self.columns.iter().find(|c| c.model == model).map(|c| &c.scores)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    AlignedText,
}

/// Two decimals via `{:.2}`, which rounds the exact binary value (ties to
/// even); 10.005 is stored slightly below and prints as "10.00".
fn cell(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.2}")
    } else {
        "NA".into()
    }
}

pub fn render_report(report: &EvaluationReport, format: ReportFormat) -> String {
    let mut header = vec!["horizon".to_string()];
    header.extend(report.columns.iter().map(|c| c.model.clone()));
    let mut rows = vec![header];
    if !report.columns.is_empty() {
        for h in 0..report.h_max {
            let mut row = vec![(h + 1).to_string()];
            row.extend(report.columns.iter().map(|c| cell(c.scores.smape[h])));
            rows.push(row);
        }
        let mut avg = vec!["average".to_string()];
        avg.extend(report.averages().into_iter().map(cell));
        rows.push(avg);
    }
    match format {
        ReportFormat::Csv => rows.iter().map(|r| r.join(",") + "\n").collect(),
        ReportFormat::AlignedText => {
            let widths: Vec<usize> = (0..rows[0].len())
                .map(|j| rows.iter().map(|r| r[j].len()).max().unwrap_or(0))
                .collect();
            let mut out: String = rows
                .iter()
                .map(|r| {
                    let cells: Vec<String> = r.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
                    cells.join("  ") + "\n"
                })
                .collect();
            for c in &report.columns {
                if c.scores.excluded > 0 {
                    out.push_str(&format!(
                        "{}: {} of {} windows excluded after fit errors\n",
                        c.model, c.scores.excluded, c.scores.windows
                    ));
                }
            }
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_examples() {
        let s = build_schedule(376, 236, 14, 14).unwrap();
        assert_eq!(s.windows.len(), 10);
        assert_eq!(s.windows[0].train_end, 236);
        assert_eq!(s.windows.last().unwrap().train_end, 362);
        assert!(matches!(build_schedule(50, 40, 14, 14), Err(Error::Schedule(_))));
        let one = build_schedule(30, 10, 14, 14).unwrap();
        assert_eq!(one.windows.len(), 1);
        assert_eq!(one.windows[0].targets, (10..24).collect::<Vec<_>>());
        assert_eq!(build_schedule(376, 236, 14, 14).unwrap(), s);
    }

    #[test]
    fn schedule_invariants() {
        for len in 20..120 {
            for init in 5..40 {
                let Ok(s) = build_schedule(len, init, 7, 5) else {
                    continue;
                };
                for (i, w) in s.windows.iter().enumerate() {
                    assert!(w.targets.iter().all(|&t| t >= w.train_end && t < len));
                    if i > 0 {
                        assert_eq!(w.train_end, s.windows[i - 1].train_end + 7);
                    }
                }
            }
        }
    }

    #[test]
    fn model_names_parse() {
        for k in ModelKind::ALL {
            assert_eq!(k.label().parse::<ModelKind>().unwrap(), k);
        }
        assert_eq!("sarimax".parse::<ModelKind>().unwrap(), ModelKind::Sarimax);
        assert!(matches!("GCN".parse::<ModelKind>(), Err(Error::Config(_))));
    }

    fn scores(v: Vec<f64>) -> HorizonScores {
        HorizonScores {
            smape: v,
            windows: 1,
            excluded: 0,
        }
    }

    #[test]
    fn rendering() {
        let mut r = EvaluationReport::new(2);
        r.push("RW", scores(vec![10.0, 0.5])).unwrap();
        r.push("VAR", scores(vec![1.0, 3.0])).unwrap();
        let csv = render_report(&r, ReportFormat::Csv);
        assert_eq!(csv, "horizon,RW,VAR\n1,10.00,1.00\n2,0.50,3.00\naverage,5.25,2.00\n");
        assert_eq!(
            render_report(&EvaluationReport::new(14), ReportFormat::Csv),
            "horizon\n"
        );
        let text = render_report(&r, ReportFormat::AlignedText);
        assert_eq!(text.lines().count(), 4);
        assert!(r.push("bad", scores(vec![1.0])).is_err());
    }

    #[test]
    fn footer_lists_exclusions() {
        let mut r = EvaluationReport::new(1);
        r.push(
            "MCP",
            HorizonScores {
                smape: vec![5.0],
                windows: 4,
                excluded: 1,
            },
        )
        .unwrap();
        let text = render_report(&r, ReportFormat::AlignedText);
        assert!(text.contains("MCP: 1 of 4 windows excluded"));
    }

    #[test]
    fn view_enforces_horizon() {
        let y: Vec<f64> = (0..30).map(|v| v as f64).collect();
        let x: Vec<f64> = (100..130).map(|v| v as f64).collect();
        let mut exog = BTreeMap::new();
        exog.insert("icu", x.as_slice());
        let v = WindowView::new(NaiveDate::from_ymd_opt(2020, 1, 1).unwrap(), &y, exog, 20, 5).unwrap();
        assert_eq!(v.history().unwrap().len(), 20);
        assert_eq!(v.max_exog_index(), None);
        let names = vec!["icu".to_string()];
        assert_eq!(v.exog_future(&names, 3).unwrap()[0], vec![120.0, 121.0, 122.0]);
        assert_eq!(v.max_exog_index(), Some(22));
        assert!(v.exog_future(&names, 6).is_err());
        assert!(matches!(v.exog_history(&["nope".to_string()]), Err(Error::Schema(_))));
    }
}
