//! Penalized lag regression on weekly log-returns.
//!
//! For each horizon `h` the response `z_t = log(y_t+1) - log(y_{t-7}+1)` is
//! regressed on `k` lags starting at `h`, screened down to a handful of
//! columns, and fitted under the minimax concave penalty by coordinate
//! descent with the penalty level chosen by contiguous-fold cross-validation.

mod design;

pub use design::{build_lag_design, marginal_correlations, sis_screen, sis_screen_exogenous, LagColumn, LagDesign};

use crate::series::{invert_weekly_log_return, TimeSeries, WEEK};
use crate::{Error, Result};
use design::mean_sd;

pub const DEFAULT_GAMMA: f64 = 3.0;
pub const DEFAULT_LAG_DEPTH: usize = 14;
pub const DEFAULT_SCREEN_SIZE: usize = 7;
pub const DEFAULT_FOLDS: usize = 5;
pub const MAX_SWEEPS: usize = 10_000;
pub const SWEEP_TOLERANCE: f64 = 1e-7;
const PATH_LENGTH: usize = 100;
const PATH_RATIO: f64 = 1e-3;

/// `P_γ(β; λ)`: `λ|β| - β²/(2γ)` for `|β| ≤ γλ`, else `γλ²/2`.
pub fn mcp_penalty(beta: f64, lambda: f64, gamma: f64) -> Result<f64> {
    check_penalty_args(lambda, gamma)?;
    Ok(penalty(beta, lambda, gamma))
}

fn check_penalty_args(lambda: f64, gamma: f64) -> Result<()> {
    if !(gamma > 1.0) || !gamma.is_finite() {
        return Err(Error::Parameter(format!("MCP concavity must exceed 1, got {gamma}")));
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::Parameter(format!(
            "MCP penalty level must be non-negative, got {lambda}"
        )));
    }
    Ok(())
}

fn penalty(beta: f64, lambda: f64, gamma: f64) -> f64 {
    let b = beta.abs();
    if b <= gamma * lambda {
        lambda * b - b * b / (2.0 * gamma)
    } else {
        0.5 * gamma * lambda * lambda
    }
}

/// `(1/2N)‖z - Xβ‖² + Σ P_γ(β_j; λ)` with column-major `x`.
pub fn mcp_objective(x: &[Vec<f64>], z: &[f64], beta: &[f64], lambda: f64, gamma: f64) -> f64 {
    let n = z.len() as f64;
    let rss: f64 = (0..z.len())
        .map(|i| {
            let fit: f64 = x.iter().zip(beta).map(|(c, b)| c[i] * b).sum();
            (z[i] - fit).powi(2)
        })
        .sum();
    rss / (2.0 * n) + beta.iter().map(|b| penalty(*b, lambda, gamma)).sum::<f64>()
}

/// Result of [`solve_mcp`].
#[derive(Debug, Clone)]
pub struct McpSolution {
    pub beta: Vec<f64>,
    pub objective: f64,
    pub sweeps: usize,
    /// Objective after each full sweep.
    pub trace: Vec<f64>,
}

/// Minimizes [`mcp_objective`] by cyclic coordinate descent.
///
/// Each coordinate update is exact: with `a = x_j'x_j/N` and `c = x_j'r_{-j}/N`
/// the minimizer is `S(c, λ)/(a - 1/γ)` when `|c| ≤ aγλ`, else `c/a`. This
/// needs `a > 1/γ`, which holds for standardized columns. Columns with
/// `a = 0` stay at zero.
pub fn solve_mcp(x: &[Vec<f64>], z: &[f64], lambda: f64, gamma: f64, init: Option<&[f64]>) -> Result<McpSolution> {
    check_penalty_args(lambda, gamma)?;
    let n = z.len();
    if n == 0 || x.iter().any(|c| c.len() != n) {
        return Err(Error::Dimension("design columns must match the response length".into()));
    }
    let p = x.len();
    let nf = n as f64;
    let norms: Vec<f64> = x.iter().map(|c| c.iter().map(|v| v * v).sum::<f64>() / nf).collect();
    if let Some(j) = norms.iter().position(|&a| a > 0.0 && a <= 1.0 / gamma) {
        return Err(Error::Parameter(format!(
            "column {j} has scale {} at or below 1/gamma; standardize the design",
            norms[j]
        )));
    }
    let mut beta = match init {
        Some(b) if b.len() == p => b.to_vec(),
        Some(_) => return Err(Error::Dimension("warm start has the wrong length".into())),
        None => vec![0.0; p],
    };
    for (b, a) in beta.iter_mut().zip(&norms) {
        if *a == 0.0 {
            *b = 0.0;
        }
    }
    let mut resid: Vec<f64> = z.to_vec();
    for (c, b) in x.iter().zip(&beta) {
        if *b != 0.0 {
            resid.iter_mut().zip(c).for_each(|(r, v)| *r -= v * b);
        }
    }
    let mut trace = Vec::new();
    for sweep in 1..=MAX_SWEEPS {
        let mut max_change = 0.0f64;
        for j in 0..p {
            let a = norms[j];
            if a == 0.0 {
                continue;
            }
            let col = &x[j];
            let old = beta[j];
            let c = col.iter().zip(&resid).map(|(v, r)| v * r).sum::<f64>() / nf + a * old;
            let new = if c.abs() <= a * gamma * lambda {
                let soft = c.signum() * (c.abs() - lambda).max(0.0);
                soft / (a - 1.0 / gamma)
            } else {
                c / a
            };
            let delta = new - old;
            if delta != 0.0 {
                resid.iter_mut().zip(col).for_each(|(r, v)| *r -= v * delta);
                beta[j] = new;
                max_change = max_change.max(delta.abs());
            }
        }
        let rss: f64 = resid.iter().map(|r| r * r).sum();
        let obj = rss / (2.0 * nf) + beta.iter().map(|b| penalty(*b, lambda, gamma)).sum::<f64>();
        trace.push(obj);
        if max_change < SWEEP_TOLERANCE {
            return Ok(McpSolution {
                beta,
                objective: obj,
                sweeps: sweep,
                trace,
            });
        }
    }
    Err(Error::Convergence {
        iterations: MAX_SWEEPS,
        message: "MCP coordinate descent".into(),
    })
}

/// Column means and population standard deviations; zero-variance columns get sd 0.
struct Standardization {
    means: Vec<f64>,
    sds: Vec<f64>,
    z_mean: f64,
}

impl Standardization {
    fn fit(columns: &[Vec<f64>], rows: &[usize], z: &[f64]) -> Self {
        let mut means = Vec::with_capacity(columns.len());
        let mut sds = Vec::with_capacity(columns.len());
        for c in columns {
            let sub: Vec<f64> = rows.iter().map(|&i| c[i]).collect();
            let (m, s) = mean_sd(&sub);
            let scale = sub.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
            means.push(m);
            sds.push(if s > 1e-12 * scale { s } else { 0.0 });
        }
        let z_mean = rows.iter().map(|&i| z[i]).sum::<f64>() / rows.len() as f64;
        Standardization { means, sds, z_mean }
    }

    fn columns(&self, columns: &[Vec<f64>], rows: &[usize]) -> Vec<Vec<f64>> {
        columns
            .iter()
            .enumerate()
            .map(|(j, c)| {
                let s = self.sds[j];
                rows.iter()
                    .map(|&i| if s > 0.0 { (c[i] - self.means[j]) / s } else { 0.0 })
                    .collect()
            })
            .collect()
    }

    fn response(&self, z: &[f64], rows: &[usize]) -> Vec<f64> {
        rows.iter().map(|&i| z[i] - self.z_mean).collect()
    }

    /// Maps standardized coefficients back to (intercept, original-scale betas).
    fn unscale(&self, beta_std: &[f64]) -> (f64, Vec<f64>) {
        let beta: Vec<f64> = beta_std
            .iter()
            .zip(&self.sds)
            .map(|(b, s)| if *s > 0.0 { b / s } else { 0.0 })
            .collect();
        let intercept = self.z_mean - beta.iter().zip(&self.means).map(|(b, m)| b * m).sum::<f64>();
        (intercept, beta)
    }
}

/// An MCP regression for one horizon, on the original column scale.
#[derive(Debug, Clone, PartialEq)]
pub struct McpModel {
    pub beta: Vec<f64>,
    pub intercept: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub h: usize,
    pub columns: Vec<LagColumn>,
    pub column_names: Vec<String>,
}

impl McpModel {
    pub fn nonzero(&self) -> usize {
        self.beta.iter().filter(|b| **b != 0.0).count()
    }

    /// Prediction of `z` for one row of (original-scale) predictors.
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.intercept + self.beta.iter().zip(row).map(|(b, x)| b * x).sum::<f64>()
    }

    /// Plain-text coefficient dump, one `name = value` line each.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "h = {}\nlambda = {:.17e}\ngamma = {}\nintercept = {:.17e}\n",
            self.h, self.lambda, self.gamma, self.intercept
        );
        for (name, b) in self.column_names.iter().zip(&self.beta) {
            out.push_str(&format!("{name} = {b:.17e}\n"));
        }
        out
    }
}

/// Fits the MCP objective on the standardized design and centered response.
pub fn fit_mcp(design: &LagDesign, lambda: f64, gamma: f64) -> Result<McpModel> {
    fit_mcp_path(design, &[lambda], gamma)
}

/// Like [`fit_mcp`] at the last entry of `lambdas`, warm-starting each
/// solve from the one before.
pub fn fit_mcp_path(design: &LagDesign, lambdas: &[f64], gamma: f64) -> Result<McpModel> {
    let &lambda = lambdas
        .last()
        .ok_or_else(|| Error::Parameter("empty penalty path".into()))?;
    for l in lambdas {
        check_penalty_args(*l, gamma)?;
    }
    if design.n_rows() == 0 {
        return Err(Error::Length("empty design".into()));
    }
    let rows: Vec<usize> = (0..design.n_rows()).collect();
    let st = Standardization::fit(&design.columns, &rows, &design.response);
    let xs = st.columns(&design.columns, &rows);
    let zc = st.response(&design.response, &rows);
    let mut beta_std = vec![0.0; xs.len()];
    for (i, l) in lambdas.iter().enumerate() {
        let init = (i > 0).then_some(beta_std.as_slice());
        beta_std = solve_mcp(&xs, &zc, *l, gamma, init)?.beta;
    }
    let (intercept, beta) = st.unscale(&beta_std);
    Ok(McpModel {
        beta,
        intercept,
        lambda,
        gamma,
        h: design.h,
        columns: design.sources.clone(),
        column_names: design.column_names.clone(),
    })
}

/// Smallest penalty level at which the zero vector is a coordinate-wise
/// minimizer on the standardized design.
pub fn lambda_max(design: &LagDesign) -> f64 {
    let rows: Vec<usize> = (0..design.n_rows()).collect();
    let st = Standardization::fit(&design.columns, &rows, &design.response);
    let xs = st.columns(&design.columns, &rows);
    let zc = st.response(&design.response, &rows);
    let n = zc.len() as f64;
    xs.iter()
        .map(|c| (c.iter().zip(&zc).map(|(a, b)| a * b).sum::<f64>() / n).abs())
        .fold(0.0, f64::max)
}

/// The log-spaced penalty path from `lambda_max` down to `lambda_max / 1000`.
pub fn lambda_path(lambda_max: f64) -> Vec<f64> {
    let (hi, lo) = (lambda_max.ln(), (lambda_max * PATH_RATIO).ln());
    (0..PATH_LENGTH)
        .map(|i| (hi + (lo - hi) * i as f64 / (PATH_LENGTH - 1) as f64).exp())
        .collect()
}

/// Cross-validation curve for [`select_lambda_cv`].
#[derive(Debug, Clone)]
pub struct CvCurve {
    pub lambdas: Vec<f64>,
    /// Held-out MSE for the first `converged` penalty levels.
    pub mse: Vec<f64>,
    /// Number of leading path points at which every fold converged.
    pub converged: usize,
    pub best: usize,
}

/// Chooses λ on the standard path by mean held-out MSE over contiguous folds.
pub fn select_lambda_cv(design: &LagDesign, gamma: f64, folds: usize) -> Result<f64> {
    cv_curve(design, gamma, folds).map(|c| c.lambdas[c.best])
}

pub fn cv_curve(design: &LagDesign, gamma: f64, folds: usize) -> Result<CvCurve> {
    check_penalty_args(0.0, gamma)?;
    let n = design.n_rows();
    if folds < 2 || n < folds {
        return Err(Error::Parameter(format!(
            "cross-validation needs 2 <= folds <= rows, got {folds} folds for {n} rows"
        )));
    }
    let lmax = lambda_max(design);
    if !(lmax > 0.0) || !lmax.is_finite() {
        return Err(Error::DegenerateSeries(
            "design carries no signal: no column varies together with the response".into(),
        ));
    }
    let lambdas = lambda_path(lmax);
    let mut sse = vec![0.0; lambdas.len()];
    let mut converged = lambdas.len();
    for f in 0..folds {
        let (lo, hi) = (f * n / folds, (f + 1) * n / folds);
        let train: Vec<usize> = (0..n).filter(|i| *i < lo || *i >= hi).collect();
        let test: Vec<usize> = (lo..hi).collect();
        let st = Standardization::fit(&design.columns, &train, &design.response);
        let xs = st.columns(&design.columns, &train);
        let zc = st.response(&design.response, &train);
        let mut warm = vec![0.0; design.n_cols()];
        for (l, lambda) in lambdas.iter().enumerate().take(converged) {
            // Smaller penalties past a non-converged one are dropped from the
            // search for every fold.
            let sol = match solve_mcp(&xs, &zc, *lambda, gamma, Some(&warm)) {
                Ok(sol) => sol,
                Err(Error::Convergence { .. }) => {
                    converged = l;
                    break;
                }
                Err(e) => return Err(e),
            };
            let (intercept, beta) = st.unscale(&sol.beta);
            for &i in &test {
                let pred = intercept + beta.iter().zip(&design.columns).map(|(b, c)| b * c[i]).sum::<f64>();
                sse[l] += (design.response[i] - pred).powi(2);
            }
            warm = sol.beta;
        }
    }
    if converged == 0 {
        return Err(Error::Convergence {
            iterations: MAX_SWEEPS,
            message: "MCP coordinate descent at lambda_max".into(),
        });
    }
    if converged < lambdas.len() {
        log::debug!(
            "MCP cross-validation: path truncated at {converged} of {} penalty levels after non-convergence",
            lambdas.len()
        );
    }
    let mse: Vec<f64> = sse[..converged].iter().map(|s| s / n as f64).collect();
    let best = mse
        .iter()
        .enumerate()
        .fold(0, |best, (i, v)| if *v < mse[best] { i } else { best });
    Ok(CvCurve {
        lambdas,
        mse,
        converged,
        best,
    })
}

/// Builds the predictor row at forecast origin `T = recent.len() - 1`.
fn feature_row(model: &McpModel, recent: &[f64], exog_recent: &[Vec<f64>]) -> Result<Vec<f64>> {
    let t = recent.len() as isize - 1;
    let series = |source: usize| -> Result<&[f64]> {
        if source == 0 {
            Ok(recent)
        } else {
            let col = exog_recent.get(source - 1).ok_or_else(|| {
                Error::Input(format!(
                    "model uses exogenous column {} which was not supplied",
                    source - 1
                ))
            })?;
            if col.len() != recent.len() {
                return Err(Error::Dimension(
                    "exogenous window must align with the target window".into(),
                ));
            }
            Ok(col)
        }
    };
    model
        .columns
        .iter()
        .map(|c| {
            let v = series(c.source)?;
            let idx = t + model.h as isize - c.lag as isize;
            if idx < WEEK as isize || idx > t {
                return Err(Error::Length(format!(
                    "recent window of {} observations does not reach lag {} at horizon {}",
                    recent.len(),
                    c.lag,
                    model.h
                )));
            }
            let i = idx as usize;
            Ok((v[i] + 1.0).ln() - (v[i - WEEK] + 1.0).ln())
        })
        .collect()
}

/// Forecasts `y_{T+h}` from the window ending at `T`.
///
/// For `h ≤ 7` the weekly base `y_{T+h-7}` is read from `recent`. Longer
/// horizons need it supplied through `base`, usually a shorter-horizon forecast.
pub fn forecast_mcp(model: &McpModel, recent: &TimeSeries, exog_recent: &[Vec<f64>], base: Option<f64>) -> Result<f64> {
    let values = recent.values();
    let z = model.predict_row(&feature_row(model, values, exog_recent)?);
    let base = match base {
        Some(b) => b,
        None if model.h <= WEEK => {
            let idx = values.len() + model.h - 1;
            if idx < WEEK {
                return Err(Error::Length("recent window shorter than one week".into()));
            }
            values[idx - WEEK]
        }
        None => {
            return Err(Error::Input(format!(
                "horizon {} needs the forecast for horizon {} as its weekly base",
                model.h,
                model.h - WEEK
            )))
        }
    };
    Ok(invert_weekly_log_return(base, z))
}

/// Settings for the per-horizon MCP pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McpConfig {
    pub k: usize,
    pub screen_size: usize,
    pub gamma: f64,
    pub folds: usize,
    /// Screen target lags jointly with the exogenous lags; when false target
    /// lags are always kept.
    pub screen_target_lags: bool,
}

impl Default for McpConfig {
    fn default() -> Self {
        McpConfig {
            k: DEFAULT_LAG_DEPTH,
            screen_size: DEFAULT_SCREEN_SIZE,
            gamma: DEFAULT_GAMMA,
            folds: DEFAULT_FOLDS,
            screen_target_lags: true,
        }
    }
}

/// Screens, cross-validates and fits the model for one horizon.
pub fn fit_horizon(
    target: &TimeSeries,
    exog: &[Vec<f64>],
    exog_names: &[String],
    h: usize,
    config: &McpConfig,
) -> Result<McpModel> {
    let design = build_lag_design(target, exog, exog_names, h, config.k)?;
    let screened = if config.screen_target_lags {
        sis_screen(&design, config.screen_size.min(design.n_cols()))?
    } else {
        sis_screen_exogenous(&design, config.screen_size)?
    };
    if screened.n_cols() == 0 {
        return Err(Error::DegenerateSeries(format!(
            "every lag column is constant at horizon {h}"
        )));
    }
    let curve = cv_curve(&screened, config.gamma, config.folds)?;
    fit_mcp_path(&screened, &curve.lambdas[..=curve.best], config.gamma)
}

/// One model per horizon `1..=h_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct McpHorizonSet {
    pub models: Vec<McpModel>,
}

impl McpHorizonSet {
    pub fn fit(
        target: &TimeSeries,
        exog: &[Vec<f64>],
        exog_names: &[String],
        h_max: usize,
        config: &McpConfig,
    ) -> Result<Self> {
        let models = (1..=h_max)
            .map(|h| fit_horizon(target, exog, exog_names, h, config))
            .collect::<Result<_>>()?;
        Ok(McpHorizonSet { models })
    }

    /// Forecasts horizons `1..=h_max`; beyond a week the base comes from the
    /// forecast seven days earlier.
    pub fn forecast(&self, recent: &TimeSeries, exog_recent: &[Vec<f64>]) -> Result<Vec<f64>> {
        let mut out: Vec<f64> = Vec::with_capacity(self.models.len());
        for model in &self.models {
            let base = (model.h > WEEK).then(|| out[model.h - WEEK - 1]);
            out.push(forecast_mcp(model, recent, exog_recent, base)?);
        }
        Ok(out)
    }
}
