//! Seasonal ARIMA with exogenous regressors.
//!
//! The model is regression with SARIMA errors: after the (optional) `log1p`
//! transform, the response and every exogenous column are differenced by
//! `∇^d ∇_s^D`, and the differenced response is
//!
//! ```text
//! w_t = c + Σ β_i x̃_t^i + u_t,    φ(B) Φ(B^s) u_t = θ(B) Θ(B^s) ε_t
//! ```
//!
//! Parameters are estimated by exact Gaussian maximum likelihood. The
//! likelihood of `u` comes from a Kalman filter ([`kalman`]); `c`, `β` are
//! profiled out by GLS and `σ²` is concentrated, so the optimizer only sees
//! the ARMA coefficients in a stationarity-enforcing parameterization.

mod kalman;
mod optim;
mod params;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use crate::linalg::least_squares_vec;
use crate::series::{difference_values, integrate_values, TimeSeries, TransformKind};
use crate::{Error, Result};

use kalman::{filter, ArmaStateSpace};
use optim::{minimize, BfgsOptions};
use params::{ArmaCoefficients, ArmaOrders};

/// Optimizer budget for maximum likelihood.
pub const MAX_ITERATIONS: usize = 500;
/// Infinity-norm gradient tolerance (objective is the mean negative log-likelihood).
pub const GRADIENT_TOLERANCE: f64 = 1e-6;
const CSS_ITERATIONS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trend {
    None,
    /// An intercept in the differenced equation.
    Constant,
}

/// Model orders `(p, d, q)(P, D, Q, s)` plus trend, regressors and transform.
#[derive(Debug, Clone, PartialEq)]
pub struct SarimaxSpec {
    pub p: usize,
    pub d: usize,
    pub q: usize,
    pub seasonal_p: usize,
    pub seasonal_d: usize,
    pub seasonal_q: usize,
    pub season: usize,
    pub trend: Trend,
    pub exog_names: Vec<String>,
    /// `Identity` or `Log1p`; applied to the response and every exogenous column.
    pub transform: TransformKind,
}

impl SarimaxSpec {
    /// Non-seasonal `(p, d, q)` on the identity scale with no trend.
    pub fn new(p: usize, d: usize, q: usize) -> Self {
        Self {
            p,
            d,
            q,
            seasonal_p: 0,
            seasonal_d: 0,
            seasonal_q: 0,
            season: 7,
            trend: Trend::None,
            exog_names: Vec::new(),
            transform: TransformKind::Identity,
        }
    }

    pub fn seasonal(mut self, p: usize, d: usize, q: usize, season: usize) -> Self {
        self.seasonal_p = p;
        self.seasonal_d = d;
        self.seasonal_q = q;
        self.season = season;
        self
    }

    pub fn with_trend(mut self, trend: Trend) -> Self {
        self.trend = trend;
        self
    }

    pub fn with_exog<S: Into<String>>(mut self, names: impl IntoIterator<Item = S>) -> Self {
        self.exog_names = names.into_iter().map(Into::into).collect();
        self
    }

    pub fn with_transform(mut self, transform: TransformKind) -> Self {
        self.transform = transform;
        self
    }

    /// `SARIMAX(4,1,4)×(3,1,1,7)` with a constant, on `log1p` counts, regressed
    /// on current hospitalizations and ICU occupancy.
    pub fn covid_default() -> Self {
        Self::new(4, 1, 4)
            .seasonal(3, 1, 1, 7)
            .with_trend(Trend::Constant)
            .with_exog(["hospitalizedCurrently", "inIcuCurrently"])
            .with_transform(TransformKind::Log1p)
    }

    pub fn validate(&self) -> Result<()> {
        let seasonal = self.seasonal_p + self.seasonal_d + self.seasonal_q > 0;
        if seasonal && self.season < 2 {
            return Err(Error::Parameter(format!(
                "season length must be at least 2 for seasonal orders, got {}",
                self.season
            )));
        }
        if self.transform == TransformKind::WeeklyLogReturn {
            return Err(Error::Parameter("SARIMAX supports identity or log1p transforms".into()));
        }
        Ok(())
    }

    /// Observations consumed by differencing.
    pub fn diff_order(&self) -> usize {
        self.d + self.seasonal_d * self.season
    }

    /// Estimated parameters including `σ²`.
    pub fn n_params(&self) -> usize {
        self.orders().n_params() + usize::from(self.trend == Trend::Constant) + self.exog_names.len() + 1
    }

    /// Shortest series `fit` accepts.
    pub fn min_length(&self) -> usize {
        let ar = self.p + self.seasonal_p * self.season;
        let ma = self.q + self.seasonal_q * self.season;
        self.diff_order() + ar.max(ma) + self.n_params() + 1
    }

    fn orders(&self) -> ArmaOrders {
        ArmaOrders {
            p: self.p,
            q: self.q,
            seasonal_p: self.seasonal_p,
            seasonal_q: self.seasonal_q,
            season: self.season,
        }
    }
}

/// Estimated SARIMAX parameters. Immutable once fitted.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedSarimax {
    pub spec: SarimaxSpec,
    /// Regular AR coefficients, `1 - φ_1 B - ...`.
    pub phi: Vec<f64>,
    /// Regular MA coefficients, `1 + θ_1 B + ...`.
    pub theta: Vec<f64>,
    pub seasonal_phi: Vec<f64>,
    pub seasonal_theta: Vec<f64>,
    /// One coefficient per exogenous column, in `spec.exog_names` order.
    pub beta: Vec<f64>,
    pub trend_const: f64,
    pub sigma2: f64,
    pub loglik: f64,
    /// Number of differenced observations in the likelihood.
    pub nobs: usize,
}

/// Transformed, differenced response and regressor columns.
struct Prepared {
    w: Vec<f64>,
    /// Constant column first when the trend is on, then the active exogenous columns.
    regressors: Vec<Vec<f64>>,
    /// Exogenous columns that are not identically zero after differencing.
    active: Vec<bool>,
}

fn transform_values(kind: TransformKind, values: &[f64]) -> Result<Vec<f64>> {
    match kind {
        TransformKind::Identity => Ok(values.to_vec()),
        TransformKind::Log1p => crate::series::log1p_counts(values),
        TransformKind::WeeklyLogReturn => unreachable!("rejected by validate"),
    }
}

fn check_exog(spec: &SarimaxSpec, n: usize, exog: &[Vec<f64>]) -> Result<()> {
    if exog.len() != spec.exog_names.len() {
        return Err(Error::Dimension(format!(
            "spec names {} exogenous columns, got {}",
            spec.exog_names.len(),
            exog.len()
        )));
    }
    if let Some((i, col)) = exog.iter().enumerate().find(|(_, c)| c.len() != n) {
        return Err(Error::Dimension(format!(
            "exogenous column {} has {} rows, response has {n}",
            spec.exog_names[i],
            col.len()
        )));
    }
    Ok(())
}

fn prepare(spec: &SarimaxSpec, y: &[f64], exog: &[Vec<f64>]) -> Result<Prepared> {
    check_exog(spec, y.len(), exog)?;
    let (d, sd, s) = (spec.d, spec.seasonal_d, spec.season);
    let w = difference_values(&transform_values(spec.transform, y)?, d, sd, s)?;
    let mut regressors = Vec::new();
    if spec.trend == Trend::Constant {
        regressors.push(vec![1.0; w.len()]);
    }
    let mut active = Vec::with_capacity(exog.len());
    for col in exog {
        let xd = difference_values(&transform_values(spec.transform, col)?, d, sd, s)?;
        let is_active = xd.iter().any(|v| *v != 0.0);
        active.push(is_active);
        if is_active {
            regressors.push(xd);
        }
    }
    Ok(Prepared { w, regressors, active })
}

struct Profile {
    /// GLS coefficients in `Prepared::regressors` order.
    coef: Vec<f64>,
    sigma2: f64,
    loglik: f64,
}

fn profile(ss: &ArmaStateSpace, data: &Prepared) -> Result<Profile> {
    let mut columns: Vec<&[f64]> = vec![&data.w];
    columns.extend(data.regressors.iter().map(|c| c.as_slice()));
    let out = filter(ss, &columns)?;
    let n = data.w.len();
    let m = data.regressors.len();
    let coef = if m == 0 {
        Vec::new()
    } else {
        let mut a = DMatrix::zeros(m, m);
        let mut b = DVector::zeros(m);
        for t in 0..n {
            let inv_f = 1.0 / out.variances[t];
            for i in 0..m {
                let vi = out.innovations[i + 1][t];
                b[i] += vi * out.innovations[0][t] * inv_f;
                for j in 0..=i {
                    a[(i, j)] += vi * out.innovations[j + 1][t] * inv_f;
                }
            }
        }
        for i in 0..m {
            for j in 0..i {
                a[(j, i)] = a[(i, j)];
            }
        }
        let chol = a
            .cholesky()
            .ok_or_else(|| Error::Collinearity("GLS normal equations are singular".into()))?;
        chol.solve(&b).iter().copied().collect()
    };
    let mut ssq = 0.0;
    let mut sum_log_f = 0.0;
    for t in 0..n {
        let mut e = out.innovations[0][t];
        for (i, c) in coef.iter().enumerate() {
            e -= c * out.innovations[i + 1][t];
        }
        ssq += e * e / out.variances[t];
        sum_log_f += out.variances[t].ln();
    }
    let nf = n as f64;
    let sigma2 = ssq / nf;
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(Error::Domain("degenerate innovation variance".into()));
    }
    let loglik = -0.5 * nf * ((2.0 * std::f64::consts::PI).ln() + sigma2.ln() + 1.0) - 0.5 * sum_log_f;
    Ok(Profile { coef, sigma2, loglik })
}

fn state_space(c: &ArmaCoefficients, season: usize) -> ArmaStateSpace {
    ArmaStateSpace::new(&c.full_ar(season), &c.full_ma(season))
}

/// Conditional sum of squares of `u` with pre-sample values set to zero.
fn css_objective(orders: &ArmaOrders, u: &[f64], x: &[f64]) -> f64 {
    let c = orders.constrain(x);
    let a = c.full_ar(orders.season);
    let b = c.full_ma(orders.season);
    let start = a.len();
    if u.len() <= start {
        return f64::INFINITY;
    }
    let mut e = vec![0.0; u.len()];
    let mut ssq = 0.0;
    for t in start..u.len() {
        let mut v = u[t];
        for (k, ak) in a.iter().enumerate() {
            v -= ak * u[t - 1 - k];
        }
        for (k, bk) in b.iter().enumerate() {
            if t > k {
                v -= bk * e[t - 1 - k];
            }
        }
        e[t] = v;
        ssq += v * v;
    }
    0.5 * (ssq / (u.len() - start) as f64).ln()
}

/// Fits a SARIMAX model by exact maximum likelihood.
///
/// `exog` holds one column per name in `spec.exog_names`, aligned with `y`.
/// Exogenous columns that are identically zero after differencing carry no
/// information; their coefficient is reported as 0.
///
/// On an exhausted iteration budget the error carries the best parameters found.
pub fn fit(spec: &SarimaxSpec, y: &TimeSeries, exog: &[Vec<f64>]) -> Result<FittedSarimax> {
    spec.validate()?;
    check_exog(spec, y.len(), exog)?;
    if y.len() < spec.min_length() {
        return Err(Error::Length(format!(
            "SARIMAX needs at least {} observations, got {}",
            spec.min_length(),
            y.len()
        )));
    }
    let data = prepare(spec, y.values(), exog)?;
    let n = data.w.len();

    let u = if data.regressors.is_empty() {
        data.w.clone()
    } else {
        let x = DMatrix::from_fn(n, data.regressors.len(), |t, j| data.regressors[j][t]);
        let b = least_squares_vec(&x, &DVector::from_column_slice(&data.w))
            .map_err(|_| Error::Collinearity("exogenous regressors are linearly dependent".into()))?;
        let fitted = &x * &b;
        data.w.iter().zip(fitted.iter()).map(|(w, f)| w - f).collect()
    };

    let orders = spec.orders();
    let k = orders.n_params();
    let zeros = vec![0.0; k];
    let css = minimize(
        |x: &[f64]| css_objective(&orders, &u, x),
        &zeros,
        BfgsOptions {
            max_iter: CSS_ITERATIONS,
            grad_tol: GRADIENT_TOLERANCE,
            max_step: 2.0,
        },
    );
    let css_iterations = css.iterations;
    let start = if css.value.is_finite() && css.x.iter().all(|v| v.is_finite() && v.abs() < 20.0) {
        css.x
    } else {
        zeros
    };

    let nf = n as f64;
    let objective = |x: &[f64]| {
        let c = orders.constrain(x);
        match profile(&state_space(&c, orders.season), &data) {
            Ok(p) => -p.loglik / nf,
            Err(_) => f64::INFINITY,
        }
    };
    let mut start = start;
    if !objective(&start).is_finite() {
        start = vec![0.0; k];
    }
    let best = minimize(
        objective,
        &start,
        BfgsOptions {
            max_iter: MAX_ITERATIONS,
            grad_tol: GRADIENT_TOLERANCE,
            max_step: 2.0,
        },
    );
    log::debug!(
        "SARIMAX fit: {} CSS iterations, {} BFGS iterations, converged {}, gradient norm {:.2e}",
        css_iterations,
        best.iterations,
        best.converged,
        best.grad_norm
    );
    let coefs = orders.constrain(&best.x);
    let prof = profile(&state_space(&coefs, orders.season), &data)?;

    let mut reg = prof.coef.into_iter();
    let trend_const = match spec.trend {
        Trend::Constant => reg.next().unwrap_or(0.0),
        Trend::None => 0.0,
    };
    let beta = data
        .active
        .iter()
        .map(|&a| if a { reg.next().unwrap_or(0.0) } else { 0.0 })
        .collect();
    let fitted = FittedSarimax {
        spec: spec.clone(),
        phi: coefs.ar,
        theta: coefs.ma,
        seasonal_phi: coefs.seasonal_ar,
        seasonal_theta: coefs.seasonal_ma,
        beta,
        trend_const,
        sigma2: prof.sigma2,
        loglik: prof.loglik,
        nobs: n,
    };
    if best.converged {
        Ok(fitted)
    } else {
        Err(Error::SarimaxConvergence {
            iterations: best.iterations,
            grad_norm: best.grad_norm,
            best: Box::new(fitted),
        })
    }
}

impl FittedSarimax {
    fn coefficients(&self) -> ArmaCoefficients {
        ArmaCoefficients {
            ar: self.phi.clone(),
            ma: self.theta.clone(),
            seasonal_ar: self.seasonal_phi.clone(),
            seasonal_ma: self.seasonal_theta.clone(),
        }
    }

    fn check_finite(&self) -> Result<()> {
        let all = self
            .phi
            .iter()
            .chain(&self.theta)
            .chain(&self.seasonal_phi)
            .chain(&self.seasonal_theta)
            .chain(&self.beta)
            .chain([&self.trend_const, &self.sigma2]);
        if all.clone().any(|v| !v.is_finite()) || !(self.sigma2 > 0.0) {
            return Err(Error::Domain("model parameters must be finite with σ² > 0".into()));
        }
        Ok(())
    }

    /// Differenced response minus the regression part.
    fn residual_series(&self, y: &[f64], exog: &[Vec<f64>]) -> Result<Vec<f64>> {
        let spec = &self.spec;
        check_exog(spec, y.len(), exog)?;
        let (d, sd, s) = (spec.d, spec.seasonal_d, spec.season);
        let mut u = difference_values(&transform_values(spec.transform, y)?, d, sd, s)?;
        for (col, b) in exog.iter().zip(&self.beta) {
            if *b == 0.0 {
                continue;
            }
            let xd = difference_values(&transform_values(spec.transform, col)?, d, sd, s)?;
            u.iter_mut().zip(&xd).for_each(|(v, x)| *v -= b * x);
        }
        u.iter_mut().for_each(|v| *v -= self.trend_const);
        Ok(u)
    }

    /// Exact Gaussian log-likelihood of `y` under the stored parameters.
    pub fn loglikelihood(&self, y: &TimeSeries, exog: &[Vec<f64>]) -> Result<f64> {
        self.check_finite()?;
        let u = self.residual_series(y.values(), exog)?;
        if u.is_empty() {
            return Err(Error::Length("no observations after differencing".into()));
        }
        let out = filter(&state_space(&self.coefficients(), self.spec.season), &[&u])?;
        let ln2pi = (2.0 * std::f64::consts::PI).ln();
        Ok(out.innovations[0]
            .iter()
            .zip(&out.variances)
            .map(|(v, f)| {
                let var = self.sigma2 * f;
                -0.5 * (ln2pi + var.ln() + v * v / var)
            })
            .sum())
    }

    /// Conditional-mean forecasts for `1..=h` steps after `history`, on the original scale.
    ///
    /// `exog_history` is aligned with `history`; `exog_future` supplies at least
    /// `h` rows per exogenous column. Forecasts of `log1p` models are counts
    /// and are floored at zero.
    pub fn forecast(
        &self,
        history: &TimeSeries,
        exog_history: &[Vec<f64>],
        exog_future: &[Vec<f64>],
        h: usize,
    ) -> Result<Vec<f64>> {
        self.check_finite()?;
        if h == 0 {
            return Err(Error::Input("forecast horizon must be positive".into()));
        }
        let spec = &self.spec;
        if exog_future.len() != spec.exog_names.len() || exog_future.iter().any(|c| c.len() < h) {
            return Err(Error::Input(format!(
                "forecasting {h} steps needs {h} future rows for each of {} exogenous columns",
                spec.exog_names.len()
            )));
        }
        let u = self.residual_series(history.values(), exog_history)?;
        let ss = state_space(&self.coefficients(), spec.season);
        let out = filter(&ss, &[&u])?;
        let mut state = out.next_states[0].clone();

        let (d, sd, s) = (spec.d, spec.seasonal_d, spec.season);
        let mut regression = vec![self.trend_const; h];
        for ((hist, fut), b) in exog_history.iter().zip(exog_future).zip(&self.beta) {
            if *b == 0.0 {
                continue;
            }
            let mut full = hist.clone();
            full.extend_from_slice(&fut[..h]);
            let xd = difference_values(&transform_values(spec.transform, &full)?, d, sd, s)?;
            for (r, x) in regression.iter_mut().zip(&xd[xd.len() - h..]) {
                *r += b * x;
            }
        }
        let mut w_hat = Vec::with_capacity(h);
        for r in regression {
            w_hat.push(r + state[0]);
            ss.transition(&mut state);
        }
        let yt = transform_values(spec.transform, history.values())?;
        let lost = spec.diff_order();
        let level = integrate_values(&w_hat, &yt[yt.len() - lost..], d, sd, s)?;
        Ok(level[lost..]
            .iter()
            .map(|v| match spec.transform {
                TransformKind::Log1p => v.exp_m1().max(0.0),
                _ => *v,
            })
            .collect())
    }

    /// Flat `key = value` snapshot of the model.
    pub fn to_key_value(&self) -> String {
        let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let s = &self.spec;
        let mut out = String::new();
        let _ = writeln!(out, "order = {},{},{}", s.p, s.d, s.q);
        let _ = writeln!(
            out,
            "seasonal_order = {},{},{},{}",
            s.seasonal_p, s.seasonal_d, s.seasonal_q, s.season
        );
        let _ = writeln!(
            out,
            "trend = {}",
            if s.trend == Trend::Constant { "constant" } else { "none" }
        );
        let _ = writeln!(
            out,
            "transform = {}",
            if s.transform == TransformKind::Log1p {
                "log1p"
            } else {
                "identity"
            }
        );
        let _ = writeln!(out, "exog = {}", s.exog_names.join(","));
        let _ = writeln!(out, "phi = {}", join(&self.phi));
        let _ = writeln!(out, "theta = {}", join(&self.theta));
        let _ = writeln!(out, "seasonal_phi = {}", join(&self.seasonal_phi));
        let _ = writeln!(out, "seasonal_theta = {}", join(&self.seasonal_theta));
        let _ = writeln!(out, "beta = {}", join(&self.beta));
        let _ = writeln!(out, "trend_const = {}", self.trend_const);
        let _ = writeln!(out, "sigma2 = {}", self.sigma2);
        let _ = writeln!(out, "loglik = {}", self.loglik);
        let _ = writeln!(out, "nobs = {}", self.nobs);
        out
    }

    /// Parses the output of [`FittedSarimax::to_key_value`].
    pub fn from_key_value(text: &str) -> Result<Self> {
        let map: BTreeMap<&str, &str> = text
            .lines()
            .filter_map(|l| l.split_once('='))
            .map(|(k, v)| (k.trim(), v.trim()))
            .collect();
        let get = |k: &str| {
            map.get(k)
                .copied()
                .ok_or_else(|| Error::Schema(format!("missing key `{k}`")))
        };
        let floats = |k: &str| -> Result<Vec<f64>> {
            let v = get(k)?;
            if v.is_empty() {
                return Ok(Vec::new());
            }
            v.split(',')
                .map(|x| x.trim().parse::<f64>().map_err(|e| Error::Schema(format!("{k}: {e}"))))
                .collect()
        };
        let ints = |k: &str| -> Result<Vec<usize>> {
            get(k)?
                .split(',')
                .map(|x| {
                    x.trim()
                        .parse::<usize>()
                        .map_err(|e| Error::Schema(format!("{k}: {e}")))
                })
                .collect()
        };
        let scalar =
            |k: &str| -> Result<f64> { get(k)?.parse::<f64>().map_err(|e| Error::Schema(format!("{k}: {e}"))) };
        let order = ints("order")?;
        let sorder = ints("seasonal_order")?;
        if order.len() != 3 || sorder.len() != 4 {
            return Err(Error::Schema("order needs 3 entries, seasonal_order 4".into()));
        }
        let exog = get("exog")?;
        let spec = SarimaxSpec::new(order[0], order[1], order[2])
            .seasonal(sorder[0], sorder[1], sorder[2], sorder[3])
            .with_trend(if get("trend")? == "constant" {
                Trend::Constant
            } else {
                Trend::None
            })
            .with_transform(if get("transform")? == "log1p" {
                TransformKind::Log1p
            } else {
                TransformKind::Identity
            })
            .with_exog(exog.split(',').map(str::trim).filter(|s| !s.is_empty()));
        Ok(FittedSarimax {
            spec,
            phi: floats("phi")?,
            theta: floats("theta")?,
            seasonal_phi: floats("seasonal_phi")?,
            seasonal_theta: floats("seasonal_theta")?,
            beta: floats("beta")?,
            trend_const: scalar("trend_const")?,
            sigma2: scalar("sigma2")?,
            loglik: scalar("loglik")?,
            nobs: get("nobs")?.parse().map_err(|_| Error::Schema("nobs".into()))?,
        })
    }
}

/// Free-function form of [`FittedSarimax::loglikelihood`].
pub fn loglikelihood(model: &FittedSarimax, y: &TimeSeries, exog: &[Vec<f64>]) -> Result<f64> {
    model.loglikelihood(y, exog)
}

/// Free-function form of [`FittedSarimax::forecast`].
pub fn forecast(
    model: &FittedSarimax,
    history: &TimeSeries,
    exog_history: &[Vec<f64>],
    exog_future: &[Vec<f64>],
    h: usize,
) -> Result<Vec<f64>> {
    model.forecast(history, exog_history, exog_future, h)
}
