//! Vector autoregression `y_t = δ + Φ^(0) y_{t-q} + ... + Φ^(q-1) y_{t-1} + ε_t`.
//!
//! Coefficient matrices are stored oldest lag first: `phi[s]` multiplies
//! `y_{t-q+s}`, so `phi[q-1]` is the first-lag matrix.

use nalgebra::{DMatrix, DVector};

use crate::linalg::{least_squares, log_det_spd};
use crate::series::{invert_weekly_log_return, weekly_log_return_values, LogOffset, WEEK};
use crate::{Error, Result};

pub const DEFAULT_MAX_ORDER: usize = 14;

#[derive(Debug, Clone, PartialEq)]
pub struct VarModel {
    pub order: usize,
    pub delta: DVector<f64>,
    pub phi: Vec<DMatrix<f64>>,
    /// Residual covariance with divisor equal to the number of fitted rows.
    pub sigma: DMatrix<f64>,
    pub variable_names: Vec<String>,
}

impl VarModel {
    pub fn n_vars(&self) -> usize {
        self.delta.len()
    }

    /// Matrix multiplying `y_{t-lag}`, `lag` in `1..=order`.
    pub fn lag_matrix(&self, lag: usize) -> &DMatrix<f64> {
        &self.phi[self.order - lag]
    }

    /// Unconditional mean `(I - Σ Φ)^{-1} δ` of a stable model.
    pub fn implied_mean(&self) -> Result<DVector<f64>> {
        let n = self.n_vars();
        let mut m = DMatrix::identity(n, n);
        for p in &self.phi {
            m -= p;
        }
        m.lu()
            .solve(&self.delta)
            .ok_or_else(|| Error::Domain("VAR has a unit root; no finite mean".into()))
    }

    /// Plain-text dump of all coefficients.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "order = {}\nvariables = {}\n",
            self.order,
            self.variable_names.join(",")
        );
        let row = |v: Vec<f64>| v.iter().map(|x| format!("{x:.17e}")).collect::<Vec<_>>().join(",");
        out.push_str(&format!("delta = {}\n", row(self.delta.iter().copied().collect())));
        for lag in 1..=self.order {
            let m = self.lag_matrix(lag);
            for i in 0..m.nrows() {
                out.push_str(&format!(
                    "lag{lag}[{i}] = {}\n",
                    row(m.row(i).iter().copied().collect())
                ));
            }
        }
        for i in 0..self.sigma.nrows() {
            out.push_str(&format!(
                "sigma[{i}] = {}\n",
                row(self.sigma.row(i).iter().copied().collect())
            ));
        }
        out
    }
}

/// Regressor row `[1, y_{t-q}, ..., y_{t-1}]` for each `t` in `first..T`.
fn design(panel: &DMatrix<f64>, q: usize, first: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = panel.ncols();
    let rows = panel.nrows() - first;
    let x = DMatrix::from_fn(rows, 1 + n * q, |r, c| {
        if c == 0 {
            return 1.0;
        }
        let (s, j) = ((c - 1) / n, (c - 1) % n);
        panel[(first + r - q + s, j)]
    });
    let y = panel.rows(first, rows).into_owned();
    (x, y)
}

fn fit_from(panel: &DMatrix<f64>, q: usize, first: usize, names: &[String]) -> Result<VarModel> {
    let n = panel.ncols();
    let (x, y) = design(panel, q, first);
    let b = least_squares(&x, &y)?;
    let resid = &y - &x * &b;
    let sigma = resid.transpose() * &resid / resid.nrows() as f64;
    let delta = b.row(0).transpose();
    let phi = (0..q)
        .map(|s| DMatrix::from_fn(n, n, |i, j| b[(1 + s * n + j, i)]))
        .collect();
    Ok(VarModel {
        order: q,
        delta,
        phi,
        sigma,
        variable_names: names.to_vec(),
    })
}

fn check_panel(panel: &DMatrix<f64>, q: usize, first: usize) -> Result<()> {
    if q == 0 {
        return Err(Error::Parameter("VAR order must be positive".into()));
    }
    let n = panel.ncols();
    if n == 0 {
        return Err(Error::Dimension("panel has no variables".into()));
    }
    let rows = panel.nrows().saturating_sub(first);
    if rows <= n * q + 1 {
        return Err(Error::Length(format!(
            "VAR({q}) on {n} variables needs more than {} usable rows, got {rows}",
            n * q + 1
        )));
    }
    if panel.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("panel contains non-finite values".into()));
    }
    Ok(())
}

fn default_names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("y{i}")).collect()
}

/// Equation-by-equation least squares on a `T × n` panel (rows are time).
pub fn fit_var(panel: &DMatrix<f64>, q: usize) -> Result<VarModel> {
    fit_var_named(panel, q, &default_names(panel.ncols()))
}

pub fn fit_var_named(panel: &DMatrix<f64>, q: usize, names: &[String]) -> Result<VarModel> {
    if names.len() != panel.ncols() {
        return Err(Error::Dimension("one name per panel column required".into()));
    }
    check_panel(panel, q, q)?;
    fit_from(panel, q, q, names)
}

/// BIC of each order `1..=q_max`, all evaluated on the rows valid at `q_max`.
pub fn bic_values(panel: &DMatrix<f64>, q_max: usize) -> Result<Vec<f64>> {
    check_panel(panel, q_max, q_max)?;
    let n = panel.ncols() as f64;
    let t_eff = (panel.nrows() - q_max) as f64;
    let names = default_names(panel.ncols());
    (1..=q_max)
        .map(|q| {
            let m = fit_from(panel, q, q_max, &names)?;
            let k = n * n * q as f64 + n;
            Ok(log_det_spd(&m.sigma)? + t_eff.ln() / t_eff * k)
        })
        .collect()
}

pub fn select_order_bic(panel: &DMatrix<f64>, q_max: usize) -> Result<usize> {
    let bic = bic_values(panel, q_max)?;
    let best = bic
        .iter()
        .enumerate()
        .fold(0, |best, (i, v)| if *v < bic[best] { i } else { best });
    Ok(best + 1)
}

/// Conditional-mean forecasts for steps `1..=h` after the last row of `recent`.
pub fn forecast_var_path(model: &VarModel, recent: &DMatrix<f64>, h: usize) -> Result<Vec<DVector<f64>>> {
    let (n, q) = (model.n_vars(), model.order);
    if recent.ncols() != n {
        return Err(Error::Dimension(format!(
            "window has {} variables, model has {n}",
            recent.ncols()
        )));
    }
    if recent.nrows() < q {
        return Err(Error::Length(format!(
            "VAR({q}) forecast needs {q} observations, got {}",
            recent.nrows()
        )));
    }
    let mut history: Vec<DVector<f64>> = (recent.nrows() - q..recent.nrows())
        .map(|t| recent.row(t).transpose())
        .collect();
    let mut out = Vec::with_capacity(h);
    for _ in 0..h {
        let len = history.len();
        let mut next = model.delta.clone();
        for (s, p) in model.phi.iter().enumerate() {
            next += p * &history[len - q + s];
        }
        history.push(next.clone());
        out.push(next);
    }
    Ok(out)
}

pub fn forecast_var(model: &VarModel, recent: &DMatrix<f64>, h: usize) -> Result<DVector<f64>> {
    if h == 0 {
        return Err(Error::Parameter("horizon must be positive".into()));
    }
    Ok(forecast_var_path(model, recent, h)?.pop().expect("h >= 1"))
}

/// VAR on weekly log-returns of the target plus exogenous counts, forecasting target counts.
#[derive(Debug, Clone, PartialEq)]
pub struct VarCountModel {
    pub model: VarModel,
    /// Exogenous columns kept in the panel (constant ones are dropped).
    pub exog_used: Vec<usize>,
}

fn return_panel(target: &[f64], exog: &[Vec<f64>], used: &[usize]) -> Result<DMatrix<f64>> {
    let mut cols = vec![weekly_log_return_values(target, LogOffset::PlusOne)?];
    for &j in used {
        cols.push(weekly_log_return_values(&exog[j], LogOffset::PlusOne)?);
    }
    let t = cols[0].len();
    Ok(DMatrix::from_fn(t, cols.len(), |r, c| cols[c][r]))
}

impl VarCountModel {
    /// Selects the order by BIC up to `q_max` and fits on the whole training window.
    pub fn fit(target: &[f64], exog: &[Vec<f64>], exog_names: &[String], q_max: usize) -> Result<Self> {
        if exog.len() != exog_names.len() || exog.iter().any(|c| c.len() != target.len()) {
            return Err(Error::Dimension("exogenous columns must align with the target".into()));
        }
        if target.len() <= WEEK {
            return Err(Error::Length("VAR needs more than one week of data".into()));
        }
        // A variable whose log-return never moves makes the regressors singular.
        let exog_used: Vec<usize> = (0..exog.len())
            .filter(|&j| {
                weekly_log_return_values(&exog[j], LogOffset::PlusOne)
                    .map(|z| z.iter().any(|v| *v != z[0]))
                    .unwrap_or(false)
            })
            .collect();
        let panel = return_panel(target, exog, &exog_used)?;
        let mut names = vec![crate::TARGET_COLUMN.to_string()];
        names.extend(exog_used.iter().map(|&j| exog_names[j].clone()));
        let q = select_order_bic(&panel, q_max)?;
        let model = fit_var_named(&panel, q, &names)?;
        Ok(VarCountModel { model, exog_used })
    }

    /// Target count forecasts for horizons `1..=h_max`, inverting the weekly
    /// log-return with earlier forecasts as bases beyond one week.
    pub fn forecast(&self, target: &[f64], exog: &[Vec<f64>], h_max: usize) -> Result<Vec<f64>> {
        let panel = return_panel(target, exog, &self.exog_used)?;
        let path = forecast_var_path(&self.model, &panel, h_max)?;
        let n = target.len();
        let mut out: Vec<f64> = Vec::with_capacity(h_max);
        for (i, z) in path.iter().enumerate() {
            let h = i + 1;
            let base = if h <= WEEK {
                target[n + h - 1 - WEEK]
            } else {
                out[h - WEEK - 1]
            };
            out.push(invert_weekly_log_return(base, z[0]));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn simulate(phis: &[DMatrix<f64>], delta: &DVector<f64>, t: usize, seed: u64) -> DMatrix<f64> {
        // phis[l] multiplies y_{t-1-l} here.
        let n = delta.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let burn = 200;
        let mut ys: Vec<DVector<f64>> = vec![DVector::zeros(n); phis.len()];
        for _ in 0..t + burn {
            let mut y = delta.clone();
            for (l, p) in phis.iter().enumerate() {
                y += p * &ys[ys.len() - 1 - l];
            }
            y += DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
            ys.push(y);
        }
        let ys = &ys[ys.len() - t..];
        DMatrix::from_fn(t, n, |r, c| ys[r][c])
    }

    #[test]
    fn univariate_matches_ar_ols() {
        let panel = simulate(
            &[DMatrix::from_element(1, 1, 0.6)],
            &DVector::from_element(1, 0.5),
            200,
            1,
        );
        let m = fit_var(&panel, 2).unwrap();
        let y: Vec<f64> = panel.column(0).iter().copied().collect();
        // Normal equations for y_t on [1, y_{t-2}, y_{t-1}].
        let mut xtx = DMatrix::<f64>::zeros(3, 3);
        let mut xty = DVector::<f64>::zeros(3);
        for t in 2..y.len() {
            let r = DVector::from_vec(vec![1.0, y[t - 2], y[t - 1]]);
            xtx += &r * r.transpose();
            xty += &r * y[t];
        }
        let b = xtx.lu().solve(&xty).unwrap();
        assert!((m.delta[0] - b[0]).abs() < 1e-9);
        assert!((m.phi[0][(0, 0)] - b[1]).abs() < 1e-9);
        assert!((m.lag_matrix(1)[(0, 0)] - b[2]).abs() < 1e-9);
    }

    #[test]
    fn recovers_diagonal_var1() {
        let phi = DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.5]);
        let panel = simulate(&[phi], &DVector::zeros(2), 1000, 7);
        let m = fit_var(&panel, 1).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { 0.5 } else { 0.0 };
                assert!((m.phi[0][(i, j)] - want).abs() < 0.1);
            }
        }
        assert!((m.sigma.clone() - m.sigma.transpose()).abs().max() < 1e-15);
        assert!(m.sigma.clone().cholesky().is_some());
    }

    #[test]
    fn constant_panel_is_collinear() {
        let panel = DMatrix::from_element(50, 2, 3.0);
        assert!(matches!(fit_var(&panel, 1), Err(Error::Collinearity(_))));
    }

    #[test]
    fn short_panel() {
        let panel = DMatrix::from_fn(6, 2, |r, c| (r * 3 + c * 5 % 7) as f64);
        assert!(matches!(fit_var(&panel, 2), Err(Error::Length(_))));
    }

    #[test]
    fn residuals_orthogonal_to_regressors() {
        let phi = DMatrix::from_row_slice(3, 3, &[0.3, 0.1, 0.0, -0.2, 0.4, 0.1, 0.0, 0.2, 0.1]);
        let panel = simulate(&[phi], &DVector::from_vec(vec![1.0, 0.0, -1.0]), 300, 3);
        let q = 2;
        let m = fit_var(&panel, q).unwrap();
        let (x, y) = design(&panel, q, q);
        let mut b = DMatrix::zeros(1 + 3 * q, 3);
        for i in 0..3 {
            b[(0, i)] = m.delta[i];
            for s in 0..q {
                for j in 0..3 {
                    b[(1 + s * 3 + j, i)] = m.phi[s][(i, j)];
                }
            }
        }
        let resid = &y - &x * b;
        for c in 0..x.ncols() {
            let col = x.column(c);
            for i in 0..3 {
                let dot = col.dot(&resid.column(i)) / (col.norm() * resid.column(i).norm());
                assert!(dot.abs() < 1e-8);
            }
        }
    }

    #[test]
    fn bic_picks_var2() {
        let p1 = DMatrix::from_row_slice(2, 2, &[0.4, 0.1, 0.0, 0.3]);
        let p2 = DMatrix::from_row_slice(2, 2, &[-0.3, 0.0, 0.1, 0.25]);
        let panel = simulate(&[p1, p2], &DVector::zeros(2), 2000, 11);
        assert_eq!(select_order_bic(&panel, 6).unwrap(), 2);
        assert_eq!(select_order_bic(&panel, 1).unwrap(), 1);
    }

    #[test]
    fn bic_white_noise_picks_one() {
        let panel = simulate(&[DMatrix::zeros(2, 2)], &DVector::zeros(2), 800, 5);
        assert_eq!(select_order_bic(&panel, 5).unwrap(), 1);
        let m = fit_var(&panel, 1).unwrap();
        assert!(m.phi[0].abs().max() < 0.15);
    }

    fn model(phi: Vec<DMatrix<f64>>, delta: DVector<f64>) -> VarModel {
        let n = delta.len();
        VarModel {
            order: phi.len(),
            delta,
            phi,
            sigma: DMatrix::identity(n, n),
            variable_names: default_names(n),
        }
    }

    #[test]
    fn forecast_examples() {
        let m = model(vec![DMatrix::zeros(2, 2)], DVector::from_vec(vec![1.5, -2.0]));
        let recent = DMatrix::from_element(3, 2, 9.0);
        for h in 1..5 {
            assert_eq!(forecast_var(&m, &recent, h).unwrap(), m.delta);
        }
        let s = model(vec![DMatrix::from_element(1, 1, 0.5)], DVector::zeros(1));
        let one = DMatrix::from_element(1, 1, 1.0);
        for h in 1..=14 {
            let f = forecast_var(&s, &one, h).unwrap()[0];
            assert!((f - 0.5f64.powi(h as i32)).abs() < 1e-15);
        }
        let q2 = model(vec![DMatrix::zeros(1, 1); 2], DVector::zeros(1));
        assert!(matches!(forecast_var(&q2, &one, 1), Err(Error::Length(_))));
    }

    #[test]
    fn relabeling_permutes_forecasts() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut r = || rng.gen_range(-0.3..0.3);
        let phi: Vec<DMatrix<f64>> = (0..2).map(|_| DMatrix::from_fn(3, 3, |_, _| r())).collect();
        let delta = DVector::from_fn(3, |_, _| r());
        let recent = DMatrix::from_fn(4, 3, |_, _| r());
        let perm = [2usize, 0, 1];
        let pm = DMatrix::from_fn(3, 3, |i, j| if perm[i] == j { 1.0 } else { 0.0 });
        let m = model(phi.clone(), delta.clone());
        let mp = model(phi.iter().map(|p| &pm * p * pm.transpose()).collect(), &pm * delta);
        let recent_p = &recent * pm.transpose();
        for h in [1, 3, 8] {
            let a = forecast_var(&m, &recent, h).unwrap();
            let b = forecast_var(&mp, &recent_p, h).unwrap();
            assert!((&pm * a - b).abs().max() < 1e-14);
        }
    }

    #[test]
    fn stable_forecasts_approach_mean() {
        let m = model(
            vec![
                DMatrix::from_row_slice(2, 2, &[0.1, 0.0, 0.05, 0.1]),
                DMatrix::from_row_slice(2, 2, &[0.5, 0.1, 0.0, 0.3]),
            ],
            DVector::from_vec(vec![1.0, 2.0]),
        );
        let mu = m.implied_mean().unwrap();
        let recent = DMatrix::from_element(2, 2, 10.0);
        let gaps: Vec<f64> = [1, 10, 40, 120]
            .iter()
            .map(|&h| (forecast_var(&m, &recent, h).unwrap() - &mu).norm())
            .collect();
        assert!(gaps.windows(2).all(|w| w[1] < w[0]));
        assert!(gaps[3] < 1e-6);
    }

    #[test]
    fn count_model_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 200;
        let y: Vec<f64> = (0..n)
            .map(|t| 100.0 + 30.0 * ((t % 7) as f64) + rng.gen_range(0.0..20.0))
            .collect();
        let x: Vec<Vec<f64>> = vec![
            (0..n).map(|t| 500.0 + t as f64 + rng.gen_range(0.0..10.0)).collect(),
            vec![0.0; n],
        ];
        let names = vec!["a".to_string(), "b".to_string()];
        let m = VarCountModel::fit(&y, &x, &names, 8).unwrap();
        assert_eq!(m.exog_used, vec![0]);
        assert_eq!(m.model.variable_names, vec!["deathIncrease", "a"]);
        let f = m.forecast(&y, &x, 14).unwrap();
        assert_eq!(f.len(), 14);
        assert!(f.iter().all(|v| v.is_finite() && *v >= 0.0));
        assert!(m.model.to_text().contains("lag1[0]"));
    }
}
