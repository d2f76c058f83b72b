//! Lagged weekly log-return design matrices and sure independence screening.

use crate::series::{weekly_log_return_values, LogOffset, TimeSeries, WEEK};
use crate::{Error, Result, TARGET_COLUMN};

/// Where a design column comes from: the target (`source == 0`) or exogenous
/// column `source - 1`, lagged by `lag` days relative to the response time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LagColumn {
    pub source: usize,
    pub lag: usize,
}

/// Response `z_t` and lagged predictors for one horizon.
///
/// Columns are stored column-major. Before screening the column order is the
/// target lags `h..h+k-1`, then each exogenous block with the same lags.
#[derive(Debug, Clone, PartialEq)]
pub struct LagDesign {
    pub response: Vec<f64>,
    pub columns: Vec<Vec<f64>>,
    pub column_names: Vec<String>,
    pub sources: Vec<LagColumn>,
    pub k: usize,
    pub h: usize,
    /// Index into the original series of each row's response time.
    pub target_index: Vec<usize>,
}

impl LagDesign {
    pub fn n_rows(&self) -> usize {
        self.response.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    /// Keeps the listed columns, in the given order.
    pub fn select(&self, keep: &[usize]) -> LagDesign {
        LagDesign {
            response: self.response.clone(),
            columns: keep.iter().map(|&j| self.columns[j].clone()).collect(),
            column_names: keep.iter().map(|&j| self.column_names[j].clone()).collect(),
            sources: keep.iter().map(|&j| self.sources[j]).collect(),
            k: self.k,
            h: self.h,
            target_index: self.target_index.clone(),
        }
    }
}

/// Builds the design regressing `z_t` on `z_{t-h}..z_{t-(h+k-1)}` and the same
/// lags of each exogenous column's weekly log-return (`log1p` offset).
pub fn build_lag_design(
    target: &TimeSeries,
    exog: &[Vec<f64>],
    exog_names: &[String],
    h: usize,
    k: usize,
) -> Result<LagDesign> {
    let n = target.len();
    if h == 0 || k == 0 {
        return Err(Error::Parameter("horizon and lag depth must be positive".into()));
    }
    if exog.len() != exog_names.len() || exog.iter().any(|c| c.len() != n) {
        return Err(Error::Dimension("exogenous columns must align with the target".into()));
    }
    if n <= h + k + WEEK {
        return Err(Error::Length(format!(
            "lag design with h={h}, k={k} needs more than {} observations, got {n}",
            h + k + WEEK
        )));
    }
    // Element `i` of each returns vector is z at original index i + 7.
    let mut returns = vec![weekly_log_return_values(target.values(), LogOffset::PlusOne)?];
    for col in exog {
        returns.push(weekly_log_return_values(col, LogOffset::PlusOne)?);
    }
    let first = WEEK + h + k - 1;
    let target_index: Vec<usize> = (first..n).collect();
    let response = target_index.iter().map(|&t| returns[0][t - WEEK]).collect();

    let mut columns = Vec::new();
    let mut column_names = Vec::new();
    let mut sources = Vec::new();
    for (source, z) in returns.iter().enumerate() {
        let name = if source == 0 {
            TARGET_COLUMN
        } else {
            exog_names[source - 1].as_str()
        };
        for lag in h..h + k {
            columns.push(target_index.iter().map(|&t| z[t - lag - WEEK]).collect());
            column_names.push(format!("{name}_lag{lag}"));
            sources.push(LagColumn { source, lag });
        }
    }
    Ok(LagDesign {
        response,
        columns,
        column_names,
        sources,
        k,
        h,
        target_index,
    })
}

pub(crate) fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Variance below this (relative to the squared magnitude) counts as constant.
fn is_degenerate(v: &[f64], sd: f64) -> bool {
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    sd <= 1e-12 * scale.max(f64::MIN_POSITIVE)
}

/// Absolute Pearson correlation of each column with the response; `None` for constant columns.
pub fn marginal_correlations(design: &LagDesign) -> Vec<Option<f64>> {
    let (zm, zs) = mean_sd(&design.response);
    design
        .columns
        .iter()
        .map(|c| {
            let (m, s) = mean_sd(c);
            if is_degenerate(c, s) || zs == 0.0 {
                return None;
            }
            let cov = c
                .iter()
                .zip(&design.response)
                .map(|(x, z)| (x - m) * (z - zm))
                .sum::<f64>()
                / c.len() as f64;
            Some((cov / (s * zs)).abs())
        })
        .collect()
}

fn top_by_correlation(corr: &[Option<f64>], candidates: &[usize], m: usize) -> Vec<usize> {
    let mut ranked: Vec<(usize, f64)> = candidates.iter().filter_map(|&j| corr[j].map(|c| (j, c))).collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    ranked.truncate(m);
    ranked.into_iter().map(|(j, _)| j).collect()
}

/// Keeps the `m` columns most correlated (in absolute value) with the
/// response, preserving their original order. Constant columns are never kept.
pub fn sis_screen(design: &LagDesign, m: usize) -> Result<LagDesign> {
    if m == 0 {
        return Err(Error::Parameter("screening size must be positive".into()));
    }
    if design.n_cols() < m {
        return Err(Error::Dimension(format!(
            "cannot keep {m} of {} columns",
            design.n_cols()
        )));
    }
    let corr = marginal_correlations(design);
    let all: Vec<usize> = (0..design.n_cols()).collect();
    let mut keep = top_by_correlation(&corr, &all, m);
    keep.sort_unstable();
    Ok(design.select(&keep))
}

/// Like [`sis_screen`] but target lags bypass screening; only exogenous
/// columns compete for the `m` slots.
pub fn sis_screen_exogenous(design: &LagDesign, m: usize) -> Result<LagDesign> {
    if m == 0 {
        return Err(Error::Parameter("screening size must be positive".into()));
    }
    let corr = marginal_correlations(design);
    let exog: Vec<usize> = (0..design.n_cols()).filter(|&j| design.sources[j].source > 0).collect();
    let mut keep: Vec<usize> = (0..design.n_cols())
        .filter(|&j| design.sources[j].source == 0 && corr[j].is_some())
        .collect();
    keep.extend(top_by_correlation(&corr, &exog, m));
    keep.sort_unstable();
    Ok(design.select(&keep))
}
