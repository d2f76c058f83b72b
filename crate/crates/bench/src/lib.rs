//! Shared fixtures for the benchmarks. Everything is seeded, so timings
//! compare like with like across runs.

use nalgebra::{DMatrix, DVector};

use mortcast_core::graph::{build_mobility_graph, GcnWeights};
use mortcast_core::ingest::Level;
use mortcast_core::mcp::{LagColumn, LagDesign};
use mortcast_core::synthetic::{simulate_var, synthetic_flows, ArmaProcess};
use mortcast_core::{Region, TimeSeries};

/// SARIMA(1,0,0)(1,0,0)_7 sample path.
pub fn seasonal_ar_series(n: usize, seed: u64) -> TimeSeries {
    let process = ArmaProcess {
        phi: vec![0.5],
        seasonal_phi: vec![0.4],
        season: 7,
        ..Default::default()
    };
    TimeSeries::from_values(process.simulate(n, 1.0, seed)).expect("finite sample")
}

/// Standardized AR(1) columns and a sparse linear response.
pub fn mcp_problem(rows: usize, cols: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<f64>) {
    let ar = ArmaProcess {
        phi: vec![0.6],
        ..Default::default()
    };
    let mut x: Vec<Vec<f64>> = (0..cols).map(|j| ar.simulate(rows, 1.0, seed + j as u64)).collect();
    for c in &mut x {
        let mean = c.iter().sum::<f64>() / rows as f64;
        let sd = (c.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / rows as f64).sqrt();
        c.iter_mut().for_each(|v| *v = (*v - mean) / sd);
    }
    let noise = ArmaProcess::default().simulate(rows, 0.5, seed + 1000);
    let z = (0..rows)
        .map(|i| 1.5 * x[0][i] - 0.8 * x[cols / 2][i] + noise[i])
        .collect();
    (x, z)
}

/// [`mcp_problem`] wrapped as a design of target lags `1..=cols`.
pub fn mcp_design(rows: usize, cols: usize, seed: u64) -> LagDesign {
    let (columns, response) = mcp_problem(rows, cols, seed);
    LagDesign {
        response,
        columns,
        column_names: (1..=cols).map(|l| format!("z_lag{l}")).collect(),
        sources: (1..=cols).map(|lag| LagColumn { source: 0, lag }).collect(),
        k: cols,
        h: 1,
        target_index: (0..rows).collect(),
    }
}

/// Stationary VAR(2) panel with `dim` variables; rows are time.
pub fn var_panel(dim: usize, rows: usize, seed: u64) -> DMatrix<f64> {
    let a1 = DMatrix::from_fn(dim, dim, |i, j| if i == j { 0.4 } else { 0.05 });
    let a2 = DMatrix::from_fn(dim, dim, |i, j| if i == j { 0.2 } else { -0.03 });
    simulate_var(&[a1, a2], &DVector::from_element(dim, 1.0), 1.0, rows, seed)
}

/// Normalized adjacency over every state, features and two-layer weights.
pub struct GcnFixture {
    pub a_hat: DMatrix<f64>,
    pub x: DMatrix<f64>,
    pub weights: GcnWeights,
}

pub fn gcn_fixture(features: usize, hidden: usize, seed: u64) -> GcnFixture {
    let regions = Region::all_states();
    let flows = synthetic_flows(&regions, Level::State.start_date(), 7, seed);
    let graph = build_mobility_graph(&flows, &regions, 0.2, false).expect("graph");
    let n = regions.len();
    let cell = |i: usize, j: usize, k: usize| ((i * 31 + j * 17 + k) % 23) as f64 / 23.0 - 0.5;
    GcnFixture {
        a_hat: graph.normalized,
        x: DMatrix::from_fn(n, features, |i, j| cell(i, j, 1)),
        weights: GcnWeights::new(
            DMatrix::from_fn(features, hidden, |i, j| cell(i, j, 2)),
            DMatrix::from_fn(hidden, 1, |i, j| cell(i, j, 3)),
        )
        .expect("weights"),
    }
}
