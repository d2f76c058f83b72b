//! Seeded simulators for tests, benchmarks and the `synth` command.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use chrono::{Duration, NaiveDate};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};

use crate::ingest::{FlowRecord, Level, PanelDataset, Region};
use crate::series::poly_mul;
use crate::{Error, Result, EXOGENOUS_COLUMNS};

const BURN_IN: usize = 500;

/// Seasonal ARMA coefficients in the `φ(B)Φ(B^s) y = θ(B)Θ(B^s) ε` convention,
/// with MA polynomials `1 + θ_1 B + ...`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ArmaProcess {
    pub phi: Vec<f64>,
    pub theta: Vec<f64>,
    pub seasonal_phi: Vec<f64>,
    pub seasonal_theta: Vec<f64>,
    pub season: usize,
}

fn expand(regular: &[f64], seasonal: &[f64], season: usize, sign: f64) -> Vec<f64> {
    let lag = |c: &[f64], step: usize| {
        let mut p = vec![0.0; c.len() * step + 1];
        p[0] = 1.0;
        for (i, v) in c.iter().enumerate() {
            p[(i + 1) * step] = sign * v;
        }
        p
    };
    poly_mul(&lag(regular, 1), &lag(seasonal, season.max(1)))
}

impl ArmaProcess {
    /// Simulates `n` values with `N(0, sigma²)` innovations after a burn-in.
    pub fn simulate(&self, n: usize, sigma: f64, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, sigma).expect("sigma must be finite and non-negative");
        // AR side as 1 - Σ a_k B^k, MA side as 1 + Σ b_k B^k.
        let ar = expand(&self.phi, &self.seasonal_phi, self.season, -1.0);
        let ma = expand(&self.theta, &self.seasonal_theta, self.season, 1.0);
        let total = n + BURN_IN;
        let mut y = vec![0.0; total];
        let mut e = vec![0.0; total];
        for t in 0..total {
            e[t] = noise.sample(&mut rng);
            let mut v = e[t];
            for (k, b) in ma.iter().enumerate().skip(1) {
                if t >= k {
                    v += b * e[t - k];
                }
            }
            for (k, a) in ar.iter().enumerate().skip(1) {
                if t >= k {
                    v -= a * y[t - k];
                }
            }
            y[t] = v;
        }
        y.split_off(BURN_IN)
    }
}

/// Simulates a VAR with `lags[l]` multiplying `y_{t-1-l}`; rows of the result are time.
pub fn simulate_var(lags: &[DMatrix<f64>], delta: &DVector<f64>, sigma: f64, n: usize, seed: u64) -> DMatrix<f64> {
    let dim = delta.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma).expect("sigma must be finite and non-negative");
    let q = lags.len();
    let mut ys: Vec<DVector<f64>> = vec![DVector::zeros(dim); q];
    for _ in 0..n + BURN_IN {
        let mut y = delta.clone();
        for (l, m) in lags.iter().enumerate() {
            y += m * &ys[ys.len() - 1 - l];
        }
        y += DVector::from_fn(dim, |_, _| noise.sample(&mut rng));
        ys.push(y);
    }
    let tail = &ys[ys.len() - n..];
    DMatrix::from_fn(n, dim, |r, c| tail[r][c])
}

/// National and state COVID-style panels sharing one simulated epidemic.
#[derive(Debug, Clone)]
pub struct SyntheticCovid {
    pub national: PanelDataset,
    pub states: PanelDataset,
}

fn weekly_factor(t: usize) -> f64 {
    // Reporting dips on weekends, as in the real death counts.
    [1.15, 1.1, 1.05, 1.0, 0.95, 0.8, 0.95][t % 7]
}

/// Simulates `states` regions over the national calendar. Hospital census
/// follows two epidemic waves; deaths are Poisson with a mean that tracks the
/// census a week earlier, times a day-of-week factor.
pub fn synthetic_covid(states: &[Region], seed: u64) -> Result<SyntheticCovid> {
    if states.is_empty() {
        return Err(Error::Input("at least one state required".into()));
    }
    let n = Level::National.expected_length();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state_cols: BTreeMap<Region, (Vec<f64>, Vec<Vec<f64>>)> = BTreeMap::new();
    let mut totals = vec![0.0; n];
    let mut exog_totals = vec![vec![0.0; n]; EXOGENOUS_COLUMNS.len()];
    for region in states {
        let scale: f64 = rng.gen_range(0.3..3.0);
        let peak1: f64 = rng.gen_range(40.0..80.0);
        let peak2: f64 = rng.gen_range(250.0..320.0);
        let width: f64 = rng.gen_range(18.0..35.0);
        let noise = Normal::new(0.0, 0.03).expect("valid");
        let mut log_noise = 0.0f64;
        let hosp: Vec<f64> = (0..n)
            .map(|t| {
                let tf = t as f64;
                let wave = 800.0 * (-(tf - peak1).powi(2) / (2.0 * width * width)).exp()
                    + 1500.0 * (-(tf - peak2).powi(2) / (2.0 * (1.5 * width).powi(2))).exp()
                    + 60.0;
                log_noise = 0.8 * log_noise + noise.sample(&mut rng);
                (scale * wave * log_noise.exp()).round()
            })
            .collect();
        let icu: Vec<f64> = hosp.iter().map(|h| (0.3 * h).round()).collect();
        let vent: Vec<f64> = hosp.iter().map(|h| (0.1 * h).round()).collect();
        let mut cum = 0.0;
        let cumulative: Vec<f64> = hosp
            .iter()
            .map(|h| {
                cum += (h / 9.0).round();
                cum
            })
            .collect();
        let deaths: Vec<f64> = (0..n)
            .map(|t| {
                let lagged = hosp[t.saturating_sub(7)];
                let mean = (0.012 * lagged * weekly_factor(t)).max(0.05);
                Poisson::new(mean).expect("positive mean").sample(&mut rng)
            })
            .collect();
        let exog = vec![hosp, icu, vent, cumulative];
        totals.iter_mut().zip(&deaths).for_each(|(a, b)| *a += b);
        for (tot, col) in exog_totals.iter_mut().zip(&exog) {
            tot.iter_mut().zip(col).for_each(|(a, b)| *a += b);
        }
        state_cols.insert(region.clone(), (deaths, exog));
    }
    let names: Vec<String> = EXOGENOUS_COLUMNS.iter().map(|s| s.to_string()).collect();
    let national_start = Level::National.start_date();
    let mut national_cols = BTreeMap::new();
    national_cols.insert(Region::national(), (totals, exog_totals));
    let national = PanelDataset::new(national_start, names.clone(), national_cols)?;
    let offset = (Level::State.start_date() - national_start).num_days() as usize;
    let all_states = PanelDataset::new(national_start, names, state_cols)?;
    let states = all_states.slice(offset, offset + Level::State.expected_length())?;
    Ok(SyntheticCovid { national, states })
}

/// Daily flows between `regions` over `days` days from `start`; flow sizes
/// vary by pair and by day.
pub fn synthetic_flows(regions: &[Region], start: NaiveDate, days: usize, seed: u64) -> Vec<FlowRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let size: Vec<f64> = regions.iter().map(|_| rng.gen_range(1.0..20.0)).collect();
    let mut out = Vec::with_capacity(regions.len() * regions.len() * days);
    for d in 0..days {
        let date = start + Duration::days(d as i64);
        for (i, o) in regions.iter().enumerate() {
            for (j, dest) in regions.iter().enumerate() {
                let base = if i == j {
                    50.0 * size[i]
                } else {
                    size[i] * size[j] / (1.0 + (i as f64 - j as f64).abs())
                };
                let v = (base * rng.gen_range(0.8..1.2) * 100.0).round();
                out.push(FlowRecord {
                    origin: o.clone(),
                    destination: dest.clone(),
                    date,
                    visitor_flows: v,
                    pop_flows: (v * 10.0).round(),
                });
            }
        }
    }
    out
}

/// Writes flows in the loader's layout.
pub fn write_flows_csv(path: impl AsRef<Path>, records: &[FlowRecord]) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
    w.write_record(["origin", "destination", "date", "visitor_flows", "pop_flows"])?;
    for r in records {
        w.write_record([
            r.origin.to_string(),
            r.destination.to_string(),
            r.date.format("%Y-%m-%d").to_string(),
            r.visitor_flows.to_string(),
            r.pop_flows.to_string(),
        ])?;
    }
    w.into_inner()
        .map_err(|e| Error::io(path, e.into_error()))?
        .flush()
        .map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn white_noise_moments() {
        let y = ArmaProcess::default().simulate(20_000, 2.0, 1);
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / y.len() as f64;
        assert!(mean.abs() < 0.05);
        assert!((var - 4.0).abs() < 0.15);
    }

    #[test]
    fn ar1_autocorrelation() {
        let p = ArmaProcess {
            phi: vec![0.7],
            ..Default::default()
        };
        let y = p.simulate(20_000, 1.0, 2);
        let acf = crate::series::acf_values(&y, 2).unwrap();
        assert!((acf[1] - 0.7).abs() < 0.03);
        assert!((acf[2] - 0.49).abs() < 0.04);
    }

    #[test]
    fn seeded_reproducibility() {
        let p = ArmaProcess {
            phi: vec![0.3],
            seasonal_theta: vec![0.4],
            season: 7,
            ..Default::default()
        };
        assert_eq!(p.simulate(100, 1.0, 9), p.simulate(100, 1.0, 9));
        assert_ne!(p.simulate(100, 1.0, 9), p.simulate(100, 1.0, 10));
    }

    #[test]
    fn covid_panels_line_up() {
        let states: Vec<Region> = ["CA", "NY", "TX"].iter().map(|c| Region::parse(c).unwrap()).collect();
        let s = synthetic_covid(&states, 3).unwrap();
        assert_eq!(s.national.len(), 376);
        assert_eq!(s.states.len(), 297);
        assert_eq!(s.states.start_date(), Level::State.start_date());
        let nat = s.national.target(&Region::national()).unwrap();
        let sum = s.states.summed_target().unwrap();
        let off = nat.index_of(sum.start_date()).unwrap();
        assert_eq!(&nat.values()[off..off + sum.len()], sum.values());
        assert!(sum.values().iter().all(|v| *v >= 0.0 && v.fract() == 0.0));
    }

    #[test]
    fn flows_cover_all_pairs() {
        let r: Vec<Region> = ["CA", "NY"].iter().map(|c| Region::parse(c).unwrap()).collect();
        let f = synthetic_flows(&r, NaiveDate::from_ymd_opt(2020, 3, 1).unwrap(), 3, 0);
        assert_eq!(f.len(), 12);
        assert!(f.iter().all(|x| x.pop_flows > 0.0));
    }
}
