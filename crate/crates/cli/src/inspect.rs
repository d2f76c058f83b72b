//! `mortcast inspect`: the autocorrelation and adjacency artifacts.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::PathBuf;

use mortcast_core::graph::{adjacency_csv, build_mobility_graph, top_cell_count, MobilityGraph};
use mortcast_core::ingest::{load_covid_csv, load_flows_csv};
use mortcast_core::series::acf;
use mortcast_core::{Level, Region};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::run::write_file;

#[derive(Debug, Clone)]
pub struct AcfOutput {
    pub region: Region,
    /// Autocorrelations for lags `0..=max_lag`.
    pub values: Vec<f64>,
    pub path: PathBuf,
}

/// Writes `acf.csv` (`lag,acf`) for the target series of the configured region.
pub fn inspect_acf(cfg: &ExperimentConfig) -> Result<AcfOutput> {
    let (ds, region) = match cfg.level {
        Level::National => {
            let p = cfg.require_path(&cfg.national_path, "national")?;
            (
                load_covid_csv(p, Level::National).map_err(CliError::core("data-ingest"))?,
                Region::national(),
            )
        }
        Level::State => {
            let p = cfg.require_path(&cfg.state_path, "state")?;
            let region = cfg
                .acf_region
                .clone()
                .or_else(|| cfg.report_states.first().cloned())
                .ok_or_else(|| CliError::Validation("inspect.region is not set".into()))?;
            (
                load_covid_csv(p, Level::State).map_err(CliError::core("data-ingest"))?,
                region,
            )
        }
    };
    let series = ds.target(&region).map_err(CliError::core("data-ingest"))?;
    let values = acf(&series, cfg.acf_max_lag).map_err(CliError::core("series-core"))?;
    let mut s = String::from("lag,acf\n");
    for (lag, v) in values.iter().enumerate() {
        let _ = writeln!(s, "{lag},{v}");
    }
    std::fs::create_dir_all(&cfg.output).map_err(CliError::io(&cfg.output))?;
    let path = cfg.output.join("acf.csv");
    write_file(&path, s.as_bytes())?;
    Ok(AcfOutput { region, values, path })
}

#[derive(Debug, Clone)]
pub struct AdjacencyOutput {
    pub graph: MobilityGraph,
    pub ones: usize,
    pub expected_ones: usize,
    pub paths: Vec<PathBuf>,
}

/// Writes the binary, corrected and normalized adjacency matrices over the
/// regions present in the flow file.
pub fn inspect_adjacency(cfg: &ExperimentConfig) -> Result<AdjacencyOutput> {
    let p = cfg.require_path(&cfg.flows_path, "flows")?;
    let load = load_flows_csv(p).map_err(CliError::core("data-ingest"))?;
    if load.dropped > 0 {
        log::warn!("{} flow rows dropped while loading", load.dropped);
    }
    let regions: Vec<Region> = load
        .records
        .iter()
        .flat_map(|r| [r.origin.clone(), r.destination.clone()])
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if regions.is_empty() {
        return Err(CliError::Core {
            module: "data-ingest",
            source: mortcast_core::Error::Data("flow file has no records".into()),
        });
    }
    let graph = build_mobility_graph(&load.records, &regions, cfg.edge_fraction, cfg.exclude_self_loops)
        .map_err(CliError::core("mobility-graph"))?;
    std::fs::create_dir_all(&cfg.output).map_err(CliError::io(&cfg.output))?;
    let mut paths = Vec::new();
    for (name, m) in [
        ("adjacency_binary.csv", &graph.binary.matrix),
        ("adjacency_corrected.csv", &graph.corrected.matrix),
        ("adjacency_normalized.csv", &graph.normalized),
    ] {
        let path = cfg.output.join(name);
        write_file(
            &path,
            adjacency_csv(&regions, m)
                .map_err(CliError::core("mobility-graph"))?
                .as_bytes(),
        )?;
        paths.push(path);
    }
    let n = regions.len();
    let cells = if cfg.exclude_self_loops { n * (n - 1) } else { n * n };
    let ones = graph.binary.matrix.iter().filter(|v| **v == 1.0).count();
    Ok(AdjacencyOutput {
        ones,
        expected_ones: top_cell_count(cfg.edge_fraction, cells),
        graph,
        paths,
    })
}
