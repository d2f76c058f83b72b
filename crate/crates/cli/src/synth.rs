//! `mortcast synth`: a synthetic dataset in the loader's layout plus a
//! matching configuration, for trying the tool without the published data.

use std::path::{Path, PathBuf};

use mortcast_core::synthetic::{synthetic_covid, synthetic_flows, write_flows_csv};
use mortcast_core::{Level, Region};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::run::write_file;

const FLOW_DAYS: usize = 28;

/// Writes `national.csv`, `states.csv`, `flows.csv` and `config.ini` into `dir`.
pub fn write_synthetic(dir: &Path, states: &[Region], seed: u64) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    let data = synthetic_covid(states, seed).map_err(CliError::core("synthetic"))?;
    data.national
        .write_csv(dir.join("national.csv"))
        .map_err(CliError::core("synthetic"))?;
    data.states
        .write_csv(dir.join("states.csv"))
        .map_err(CliError::core("synthetic"))?;
    let flows = synthetic_flows(states, Level::State.start_date(), FLOW_DAYS, seed);
    write_flows_csv(dir.join("flows.csv"), &flows).map_err(CliError::core("synthetic"))?;

    let cfg = ExperimentConfig {
        national_path: Some("national.csv".into()),
        state_path: Some("states.csv".into()),
        flows_path: Some("flows.csv".into()),
        report_states: states.to_vec(),
        output: "out".into(),
        seed,
        ..ExperimentConfig::default()
    };
    let path = dir.join("config.ini");
    write_file(&path, cfg.to_ini_string().as_bytes())?;
    Ok(path)
}
