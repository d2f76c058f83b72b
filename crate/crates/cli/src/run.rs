//! `mortcast run`: rolling evaluation of the configured models.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use chrono::Duration;
use log::info;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use mortcast_core::evaluation::{
    aggregate_states_excluding_failed, build_schedule, forecast_region, forecaster, render_report, score_region,
    HorizonScores, RegionForecasts, ReportFormat, RollingSchedule,
};
use mortcast_core::ingest::load_covid_csv;
use mortcast_core::{EvaluationReport, Level, PanelDataset, Region};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};

/// What a run produced.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub output: PathBuf,
    pub report: EvaluationReport,
    /// Per-state reports of a state-level run, in `report_states` order.
    pub state_reports: Vec<(Region, EvaluationReport)>,
    pub windows: usize,
    /// Models whose every window failed.
    pub failed_models: Vec<String>,
}

pub(crate) fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    std::fs::write(path, contents).map_err(CliError::io(path))
}

pub(crate) fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(CliError::io(path))?;
    Ok(format!("{:x}", Sha256::digest(&bytes)))
}

/// Runs `f` on a pool of `workers` threads, or on the global pool.
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(0) => Err(CliError::Validation("--workers must be positive".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Validation(format!("cannot start {n} workers: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

fn params_dump(rf: &RegionForecasts) -> String {
    let mut s = format!("# {} {}\n", rf.model, rf.region);
    for (i, w) in rf.windows.iter().enumerate() {
        let origin = rf.start_date + Duration::days(w.train_end as i64);
        let _ = writeln!(
            s,
            "\n[window {} train_end={} first_target={}]",
            i + 1,
            w.train_end,
            origin
        );
        match (&w.params, &w.error) {
            (_, Some(e)) => {
                let _ = writeln!(s, "excluded: {e}");
            }
            (Some(p), None) => {
                s.push_str(p);
                if !p.ends_with('\n') {
                    s.push('\n');
                }
            }
            (None, None) => s.push_str("parameters of window 1 reused\n"),
        }
    }
    s
}

fn load_level(cfg: &ExperimentConfig) -> Result<(PanelDataset, Option<PanelDataset>)> {
    let national_path = cfg.require_path(&cfg.national_path, "national")?;
    let national = load_covid_csv(national_path, Level::National).map_err(CliError::core("data-ingest"))?;
    let states = match cfg.level {
        Level::National => None,
        Level::State => {
            let p = cfg.require_path(&cfg.state_path, "state")?;
            Some(load_covid_csv(p, Level::State).map_err(CliError::core("data-ingest"))?)
        }
    };
    Ok((national, states))
}

fn schedule_for(cfg: &ExperimentConfig, len: usize) -> Result<RollingSchedule> {
    build_schedule(len, cfg.initial_train(), cfg.step, cfg.h_max).map_err(CliError::core("evaluation"))
}

fn all_failed(scores: &HorizonScores) -> bool {
    scores.windows > 0 && scores.excluded == scores.windows
}

/// Loads the data, evaluates every model and writes `report.csv`,
/// `report.txt`, parameter dumps under `params/` and `manifest.txt`.
pub fn run_experiment(cfg: &ExperimentConfig, workers: Option<usize>) -> Result<RunSummary> {
    cfg.validate()?;
    with_workers(workers, || run_inner(cfg))?
}

fn run_inner(cfg: &ExperimentConfig) -> Result<RunSummary> {
    let (national, states) = load_level(cfg)?;
    let out = &cfg.output;
    let params_dir = out.join("params");
    std::fs::create_dir_all(&params_dir).map_err(CliError::io(&params_dir))?;

    let mut report = EvaluationReport::new(cfg.h_max);
    let mut failed_models = Vec::new();
    let mut state_reports: Vec<(Region, EvaluationReport)> = cfg
        .report_states
        .iter()
        .map(|r| (r.clone(), EvaluationReport::new(cfg.h_max)))
        .collect();

    let schedule = match &states {
        None => schedule_for(cfg, national.len())?,
        Some(s) => schedule_for(cfg, s.len())?,
    };
    info!("{} rolling windows", schedule.windows.len());

    for &kind in &cfg.models {
        let model = forecaster(kind, &cfg.settings);
        let label = kind.label();
        info!("evaluating {label}");
        let scores = match &states {
            None => {
                let region = Region::national();
                let rf = forecast_region(
                    model.as_ref(),
                    &national,
                    &region,
                    &schedule,
                    kind.refits(&cfg.settings),
                )
                .map_err(CliError::core("evaluation"))?;
                write_file(&params_dir.join(format!("{label}.txt")), params_dump(&rf).as_bytes())?;
                score_region(
                    &rf,
                    national.target_values(&region).map_err(CliError::core("evaluation"))?,
                )
                .map_err(CliError::core("evaluation"))?
            }
            Some(sds) => {
                let per_state = sds
                    .regions()
                    .par_iter()
                    .map(|r| forecast_region(model.as_ref(), sds, r, &schedule, kind.refits(&cfg.settings)))
                    .collect::<mortcast_core::Result<Vec<_>>>()
                    .map_err(CliError::core("evaluation"))?;
                for rf in &per_state {
                    write_file(
                        &params_dir.join(format!("{label}_{}.txt", rf.region)),
                        params_dump(rf).as_bytes(),
                    )?;
                }
                for (region, rep) in state_reports.iter_mut() {
                    let Some(rf) = per_state.iter().find(|rf| &rf.region == region) else {
                        return Err(CliError::Validation(format!(
                            "report state {region} is not in the state file"
                        )));
                    };
                    let actual = sds.target_values(region).map_err(CliError::core("evaluation"))?;
                    let s = score_region(rf, actual).map_err(CliError::core("evaluation"))?;
                    rep.push(label, s).map_err(CliError::core("evaluation"))?;
                }
                let nat = national
                    .target(&Region::national())
                    .map_err(CliError::core("evaluation"))?;
                aggregate_states_excluding_failed(&per_state, &nat).map_err(CliError::core("evaluation"))?
            }
        };
        if all_failed(&scores) {
            failed_models.push(label.to_string());
        }
        report.push(label, scores).map_err(CliError::core("evaluation"))?;
    }

    let report_csv = out.join("report.csv");
    write_file(&report_csv, render_report(&report, ReportFormat::Csv).as_bytes())?;
    write_file(
        &out.join("report.txt"),
        render_report(&report, ReportFormat::AlignedText).as_bytes(),
    )?;
    if states.is_some() {
        for (region, rep) in &state_reports {
            write_file(
                &out.join(format!("report_{region}.csv")),
                render_report(rep, ReportFormat::Csv).as_bytes(),
            )?;
        }
    } else {
        state_reports.clear();
    }
    write_manifest(cfg, &out.join("manifest.txt"), &report_csv)?;
    Ok(RunSummary {
        output: out.clone(),
        report,
        state_reports,
        windows: schedule.windows.len(),
        failed_models,
    })
}

fn write_manifest(cfg: &ExperimentConfig, path: &Path, report: &Path) -> Result<()> {
    let mut s = format!("mortcast {}\n\n[data]\n", env!("CARGO_PKG_VERSION"));
    let inputs = [("national", &cfg.national_path), ("state", &cfg.state_path)];
    for (key, p) in inputs {
        if let Some(p) = p.as_deref().filter(|p| p.is_file()) {
            if key == "state" && cfg.level == Level::National {
                continue;
            }
            let _ = writeln!(s, "{key} = {} sha256:{}", p.display(), sha256_file(p)?);
        }
    }
    let _ = writeln!(s, "\n[outputs]\nreport.csv sha256:{}", sha256_file(report)?);
    let _ = writeln!(s, "\n[config]");
    s.push_str(&cfg.to_ini_string());
    write_file(path, s.as_bytes())
}
