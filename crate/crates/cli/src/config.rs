//! Experiment configuration: flat `key = value` lines grouped under
//! `[section]` headers.
//!
//! ```text
//! seed = 0
//! output = out
//!
//! [data]
//! national = national.csv
//! state = states.csv
//! flows = flows.csv
//!
//! [experiment]
//! level = national
//! models = RW, SARIMAX, SARIMA, MCP, VAR
//! h_max = 14
//! ```
//!
//! Relative paths are resolved against the directory holding the file.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ini::Ini;

use mortcast_core::evaluation::{ModelSettings, DEFAULT_H_MAX, DEFAULT_STEP};
use mortcast_core::mcp::McpConfig;
use mortcast_core::sarimax::Trend;
use mortcast_core::{Level, ModelKind, Region, SarimaxSpec, TransformKind};

use crate::error::{CliError, Result};

/// The states reported one by one in state-level runs.
pub const DEFAULT_REPORT_STATES: [&str; 6] = ["CA", "GA", "IL", "TX", "NY", "PA"];
pub const DEFAULT_ACF_LAGS: usize = 30;
pub const DEFAULT_EDGE_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub national_path: Option<PathBuf>,
    pub state_path: Option<PathBuf>,
    pub flows_path: Option<PathBuf>,
    pub level: Level,
    pub models: Vec<ModelKind>,
    pub settings: ModelSettings,
    /// Defaults to the level's split point.
    pub initial_train: Option<usize>,
    pub step: usize,
    pub h_max: usize,
    pub report_states: Vec<Region>,
    pub edge_fraction: f64,
    pub exclude_self_loops: bool,
    pub acf_max_lag: usize,
    /// Region for `inspect acf`; national by default.
    pub acf_region: Option<Region>,
    pub output: PathBuf,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            national_path: None,
            state_path: None,
            flows_path: None,
            level: Level::National,
            models: ModelKind::ALL.to_vec(),
            settings: ModelSettings::default(),
            initial_train: None,
            step: DEFAULT_STEP,
            h_max: DEFAULT_H_MAX,
            report_states: DEFAULT_REPORT_STATES
                .iter()
                .map(|c| Region::parse(c).expect("known state"))
                .collect(),
            edge_fraction: DEFAULT_EDGE_FRACTION,
            exclude_self_loops: false,
            acf_max_lag: DEFAULT_ACF_LAGS,
            acf_region: None,
            output: PathBuf::from("out"),
            seed: 0,
        }
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(invalid(format!("{key}: expected true or false, got `{v}`"))),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| invalid(format!("{key}: cannot parse `{v}`")))
}

fn parse_list(v: &str) -> Vec<String> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect()
}

fn parse_usizes(key: &str, v: &str, n: usize) -> Result<Vec<usize>> {
    let parts = parse_list(v);
    if parts.len() != n {
        return Err(invalid(format!(
            "{key}: expected {n} comma-separated integers, got `{v}`"
        )));
    }
    parts.iter().map(|p| parse_num(key, p)).collect()
}

pub fn parse_models(v: &str) -> Result<Vec<ModelKind>> {
    let mut out: Vec<ModelKind> = Vec::new();
    for name in parse_list(v) {
        let kind: ModelKind = name.parse().map_err(|e: mortcast_core::Error| invalid(e.to_string()))?;
        if !out.contains(&kind) {
            out.push(kind);
        }
    }
    Ok(out)
}

pub fn parse_level(v: &str) -> Result<Level> {
    v.parse().map_err(|e: mortcast_core::Error| invalid(e.to_string()))
}

fn parse_regions(key: &str, v: &str) -> Result<Vec<Region>> {
    parse_list(v)
        .iter()
        .map(|c| Region::parse(c).ok_or_else(|| invalid(format!("{key}: unknown region `{c}`"))))
        .collect()
}

fn parse_transform(key: &str, v: &str) -> Result<TransformKind> {
    match v.to_ascii_lowercase().as_str() {
        "identity" | "none" => Ok(TransformKind::Identity),
        "log1p" => Ok(TransformKind::Log1p),
        _ => Err(invalid(format!("{key}: expected identity or log1p, got `{v}`"))),
    }
}

fn transform_name(t: TransformKind) -> &'static str {
    match t {
        TransformKind::Log1p => "log1p",
        _ => "identity",
    }
}

fn parse_trend(key: &str, v: &str) -> Result<Trend> {
    match v.to_ascii_lowercase().as_str() {
        "constant" | "c" => Ok(Trend::Constant),
        "none" | "n" => Ok(Trend::None),
        _ => Err(invalid(format!("{key}: expected constant or none, got `{v}`"))),
    }
}

fn apply_sarimax_key(spec: &mut SarimaxSpec, section: &str, key: &str, v: &str) -> Result<()> {
    let full = format!("{section}.{key}");
    match key {
        "order" => {
            let o = parse_usizes(&full, v, 3)?;
            (spec.p, spec.d, spec.q) = (o[0], o[1], o[2]);
        }
        "seasonal_order" => {
            let o = parse_usizes(&full, v, 4)?;
            (spec.seasonal_p, spec.seasonal_d, spec.seasonal_q, spec.season) = (o[0], o[1], o[2], o[3]);
        }
        "trend" => spec.trend = parse_trend(&full, v)?,
        "transform" => spec.transform = parse_transform(&full, v)?,
        "exog" => spec.exog_names = parse_list(v),
        _ => return Err(invalid(format!("unknown key `{full}`"))),
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::parse(&text, base)
    }

    /// Parses configuration text; relative paths are joined onto `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let ini = Ini::load_from_str(text).map_err(|e| invalid(format!("config syntax: {e}")))?;
        let mut cfg = ExperimentConfig::default();
        let resolve = |v: &str| {
            let p = PathBuf::from(v);
            if p.is_absolute() {
                p
            } else {
                base.join(p)
            }
        };
        cfg.output = resolve("out");
        let mut sarima_set = false;
        // SARIMAX keys first so an unset SARIMA section can copy its orders.
        if let Some(props) = ini.section(Some("sarimax")) {
            for (k, v) in props.iter() {
                apply_sarimax_key(&mut cfg.settings.sarimax, "sarimax", k, v)?;
            }
        }
        cfg.settings.sarima = cfg.settings.sarimax.clone().with_exog(Vec::<String>::new());
        for (section, props) in ini.iter() {
            let section = section.unwrap_or("");
            for (k, v) in props.iter() {
                let full = if section.is_empty() {
                    k.to_string()
                } else {
                    format!("{section}.{k}")
                };
                match (section, k) {
                    ("", "seed") => cfg.seed = parse_num(&full, v)?,
                    ("", "output") => cfg.output = resolve(v),
                    ("data", "national") => cfg.national_path = Some(resolve(v)),
                    ("data", "state") => cfg.state_path = Some(resolve(v)),
                    ("data", "flows") => cfg.flows_path = Some(resolve(v)),
                    ("experiment", "level") => cfg.level = parse_level(v)?,
                    ("experiment", "models") => cfg.models = parse_models(v)?,
                    ("experiment", "initial_train") => cfg.initial_train = Some(parse_num(&full, v)?),
                    ("experiment", "step") => cfg.step = parse_num(&full, v)?,
                    ("experiment", "h_max") => cfg.h_max = parse_num(&full, v)?,
                    ("experiment", "refit_per_window") => cfg.settings.refit_per_window = parse_bool(&full, v)?,
                    ("experiment", "report_states") => cfg.report_states = parse_regions(&full, v)?,
                    ("sarimax", _) => {}
                    ("sarima", _) => {
                        sarima_set = true;
                        apply_sarimax_key(&mut cfg.settings.sarima, "sarima", k, v)?;
                    }
                    ("mcp", "exog") => cfg.settings.mcp_exog = parse_list(v),
                    ("mcp", "k") => cfg.settings.mcp.k = parse_num(&full, v)?,
                    ("mcp", "screen_size") => cfg.settings.mcp.screen_size = parse_num(&full, v)?,
                    ("mcp", "gamma") => cfg.settings.mcp.gamma = parse_num(&full, v)?,
                    ("mcp", "folds") => cfg.settings.mcp.folds = parse_num(&full, v)?,
                    ("mcp", "screen_target_lags") => cfg.settings.mcp.screen_target_lags = parse_bool(&full, v)?,
                    ("var", "exog") => cfg.settings.var_exog = parse_list(v),
                    ("var", "max_order") => cfg.settings.var_max_order = parse_num(&full, v)?,
                    ("graph", "fraction") => cfg.edge_fraction = parse_num(&full, v)?,
                    ("graph", "exclude_self_loops") => cfg.exclude_self_loops = parse_bool(&full, v)?,
                    ("inspect", "acf_max_lag") => cfg.acf_max_lag = parse_num(&full, v)?,
                    ("inspect", "region") => {
                        cfg.acf_region =
                            Some(Region::parse(v).ok_or_else(|| invalid(format!("{full}: unknown region `{v}`")))?)
                    }
                    _ => return Err(invalid(format!("unknown key `{full}`"))),
                }
            }
        }
        if sarima_set && !cfg.settings.sarima.exog_names.is_empty() {
            return Err(invalid(
                "sarima.exog: SARIMA takes no exogenous columns; use the sarimax section",
            ));
        }
        Ok(cfg)
    }

    /// Checks the invariants that do not need the data files.
    pub fn validate(&self) -> Result<()> {
        if self.models.is_empty() {
            return Err(invalid("no models selected"));
        }
        if !(1..=14).contains(&self.h_max) {
            return Err(invalid(format!("h_max must be in 1..=14, got {}", self.h_max)));
        }
        if self.step == 0 {
            return Err(invalid("step must be positive"));
        }
        if self.initial_train == Some(0) {
            return Err(invalid("initial_train must be positive"));
        }
        if self.settings.var_max_order == 0 {
            return Err(invalid("var.max_order must be positive"));
        }
        let mcp = &self.settings.mcp;
        if mcp.k == 0 || mcp.screen_size == 0 || mcp.folds < 2 || !(mcp.gamma > 1.0) {
            return Err(invalid(
                "mcp settings need k >= 1, screen_size >= 1, folds >= 2 and gamma > 1",
            ));
        }
        for spec in [&self.settings.sarimax, &self.settings.sarima] {
            spec.validate().map_err(|e| invalid(e.to_string()))?;
        }
        if !(self.edge_fraction > 0.0 && self.edge_fraction <= 1.0) {
            return Err(invalid(format!(
                "graph.fraction must be in (0, 1], got {}",
                self.edge_fraction
            )));
        }
        Ok(())
    }

    /// Checks that a configured data file is set and exists.
    pub fn require_path<'a>(&self, path: &'a Option<PathBuf>, key: &str) -> Result<&'a Path> {
        let p = path
            .as_deref()
            .ok_or_else(|| invalid(format!("data.{key} is not set")))?;
        if !p.is_file() {
            let e = std::io::Error::new(std::io::ErrorKind::NotFound, format!("data.{key} does not exist"));
            return Err(CliError::io(p)(e));
        }
        Ok(p)
    }

    pub fn initial_train(&self) -> usize {
        self.initial_train.unwrap_or_else(|| self.level.initial_train())
    }

    /// Canonical text form, parseable by [`ExperimentConfig::parse`].
    pub fn to_ini_string(&self) -> String {
        let mut s = String::new();
        let join = |v: &[String]| v.join(", ");
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "output = {}", self.output.display());
        s.push_str("\n[data]\n");
        for (key, p) in [
            ("national", &self.national_path),
            ("state", &self.state_path),
            ("flows", &self.flows_path),
        ] {
            if let Some(p) = path(p) {
                let _ = writeln!(s, "{key} = {p}");
            }
        }
        s.push_str("\n[experiment]\n");
        let level = match self.level {
            Level::National => "national",
            Level::State => "state",
        };
        let _ = writeln!(s, "level = {level}");
        let models: Vec<String> = self.models.iter().map(|m| m.label().to_string()).collect();
        let _ = writeln!(s, "models = {}", join(&models));
        if let Some(n) = self.initial_train {
            let _ = writeln!(s, "initial_train = {n}");
        }
        let _ = writeln!(s, "step = {}", self.step);
        let _ = writeln!(s, "h_max = {}", self.h_max);
        let _ = writeln!(s, "refit_per_window = {}", self.settings.refit_per_window);
        let states: Vec<String> = self.report_states.iter().map(|r| r.to_string()).collect();
        let _ = writeln!(s, "report_states = {}", join(&states));
        for (name, spec) in [("sarimax", &self.settings.sarimax), ("sarima", &self.settings.sarima)] {
            let _ = writeln!(s, "\n[{name}]");
            let _ = writeln!(s, "order = {}, {}, {}", spec.p, spec.d, spec.q);
            let _ = writeln!(
                s,
                "seasonal_order = {}, {}, {}, {}",
                spec.seasonal_p, spec.seasonal_d, spec.seasonal_q, spec.season
            );
            let trend = match spec.trend {
                Trend::Constant => "constant",
                Trend::None => "none",
            };
            let _ = writeln!(s, "trend = {trend}");
            let _ = writeln!(s, "transform = {}", transform_name(spec.transform));
            if name == "sarimax" {
                let _ = writeln!(s, "exog = {}", join(&spec.exog_names));
            }
        }
        let McpConfig {
            k,
            screen_size,
            gamma,
            folds,
            screen_target_lags,
        } = self.settings.mcp;
        let _ = writeln!(s, "\n[mcp]");
        let _ = writeln!(s, "exog = {}", join(&self.settings.mcp_exog));
        let _ = writeln!(
            s,
            "k = {k}\nscreen_size = {screen_size}\ngamma = {gamma}\nfolds = {folds}"
        );
        let _ = writeln!(s, "screen_target_lags = {screen_target_lags}");
        let _ = writeln!(s, "\n[var]");
        let _ = writeln!(s, "exog = {}", join(&self.settings.var_exog));
        let _ = writeln!(s, "max_order = {}", self.settings.var_max_order);
        let _ = writeln!(s, "\n[graph]");
        let _ = writeln!(s, "fraction = {}", self.edge_fraction);
        let _ = writeln!(s, "exclude_self_loops = {}", self.exclude_self_loops);
        let _ = writeln!(s, "\n[inspect]");
        let _ = writeln!(s, "acf_max_lag = {}", self.acf_max_lag);
        if let Some(r) = &self.acf_region {
            let _ = writeln!(s, "region = {r}");
        }
        s
    }
}
