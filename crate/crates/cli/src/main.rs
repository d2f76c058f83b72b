use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mortcast_cli::config::{parse_level, parse_models};
use mortcast_cli::inspect::{inspect_acf, inspect_adjacency};
use mortcast_cli::synth::write_synthetic;
use mortcast_cli::{run_experiment, CliError, ExperimentConfig, Result};
use mortcast_core::evaluation::{render_report, ReportFormat};
use mortcast_core::Region;

#[derive(Parser)]
#[command(
    name = "mortcast",
    version,
    about = "Rolling-window evaluation of COVID-19 mortality forecasters"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalArgs {
    /// Experiment configuration file (INI-style `key = value` with sections).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// `national` or `state`.
    #[arg(long, global = true)]
    level: Option<String>,
    /// Comma-separated subset of RW, SARIMA, SARIMAX, MCP, VAR.
    #[arg(long, global = true)]
    models: Option<String>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to the number of processors.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the configured models on rolling windows.
    Run,
    /// Write diagnostic artifacts.
    Inspect {
        #[command(subcommand)]
        what: Inspect,
    },
    /// Write a synthetic dataset and a config that points at it.
    Synth {
        /// Target directory.
        dir: PathBuf,
        /// Comma-separated state codes.
        #[arg(long, default_value = "CA,GA,IL,TX,NY,PA")]
        states: String,
    },
}

#[derive(Subcommand)]
enum Inspect {
    /// Autocorrelation of the daily death series, `lag,acf` CSV.
    Acf,
    /// Binary, corrected and normalized mobility adjacency matrices.
    Adjacency,
}

fn load_config(g: &GlobalArgs) -> Result<ExperimentConfig> {
    let mut cfg = match &g.config {
        Some(p) => ExperimentConfig::from_file(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(v) = &g.level {
        cfg.level = parse_level(v)?;
    }
    if let Some(v) = &g.models {
        cfg.models = parse_models(v)?;
    }
    if let Some(v) = &g.out {
        cfg.output = v.clone();
    }
    if let Some(v) = g.seed {
        cfg.seed = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<()> {
    let g = &cli.global;
    match cli.command {
        Command::Run => {
            let cfg = load_config(g)?;
            let summary = run_experiment(&cfg, g.workers)?;
            print!("{}", render_report(&summary.report, ReportFormat::AlignedText));
            for (region, rep) in &summary.state_reports {
                println!("\n{region}");
                print!("{}", render_report(rep, ReportFormat::AlignedText));
            }
            println!("\nwrote {}", summary.output.display());
            if !summary.failed_models.is_empty() {
                eprintln!("error: every window failed for {}", summary.failed_models.join(", "));
                std::process::exit(3);
            }
        }
        Command::Inspect { what: Inspect::Acf } => {
            let out = inspect_acf(&load_config(g)?)?;
            println!(
                "acf of {} up to lag {} written to {}",
                out.region,
                out.values.len() - 1,
                out.path.display()
            );
        }
        Command::Inspect {
            what: Inspect::Adjacency,
        } => {
            let out = inspect_adjacency(&load_config(g)?)?;
            println!(
                "{} regions, {} ones (expected {}), rank {} before and {} after correction",
                out.graph.binary.regions.len(),
                out.ones,
                out.expected_ones,
                out.graph.binary.rank,
                out.graph.corrected.rank
            );
            for p in &out.paths {
                println!("wrote {}", p.display());
            }
        }
        Command::Synth { dir, states } => {
            let states = states
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|c| Region::parse(c).ok_or_else(|| CliError::Validation(format!("unknown state `{c}`"))))
                .collect::<Result<Vec<_>>>()?;
            let path = write_synthetic(&dir, &states, g.seed.unwrap_or(0))?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
