//! Command-line front end for the nowcasting pipeline.

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};
use ghg_nowcast::nowcast::{execute, ConfigOverrides, Stage};
use ghg_nowcast::{Error, PipelineConfig, Sector};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "ghg-nowcast", version, about = "Daily nowcasts of annual sector emissions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate the manifest and write the cleaned source series.
    Ingest(Common),
    /// Write the indicator series for each sector.
    Indicators(Common),
    /// Run the repeated cross-validation study and write its statistics.
    Study(Common),
    /// Run the study and write the selection outcome.
    Select(Common),
    /// Refit the selected model and write daily estimates.
    Nowcast(Common),
    /// Write the outlier, inter-annual, correlation and slope reports.
    Analyze(Common),
    /// Run every stage and write all reports.
    Run(Common),
}

#[derive(Args)]
struct Common {
    /// Pipeline config file.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Restrict to one sector (repeatable).
    #[arg(long = "sector", value_name = "NAME")]
    sectors: Vec<Sector>,
    /// Master seed, overriding the config.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Reference date (YYYY-MM-DD); defaults to the config value, then today.
    #[arg(long, value_name = "DATE")]
    as_of: Option<NaiveDate>,
    /// Output directory, overriding the config.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

impl Command {
    fn split(self) -> (Stage, Common) {
        match self {
            Command::Ingest(c) => (Stage::Ingest, c),
            Command::Indicators(c) => (Stage::Indicators, c),
            Command::Study(c) => (Stage::Study, c),
            Command::Select(c) => (Stage::Select, c),
            Command::Nowcast(c) => (Stage::Nowcast, c),
            Command::Analyze(c) => (Stage::Analyze, c),
            Command::Run(c) => (Stage::Run, c),
        }
    }
}

fn config_has_as_of(path: &std::path::Path) -> bool {
    std::fs::read_to_string(path)
        .ok()
        .and_then(|t| t.parse::<toml::Table>().ok())
        .is_some_and(|t| t.contains_key("as_of"))
}

fn load(c: &Common) -> Result<PipelineConfig, Error> {
    let as_of = c
        .as_of
        .or_else(|| (!config_has_as_of(&c.config)).then(|| chrono::Local::now().date_naive()));
    let overrides = ConfigOverrides {
        seed: c.seed,
        as_of,
        sectors: (!c.sectors.is_empty()).then(|| c.sectors.clone()),
        output_dir: c.out.clone(),
    };
    PipelineConfig::load_with(&c.config, &overrides)
}

fn report(e: &Error) {
    match e.stage() {
        Some(_) => eprintln!("error: {e}"),
        None => eprintln!("error: config stage: {e}"),
    }
}

fn main() -> ExitCode {
    let (stage, common) = Cli::parse().command.split();
    let config = match load(&common) {
        Ok(c) => c,
        Err(e) => {
            report(&e);
            return ExitCode::from(2);
        }
    };
    match execute(&config, stage) {
        Ok(dir) => {
            println!("{}", dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            report(&e);
            ExitCode::FAILURE
        }
    }
}
