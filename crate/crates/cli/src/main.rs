//! `pase` — run the switching-ensemble experiments from the command line.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use pase_core::bench::{render_reports, Defense, ExperimentConfig, ExperimentReport, Pipeline, ReportFormat};
use pase_core::data::write_csv;
use pase_core::PaseError;
use serde_json::json;

#[derive(Parser, Debug)]
#[command(
    name = "pase",
    version,
    about = "Switching-ensemble defense against membership inference"
)]
struct Cli {
    #[command(flatten)]
    global: Global,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Experiment config (JSON). Without one, the built-in desk-scale blobs
    /// setup is used.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the config's master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Artifact directory; finished stages are cached here and reused.
    #[arg(long, global = true, env = "PASE_OUT_DIR")]
    out: Option<PathBuf>,

    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write the configured dataset as CSV (features..., label).
    GenData {
        #[arg(long)]
        output: PathBuf,
    },
    /// Train the undefended target model.
    TrainBaseline,
    /// Train the switching ensemble.
    TrainPase,
    /// Train the teacher ensemble and its student.
    TrainPate,
    /// Train shadow and attack models and attack the chosen targets.
    Attack {
        #[arg(long, value_enum, default_values_t = [Target::Baseline, Target::Pase, Target::Pate])]
        target: Vec<Target>,
    },
    /// Run the whole experiment and print the tables.
    Run {
        #[arg(long, default_value = "markdown")]
        format: String,
        /// Also write the JSON report here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Render saved JSON reports.
    Report {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, default_value = "markdown")]
        format: String,
        /// Write to a file instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Target {
    Baseline,
    Pase,
    Pate,
}

impl From<Target> for Defense {
    fn from(t: Target) -> Self {
        match t {
            Target::Baseline => Defense::Baseline,
            Target::Pase => Defense::Pase,
            Target::Pate => Defense::Pate,
        }
    }
}

fn load_config(g: &Global) -> Result<ExperimentConfig, PaseError> {
    let mut cfg = match &g.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::desk_blobs(0),
    };
    if let Some(seed) = g.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &g.out {
        cfg.output_dir = Some(out.clone());
    }
    Ok(cfg)
}

fn write_file(path: &Path, text: &str) -> Result<(), PaseError> {
    fs::write(path, text).map_err(|e| PaseError::io(path, e))
}

fn print_json(value: serde_json::Value) -> Result<(), PaseError> {
    println!("{}", serde_json::to_string_pretty(&value)?);
    Ok(())
}

fn run(cli: Cli) -> Result<(), PaseError> {
    if let Command::Report { inputs, format, output } = &cli.command {
        let format: ReportFormat = format.parse()?;
        let reports = inputs
            .iter()
            .map(|p| {
                let text = fs::read_to_string(p).map_err(|e| PaseError::io(p, e))?;
                serde_json::from_str::<ExperimentReport>(&text).map_err(|e| PaseError::format(p, None, e.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let text = render_reports(&reports, format)?;
        return match output {
            Some(path) => write_file(path, &text),
            None => {
                print!("{text}");
                Ok(())
            }
        };
    }

    let cfg = load_config(&cli.global)?;
    info!("config {} (hash {})", cfg.name, cfg.hash());
    let pipeline = Pipeline::new(cfg)?;
    if let Some(store) = pipeline.store() {
        info!("artifacts in {}", store.root().display());
    }

    match cli.command {
        Command::GenData { output } => {
            let data = pipeline.dataset()?;
            write_csv(data, &output)?;
            print_json(json!({
                "path": output,
                "samples": data.len(),
                "dim": data.dim(),
                "classes": data.class_count(),
            }))
        }
        Command::TrainBaseline => {
            let (_, t) = pipeline.baseline()?;
            print_json(json!({
                "model": "baseline",
                "train_seconds": t.as_secs_f64(),
                "test_accuracy": pipeline.utility(Defense::Baseline)?,
            }))
        }
        Command::TrainPase => {
            let (ens, t) = pipeline.pase()?;
            print_json(json!({
                "model": "pase",
                "k": ens.k(),
                "fold_sizes": ens.folds().fold_sizes(),
                "train_seconds": t.as_secs_f64(),
                "test_accuracy": pipeline.utility(Defense::Pase)?,
            }))
        }
        Command::TrainPate => {
            let (p, t) = pipeline.pate()?;
            print_json(json!({
                "model": "pate",
                "teachers": p.teachers.teachers.len(),
                "student_pool": p.student_pool_ids.len(),
                "train_seconds": t.as_secs_f64(),
                "test_accuracy": pipeline.utility(Defense::Pate)?,
            }))
        }
        Command::Attack { target } => {
            let mut results = serde_json::Map::new();
            for t in target {
                let d = Defense::from(t);
                results.insert(d.name().into(), serde_json::to_value(pipeline.attack_report(d)?)?);
            }
            print_json(results.into())
        }
        Command::Run { format, report } => {
            let format: ReportFormat = format.parse()?;
            let r = pipeline.run()?;
            if let Some(path) = report {
                write_file(&path, &serde_json::to_string_pretty(&r)?)?;
            }
            print!("{}", render_reports(std::slice::from_ref(&r), format)?);
            Ok(())
        }
        Command::Report { .. } => unreachable!("handled above"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // The message already embeds the stage tag and the cause.
            eprintln!("error: {e}");
            let root = match &e {
                PaseError::Stage { source, .. } => source.as_ref(),
                other => other,
            };
            match root {
                PaseError::Usage(_) | PaseError::Config(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
