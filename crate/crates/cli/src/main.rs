use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fairsel_cli::commands::{cmd_ablate, cmd_report, cmd_run, cmd_sweep, cmd_synth, Format};
use fairsel_cli::config::{parse_synth_spec, ExperimentConfig, KvDoc};
use fairsel_core::dataset::SyntheticSpec;

/// Fairness-aware paper selection: train a parity-regularized acceptance
/// scorer, select a slate, and evaluate diversity/utility gains.
#[derive(Parser)]
#[command(name = "fairsel", version, about)]
struct Args {
    #[command(subcommand)]
    command: Command,

    /// Configuration file (`key = value` lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the config's base seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override the config's output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for independent grid cells.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,

    /// Table output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset and write papers.csv / authors.csv.
    Synth,
    /// Train at one fairness setting, select a slate, report gains.
    Run,
    /// Lambda sweep with race-only and country-only fairness.
    Sweep,
    /// Combined-mode ablation over the lambda x weight grid.
    Ablate,
    /// Re-render tables and plots from stored results.
    Report {
        /// Directory produced by run, sweep or ablate.
        #[arg(long)]
        run_dir: PathBuf,
    },
}

fn experiment_config(args: &Args) -> Result<ExperimentConfig, fairsel_core::Error> {
    let (doc, base_dir) = match &args.config {
        Some(path) => (
            KvDoc::load(path)?,
            path.parent().map(PathBuf::from).unwrap_or_default(),
        ),
        None => (KvDoc::default(), PathBuf::from(".")),
    };
    let mut config = ExperimentConfig::from_doc(&doc, &base_dir)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(out) = &args.out {
        config.out_dir = out.clone();
    }
    Ok(config)
}

fn dispatch(args: &Args) -> Result<(), fairsel_core::Error> {
    match &args.command {
        Command::Synth => {
            let (spec, canonical) = match &args.config {
                Some(path) => {
                    let doc = KvDoc::load(path)?;
                    (parse_synth_spec(&doc)?, doc.canonical_text())
                }
                None => (SyntheticSpec::default(), String::new()),
            };
            let seed = args.seed.unwrap_or(42);
            let out = args.out.clone().unwrap_or_else(|| PathBuf::from("data"));
            let dir = cmd_synth(&spec, &canonical, seed, &out)?;
            println!("wrote synthetic dataset to {}", dir.display());
        }
        Command::Run => {
            let config = experiment_config(args)?;
            let dir = cmd_run(&config, args.format)?;
            println!("run results in {}", dir.display());
        }
        Command::Sweep => {
            let config = experiment_config(args)?;
            let dir = cmd_sweep(&config, args.jobs, args.format)?;
            println!("sweep results in {}", dir.display());
        }
        Command::Ablate => {
            let config = experiment_config(args)?;
            let dir = cmd_ablate(&config, args.jobs, args.format)?;
            println!("ablation results in {}", dir.display());
        }
        Command::Report { run_dir } => {
            cmd_report(run_dir, args.format)?;
            println!("re-rendered results in {}", run_dir.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(args) => args,
        Err(e) if e.use_stderr() => {
            // Bad flags or values are validation errors.
            eprint!("{e}");
            return ExitCode::from(1);
        }
        Err(e) => {
            // --help / --version.
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match dispatch(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
