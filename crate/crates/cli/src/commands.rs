//! The five subcommands: synth, run, sweep, ablate, report.
//!
//! Each command writes a self-contained output directory: a manifest with
//! the config hash and seeds, machine-readable JSON results, the requested
//! table rendering, and (for sweeps) SVG plots. Re-running with the same
//! config and seed reproduces every file byte-for-byte.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use fairsel_core::dataset::{write_csv, SyntheticSpec};
use fairsel_core::metrics::GainReport;
use fairsel_core::nn::{save_checkpoint, Checkpoint};
use fairsel_core::{Error, Result};

use crate::config::ExperimentConfig;
use crate::experiment::{
    ablate_cells, ablate_row, attrs_for_mode, evaluate, execute_baseline_runs, execute_runs,
    prepare, run_cells, sweep_cells, sweep_row, AblateRow, CellOutcome, RunArtifacts, SweepRow,
    BASELINE_DESCRIPTION,
};
use crate::plot::line_plot;
use crate::report::{
    ablate_csv, config_hash, ensure_dir, gain_report_csv, manifest_path, read_json, sweep_csv,
    sweep_series, write_json, write_text, Manifest, VERSION,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

fn manifest(command: &str, config_canonical: &str, base_seed: u64, n_runs: usize) -> Manifest {
    Manifest {
        command: command.to_string(),
        version: VERSION.to_string(),
        config_hash: config_hash(config_canonical),
        base_seed,
        run_seeds: (0..n_runs as u64).map(|i| base_seed + i).collect(),
        baseline: BASELINE_DESCRIPTION.to_string(),
        errors: Vec::new(),
    }
}

/// Generate a synthetic dataset and write `papers.csv` / `authors.csv`.
pub fn cmd_synth(
    spec: &SyntheticSpec,
    config_canonical: &str,
    seed: u64,
    out_dir: &Path,
) -> Result<PathBuf> {
    let dataset = fairsel_core::dataset::generate_synthetic(spec, seed)?;
    ensure_dir(out_dir)?;
    write_csv(
        &dataset,
        &out_dir.join("papers.csv"),
        &out_dir.join("authors.csv"),
    )?;
    let mut doc = manifest("synth", config_canonical, seed, 1);
    doc.baseline = String::new();
    write_json(&manifest_path(out_dir), &doc)?;
    write_json(&out_dir.join("spec.json"), spec)?;
    Ok(out_dir.to_path_buf())
}

fn save_run_artifacts(
    dir: &Path,
    tag: &str,
    runs: &[RunArtifacts],
    base_seed: u64,
    hash: &str,
) -> Result<()> {
    ensure_dir(dir)?;
    for (i, run) in runs.iter().enumerate() {
        let checkpoint = Checkpoint {
            model: run.model.clone(),
            optimizer: None,
            seed: base_seed + i as u64,
            config_hash: hash.to_string(),
        };
        save_checkpoint(&dir.join(format!("{tag}_run{i}.model.json")), &checkpoint)?;
        write_json(
            &dir.join(format!("{tag}_run{i}.history.json")),
            &run.history,
        )?;
        write_json(
            &dir.join(format!("{tag}_run{i}.selection.json")),
            &run.selection,
        )?;
    }
    Ok(())
}

/// One experiment at the configured fairness setting, evaluated against the
/// seed-paired baseline.
pub fn cmd_run(config: &ExperimentConfig, format: Format) -> Result<PathBuf> {
    let out_dir = config.out_dir.clone();
    ensure_dir(&out_dir)?;
    let data = prepare(config)?;
    let baseline = execute_baseline_runs(&data, config)?;
    let fairness = config.fairness(config.mode, config.lambda, config.w_race, config.w_country);
    let fair = execute_runs(&data, config, fairness)?;
    let report = evaluate(&data, &fair, &baseline, &attrs_for_mode(config.mode))?;

    let doc = manifest("run", &config.canonical, config.seed, config.n_runs);
    write_json(&manifest_path(&out_dir), &doc)?;
    write_json(&out_dir.join("report.json"), &report)?;
    if format == Format::Csv {
        write_text(&out_dir.join("report.csv"), &gain_report_csv(&report))?;
    }
    let runs_dir = out_dir.join("runs");
    save_run_artifacts(&runs_dir, "fair", &fair, config.seed, &doc.config_hash)?;
    save_run_artifacts(
        &runs_dir,
        "baseline",
        &baseline,
        config.seed,
        &doc.config_hash,
    )?;
    Ok(out_dir)
}

/// Stored sweep results: rows plus the full per-cell reports.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepDoc {
    pub rows: Vec<SweepRow>,
    pub reports: Vec<CellReport>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellReport {
    pub mode: String,
    pub lambda: f64,
    pub w_race: f64,
    pub w_country: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<GainReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

fn cell_report(outcome: &CellOutcome) -> CellReport {
    CellReport {
        mode: outcome.cell.mode.to_string(),
        lambda: outcome.cell.lambda,
        w_race: outcome.cell.w_race,
        w_country: outcome.cell.w_country,
        report: outcome.report.as_ref().ok().cloned(),
        error: outcome.report.as_ref().err().cloned(),
    }
}

fn write_sweep_outputs(out_dir: &Path, doc: &SweepDoc, format: Format) -> Result<()> {
    write_json(&out_dir.join("sweep.json"), doc)?;
    if format == Format::Csv {
        write_text(&out_dir.join("sweep.csv"), &sweep_csv(&doc.rows))?;
    }
    let plots = out_dir.join("plots");
    ensure_dir(&plots)?;
    for (name, label, extract) in [
        (
            "sweep_macro_gain.svg",
            "macro gain (%)",
            (|r: &SweepRow| r.macro_gain) as fn(&SweepRow) -> Option<f64>,
        ),
        ("sweep_micro_gain.svg", "micro gain (%)", |r: &SweepRow| {
            r.micro_gain
        }),
        (
            "sweep_utility_gain.svg",
            "utility gain (%)",
            |r: &SweepRow| r.utility_gain,
        ),
    ] {
        let series = sweep_series(&doc.rows, extract);
        let title = label.trim_end_matches(" (%)");
        write_text(
            &plots.join(name),
            &line_plot(&format!("{title} vs lambda"), "lambda", label, &series),
        )?;
    }
    Ok(())
}

/// Lambda sweep: race-only and country-only training across the grid.
pub fn cmd_sweep(config: &ExperimentConfig, jobs: usize, format: Format) -> Result<PathBuf> {
    let out_dir = config.out_dir.clone();
    ensure_dir(&out_dir)?;
    let data = prepare(config)?;
    let baseline = execute_baseline_runs(&data, config)?;
    let cells = sweep_cells(config);
    let outcomes = run_cells(&data, config, &baseline, &cells, jobs);

    let rows: Vec<SweepRow> = outcomes
        .iter()
        .map(|o| sweep_row(&o.cell, &o.report))
        .collect();
    let doc = SweepDoc {
        rows,
        reports: outcomes.iter().map(cell_report).collect(),
    };
    let mut man = manifest("sweep", &config.canonical, config.seed, config.n_runs);
    man.errors = doc
        .reports
        .iter()
        .filter_map(|r| {
            r.error
                .as_ref()
                .map(|e| format!("{} lambda={}: {e}", r.mode, r.lambda))
        })
        .collect();
    write_json(&manifest_path(&out_dir), &man)?;
    write_sweep_outputs(&out_dir, &doc, format)?;
    Ok(out_dir)
}

/// Stored ablation results.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AblateDoc {
    pub rows: Vec<AblateRow>,
    pub reports: Vec<CellReport>,
}

fn write_ablate_outputs(out_dir: &Path, doc: &AblateDoc, format: Format) -> Result<()> {
    write_json(&out_dir.join("ablate.json"), doc)?;
    if format == Format::Csv {
        write_text(&out_dir.join("ablate.csv"), &ablate_csv(&doc.rows))?;
    }
    Ok(())
}

/// Combined-mode ablation over lambda x (w_race, w_country).
pub fn cmd_ablate(config: &ExperimentConfig, jobs: usize, format: Format) -> Result<PathBuf> {
    let out_dir = config.out_dir.clone();
    ensure_dir(&out_dir)?;
    let data = prepare(config)?;
    let baseline = execute_baseline_runs(&data, config)?;
    let cells = ablate_cells(config);
    let outcomes = run_cells(&data, config, &baseline, &cells, jobs);

    let rows: Vec<AblateRow> = outcomes
        .iter()
        .map(|o| ablate_row(&o.cell, &o.report))
        .collect();
    let doc = AblateDoc {
        rows,
        reports: outcomes.iter().map(cell_report).collect(),
    };
    let mut man = manifest("ablate", &config.canonical, config.seed, config.n_runs);
    man.errors = doc
        .reports
        .iter()
        .filter_map(|r| {
            r.error.as_ref().map(|e| {
                format!(
                    "combined lambda={} w_race={} w_country={}: {e}",
                    r.lambda, r.w_race, r.w_country
                )
            })
        })
        .collect();
    write_json(&manifest_path(&out_dir), &man)?;
    write_ablate_outputs(&out_dir, &doc, format)?;
    Ok(out_dir)
}

/// Re-render tables and plots from a stored run directory.
pub fn cmd_report(run_dir: &Path, format: Format) -> Result<()> {
    let mut rendered = false;
    let sweep_path = run_dir.join("sweep.json");
    if sweep_path.exists() {
        let doc: SweepDoc = read_json(&sweep_path)?;
        write_sweep_outputs(run_dir, &doc, format)?;
        rendered = true;
    }
    let ablate_path = run_dir.join("ablate.json");
    if ablate_path.exists() {
        let doc: AblateDoc = read_json(&ablate_path)?;
        write_ablate_outputs(run_dir, &doc, format)?;
        rendered = true;
    }
    let report_path = run_dir.join("report.json");
    if report_path.exists() {
        let report: GainReport = read_json(&report_path)?;
        if format == Format::Csv {
            write_text(&run_dir.join("report.csv"), &gain_report_csv(&report))?;
        }
        rendered = true;
    }
    if !rendered {
        return Err(Error::Invalid(format!(
            "no stored results (sweep.json, ablate.json or report.json) in {}",
            run_dir.display()
        )));
    }
    Ok(())
}
