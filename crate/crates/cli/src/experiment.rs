//! End-to-end experiment orchestration: data preparation, seed-paired
//! training of fair and demographic-blind models, slate selection over the
//! full candidate pool, and gain evaluation.
//!
//! Every gain is measured against the demographic-blind baseline: the same
//! architecture trained with `lambda = 0` on the same features and the same
//! per-run seed. Grid cells (mode x lambda x weights) are independent and
//! can execute on worker threads; results are assembled in grid order so
//! output files never depend on scheduling.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Mutex;

use fairsel_core::dataset::{
    generate_synthetic, load_csv, preprocess, stratified_split, Dataset, FeatureMatrix, PaperId,
    PaperRecord, ProtectedAttr,
};
use fairsel_core::losses::{FairnessConfig, FairnessMode};
use fairsel_core::metrics::{compute_run_gains, CareerWeights, GainReport, RunGains, Summary};
use fairsel_core::selector::{score_all, select_top, SelectionResult};
use fairsel_core::trainer::{run_repeated, TrainHistory};
use fairsel_core::{Error, ModelParams, Result};

use crate::config::{DataSource, ExperimentConfig};

pub const BASELINE_DESCRIPTION: &str = "demographic-blind baseline (lambda = 0, seed-paired runs)";

/// Dataset and feature matrices shared by every cell of an experiment.
pub struct PreparedData {
    pub dataset: Dataset,
    /// Fitted on the full dataset; selection scores the full pool.
    pub fm_full: FeatureMatrix,
    pub train_fm: FeatureMatrix,
    pub val_fm: FeatureMatrix,
    pub weights: CareerWeights,
}

impl PreparedData {
    pub fn paper(&self, id: &PaperId) -> Result<&PaperRecord> {
        self.dataset
            .paper(id)
            .ok_or_else(|| Error::Invalid(format!("selection references unknown paper {id}")))
    }
}

/// Load or generate the dataset, encode features, and split.
pub fn prepare(config: &ExperimentConfig) -> Result<PreparedData> {
    let dataset = match &config.source {
        DataSource::Csv { papers, authors } => load_csv(papers, authors)?,
        DataSource::Synthetic(spec) => generate_synthetic(spec, config.seed)?,
    };
    if config.n_select > dataset.len() {
        return Err(Error::Invalid(format!(
            "n_select {} exceeds dataset size {}",
            config.n_select,
            dataset.len()
        )));
    }
    let attrs: BTreeSet<ProtectedAttr> = [ProtectedAttr::Race, ProtectedAttr::Country]
        .into_iter()
        .collect();
    let fm_full = preprocess(&dataset, &attrs)?;
    for warning in &fm_full.warnings {
        eprintln!("warning: {warning}");
    }
    let (train_fm, val_fm) = stratified_split(&fm_full, config.split_ratio, config.seed)?;
    let weights = CareerWeights::from_dataset(&dataset.papers)?;
    Ok(PreparedData {
        dataset,
        fm_full,
        train_fm,
        val_fm,
        weights,
    })
}

/// One trained model with its history and full-pool selection.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub model: ModelParams,
    pub history: TrainHistory,
    pub selection: SelectionResult,
}

/// Train `n_runs` models under `fairness` and select a slate with each.
pub fn execute_runs(
    data: &PreparedData,
    config: &ExperimentConfig,
    fairness: FairnessConfig,
) -> Result<Vec<RunArtifacts>> {
    let train_config = config.train_config(fairness);
    run_repeated(&data.train_fm, &data.val_fm, &train_config, config.n_runs)?
        .into_iter()
        .map(|(model, history)| {
            let scores = score_all(&model, &data.fm_full)?;
            let selection = select_top(&scores, config.n_select)?;
            Ok(RunArtifacts {
                model,
                history,
                selection,
            })
        })
        .collect()
}

/// Train the demographic-blind baselines (`lambda = 0`), seed-paired with
/// the fair runs.
pub fn execute_baseline_runs(
    data: &PreparedData,
    config: &ExperimentConfig,
) -> Result<Vec<RunArtifacts>> {
    let fairness = config.fairness(config.mode, 0.0, config.w_race, config.w_country);
    execute_runs(data, config, fairness)
}

pub fn attrs_for_mode(mode: FairnessMode) -> Vec<ProtectedAttr> {
    match mode {
        FairnessMode::RaceOnly => vec![ProtectedAttr::Race],
        FairnessMode::CountryOnly => vec![ProtectedAttr::Country],
        FairnessMode::Combined => vec![ProtectedAttr::Race, ProtectedAttr::Country],
    }
}

fn selected_papers<'d>(
    data: &'d PreparedData,
    selection: &SelectionResult,
) -> Result<Vec<&'d PaperRecord>> {
    selection.selected.iter().map(|id| data.paper(id)).collect()
}

/// Pair fair run `i` with baseline run `i` and aggregate the gains.
pub fn evaluate(
    data: &PreparedData,
    fair: &[RunArtifacts],
    baseline: &[RunArtifacts],
    attrs: &[ProtectedAttr],
) -> Result<GainReport> {
    if fair.len() != baseline.len() {
        return Err(Error::Invalid(format!(
            "{} fair runs vs {} baseline runs",
            fair.len(),
            baseline.len()
        )));
    }
    let runs: Vec<RunGains> = fair
        .iter()
        .zip(baseline)
        .map(|(f, b)| {
            let selected = selected_papers(data, &f.selection)?;
            let base = selected_papers(data, &b.selection)?;
            compute_run_gains(&selected, &base, &data.dataset.papers, attrs, &data.weights)
        })
        .collect::<Result<_>>()?;
    GainReport::aggregate(attrs, BASELINE_DESCRIPTION, runs)
}

/// One cell of a sweep or ablation grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub mode: FairnessMode,
    pub lambda: f64,
    pub w_race: f64,
    pub w_country: f64,
}

#[derive(Debug, Clone)]
pub struct CellOutcome {
    pub cell: Cell,
    pub report: std::result::Result<GainReport, String>,
}

/// Run every cell against the shared baselines, optionally on `jobs`
/// worker threads. Outcomes keep grid order; a failed cell is recorded as
/// an error outcome rather than aborting the grid.
pub fn run_cells(
    data: &PreparedData,
    config: &ExperimentConfig,
    baselines: &[RunArtifacts],
    cells: &[Cell],
    jobs: usize,
) -> Vec<CellOutcome> {
    let jobs = jobs.max(1).min(cells.len().max(1));
    let run_one = |cell: &Cell| -> std::result::Result<GainReport, String> {
        let fairness = config.fairness(cell.mode, cell.lambda, cell.w_race, cell.w_country);
        let fair = execute_runs(data, config, fairness).map_err(|e| e.to_string())?;
        evaluate(data, &fair, baselines, &attrs_for_mode(cell.mode)).map_err(|e| e.to_string())
    };

    if jobs == 1 {
        return cells
            .iter()
            .map(|cell| CellOutcome {
                cell: *cell,
                report: run_one(cell),
            })
            .collect();
    }

    let mut slots: Vec<Option<CellOutcome>> = vec![None; cells.len()];
    let next = Mutex::new(0usize);
    let results = Mutex::new(&mut slots);
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let idx = {
                    let mut guard = next.lock().expect("index lock");
                    let idx = *guard;
                    if idx >= cells.len() {
                        return;
                    }
                    *guard += 1;
                    idx
                };
                let outcome = CellOutcome {
                    cell: cells[idx],
                    report: run_one(&cells[idx]),
                };
                results.lock().expect("result lock")[idx] = Some(outcome);
            });
        }
    });
    slots
        .into_iter()
        .map(|slot| slot.expect("every cell executed"))
        .collect()
}

/// A line of the sweep table; `None` values render as `NA`.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub attr: String,
    pub macro_gain: Option<f64>,
    pub macro_std: Option<f64>,
    pub micro_gain: Option<f64>,
    pub micro_std: Option<f64>,
    pub utility_gain: Option<f64>,
    pub utility_std: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

fn summary_pair(summary: &Option<Summary>) -> (Option<f64>, Option<f64>) {
    match summary {
        Some(s) => (Some(s.mean), Some(s.std)),
        None => (None, None),
    }
}

pub fn sweep_row(cell: &Cell, outcome: &std::result::Result<GainReport, String>) -> SweepRow {
    let attr = attrs_for_mode(cell.mode)[0].to_string();
    match outcome {
        Ok(report) => {
            let (macro_gain, macro_std) = summary_pair(&report.macro_gain[&attr]);
            let (micro_gain, micro_std) = summary_pair(&report.micro_gain[&attr]);
            SweepRow {
                lambda: cell.lambda,
                attr,
                macro_gain,
                macro_std,
                micro_gain,
                micro_std,
                utility_gain: Some(report.utility_gain.mean),
                utility_std: Some(report.utility_gain.std),
                error: None,
            }
        }
        Err(message) => SweepRow {
            lambda: cell.lambda,
            attr,
            macro_gain: None,
            macro_std: None,
            micro_gain: None,
            micro_std: None,
            utility_gain: None,
            utility_std: None,
            error: Some(message.clone()),
        },
    }
}

/// A line of the ablation table.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct AblateRow {
    pub lambda: f64,
    pub w_race: f64,
    pub w_country: f64,
    pub country_macro_gain: Option<f64>,
    pub country_macro_std: Option<f64>,
    pub country_micro_gain: Option<f64>,
    pub country_micro_std: Option<f64>,
    pub race_macro_gain: Option<f64>,
    pub race_macro_std: Option<f64>,
    pub race_micro_gain: Option<f64>,
    pub race_micro_std: Option<f64>,
    pub utility_gain: Option<f64>,
    pub utility_std: Option<f64>,
    pub diversity_gain: Option<f64>,
    pub diversity_std: Option<f64>,
    pub f_measure: Option<f64>,
    pub f_std: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

pub fn ablate_row(cell: &Cell, outcome: &std::result::Result<GainReport, String>) -> AblateRow {
    let mut row = AblateRow {
        lambda: cell.lambda,
        w_race: cell.w_race,
        w_country: cell.w_country,
        country_macro_gain: None,
        country_macro_std: None,
        country_micro_gain: None,
        country_micro_std: None,
        race_macro_gain: None,
        race_macro_std: None,
        race_micro_gain: None,
        race_micro_std: None,
        utility_gain: None,
        utility_std: None,
        diversity_gain: None,
        diversity_std: None,
        f_measure: None,
        f_std: None,
        error: None,
    };
    match outcome {
        Ok(report) => {
            (row.country_macro_gain, row.country_macro_std) =
                summary_pair(&report.macro_gain["country"]);
            (row.country_micro_gain, row.country_micro_std) =
                summary_pair(&report.micro_gain["country"]);
            (row.race_macro_gain, row.race_macro_std) = summary_pair(&report.macro_gain["race"]);
            (row.race_micro_gain, row.race_micro_std) = summary_pair(&report.micro_gain["race"]);
            row.utility_gain = Some(report.utility_gain.mean);
            row.utility_std = Some(report.utility_gain.std);
            (row.diversity_gain, row.diversity_std) = summary_pair(&report.diversity_gain);
            // The row's F is derived from its own D_G and UG columns so the
            // table stays internally consistent; the spread column still
            // reflects the per-run F values.
            row.f_measure = match (row.diversity_gain, row.utility_gain) {
                (Some(d), Some(u)) if d + (100.0 - u) != 0.0 => {
                    Some(2.0 * d * (100.0 - u) / (d + (100.0 - u)))
                }
                _ => None,
            };
            row.f_std = report.f_measure.as_ref().map(|s| s.std);
        }
        Err(message) => row.error = Some(message.clone()),
    }
    row
}

/// Grid of a sweep: each single-attribute mode crossed with the lambda grid.
pub fn sweep_cells(config: &ExperimentConfig) -> Vec<Cell> {
    let mut cells = Vec::new();
    for mode in [FairnessMode::RaceOnly, FairnessMode::CountryOnly] {
        for &lambda in &config.lambda_grid {
            cells.push(Cell {
                mode,
                lambda,
                w_race: config.w_race,
                w_country: config.w_country,
            });
        }
    }
    cells
}

/// Grid of an ablation: combined mode over lambda x weight pairs.
pub fn ablate_cells(config: &ExperimentConfig) -> Vec<Cell> {
    let mut cells = Vec::new();
    for &lambda in &config.lambda_grid {
        for &(w_race, w_country) in &config.weight_grid {
            cells.push(Cell {
                mode: FairnessMode::Combined,
                lambda,
                w_race,
                w_country,
            });
        }
    }
    cells
}

/// Per-conference share of a selection, for reporting.
pub fn selection_conference_shares(
    data: &PreparedData,
    selection: &SelectionResult,
) -> Result<BTreeMap<String, f64>> {
    let papers = selected_papers(data, selection)?;
    Ok(fairsel_core::metrics::conference_distribution(&papers)?
        .into_iter()
        .map(|(c, v)| (c.code().to_string(), v))
        .collect())
}
