//! Feature encoding and normalization.
//!
//! Protected attributes (race, country) never appear as feature columns;
//! they are carried only as boolean group masks so the losses and metrics
//! can see them while the scorer cannot. The engineered columns are the
//! female-author share, the five career-stage shares, the conference
//! one-hot, and the min-max-normalized paper h-index.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{CareerStage, Conference, Dataset, Gender, PaperId, ProtectedAttr};

pub const COLUMN_NAMES: [&str; 10] = [
    "gender_female_share",
    "stage_professor_share",
    "stage_associate_professor_share",
    "stage_lecturer_share",
    "stage_postdoc_share",
    "stage_grad_student_share",
    "conf_iui",
    "conf_dis",
    "conf_sigchi",
    "paper_h_index_norm",
];

/// Per-column min/max recorded when the feature matrix was fitted.
/// `scaled` marks columns that min-max scaling actually transforms; the
/// remaining columns are in [0, 1] by construction and pass through.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnRange {
    pub min: f64,
    pub max: f64,
    pub scaled: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams {
    pub columns: BTreeMap<String, ColumnRange>,
}

impl NormalizationParams {
    fn apply(&self, name: &str, raw: f64) -> f64 {
        match self.columns.get(name) {
            Some(range) if range.scaled => {
                if range.max > range.min {
                    ((raw - range.min) / (range.max - range.min)).clamp(0.0, 1.0)
                } else {
                    // Constant column: mapped to 0.0 (documented degenerate case).
                    0.0
                }
            }
            _ => raw,
        }
    }
}

/// Encoded, normalized design matrix with group masks. Immutable after
/// construction; rows are in dataset order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub paper_ids: Vec<PaperId>,
    pub column_names: Vec<String>,
    /// Row-major, `paper_ids.len() x column_names.len()`.
    pub rows: Vec<f64>,
    /// Acceptance labels as 0.0 / 1.0.
    pub labels: Vec<f64>,
    pub race_mask: Vec<bool>,
    pub country_mask: Vec<bool>,
    pub normalization: NormalizationParams,
    pub protected_attrs: BTreeSet<ProtectedAttr>,
    /// Warnings raised at fit time (e.g. constant h-index column).
    pub warnings: Vec<String>,
}

impl FeatureMatrix {
    pub fn n_rows(&self) -> usize {
        self.paper_ids.len()
    }

    pub fn n_cols(&self) -> usize {
        self.column_names.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.n_cols();
        &self.rows[i * d..(i + 1) * d]
    }

    /// True when two matrices share the same column schema.
    pub fn schema_matches(&self, other: &FeatureMatrix) -> bool {
        self.column_names == other.column_names
    }

    /// Extract the sub-matrix at `indices` (metadata and params shared).
    pub fn subset(&self, indices: &[usize]) -> FeatureMatrix {
        let d = self.n_cols();
        let mut rows = Vec::with_capacity(indices.len() * d);
        let mut paper_ids = Vec::with_capacity(indices.len());
        let mut labels = Vec::with_capacity(indices.len());
        let mut race_mask = Vec::with_capacity(indices.len());
        let mut country_mask = Vec::with_capacity(indices.len());
        for &i in indices {
            rows.extend_from_slice(self.row(i));
            paper_ids.push(self.paper_ids[i].clone());
            labels.push(self.labels[i]);
            race_mask.push(self.race_mask[i]);
            country_mask.push(self.country_mask[i]);
        }
        FeatureMatrix {
            paper_ids,
            column_names: self.column_names.clone(),
            rows,
            labels,
            race_mask,
            country_mask,
            normalization: self.normalization.clone(),
            protected_attrs: self.protected_attrs.clone(),
            warnings: Vec::new(),
        }
    }
}

fn raw_row(paper: &super::PaperRecord) -> [f64; 10] {
    let n = paper.authors.len() as f64;
    let female = paper
        .authors
        .iter()
        .filter(|a| a.gender == Gender::Female)
        .count() as f64
        / n;
    let mut stage_share = [0.0f64; 5];
    for author in &paper.authors {
        let idx = CareerStage::ALL
            .iter()
            .position(|&s| s == author.career_stage)
            .expect("stage listed");
        stage_share[idx] += 1.0 / n;
    }
    let conf = |c: Conference| if paper.conference == c { 1.0 } else { 0.0 };
    [
        female,
        stage_share[0],
        stage_share[1],
        stage_share[2],
        stage_share[3],
        stage_share[4],
        conf(Conference::Iui),
        conf(Conference::Dis),
        conf(Conference::Sigchi),
        paper.paper_h_index,
    ]
}

fn build(
    dataset: &Dataset,
    raw: &[[f64; 10]],
    protected_attrs: &BTreeSet<ProtectedAttr>,
    params: NormalizationParams,
    warnings: Vec<String>,
) -> FeatureMatrix {
    let d = COLUMN_NAMES.len();
    let mut rows = Vec::with_capacity(dataset.len() * d);
    for raw_values in raw {
        for (j, name) in COLUMN_NAMES.iter().enumerate() {
            rows.push(params.apply(name, raw_values[j]));
        }
    }
    FeatureMatrix {
        paper_ids: dataset.papers.iter().map(|p| p.paper_id.clone()).collect(),
        column_names: COLUMN_NAMES.iter().map(|s| s.to_string()).collect(),
        rows,
        labels: dataset
            .papers
            .iter()
            .map(|p| if p.label { 1.0 } else { 0.0 })
            .collect(),
        race_mask: dataset
            .papers
            .iter()
            .map(|p| p.in_protected_group(ProtectedAttr::Race))
            .collect(),
        country_mask: dataset
            .papers
            .iter()
            .map(|p| p.in_protected_group(ProtectedAttr::Country))
            .collect(),
        normalization: params,
        protected_attrs: protected_attrs.clone(),
        warnings,
    }
}

/// Encode a dataset, fitting min-max normalization on its own values.
///
/// `protected_attrs` records the attributes under fairness protection; race
/// and country are never emitted as feature columns either way. A constant
/// h-index column is normalized to 0.0 and reported as a warning.
pub fn preprocess(
    dataset: &Dataset,
    protected_attrs: &BTreeSet<ProtectedAttr>,
) -> Result<FeatureMatrix> {
    if dataset.is_empty() {
        return Err(Error::Invalid("cannot preprocess an empty dataset".into()));
    }
    let raw: Vec<[f64; 10]> = dataset.papers.iter().map(raw_row).collect();
    let mut warnings = Vec::new();
    let mut columns = BTreeMap::new();
    for (j, name) in COLUMN_NAMES.iter().enumerate() {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for raw_values in &raw {
            min = min.min(raw_values[j]);
            max = max.max(raw_values[j]);
        }
        let scaled = *name == "paper_h_index_norm";
        if scaled && min == max {
            warnings.push(format!(
                "constant column {name} (all values {min}); normalized to 0.0"
            ));
        }
        columns.insert(name.to_string(), ColumnRange { min, max, scaled });
    }
    let params = NormalizationParams { columns };
    Ok(build(dataset, &raw, protected_attrs, params, warnings))
}

/// Encode a dataset applying previously fitted normalization parameters.
/// Values outside the fitted range clamp to [0, 1].
pub fn preprocess_with(
    dataset: &Dataset,
    protected_attrs: &BTreeSet<ProtectedAttr>,
    params: &NormalizationParams,
) -> Result<FeatureMatrix> {
    if dataset.is_empty() {
        return Err(Error::Invalid("cannot preprocess an empty dataset".into()));
    }
    let raw: Vec<[f64; 10]> = dataset.papers.iter().map(raw_row).collect();
    Ok(build(
        dataset,
        &raw,
        protected_attrs,
        params.clone(),
        Vec::new(),
    ))
}
