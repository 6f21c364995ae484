//! Scoring and fixed-size slate selection.
//!
//! Every candidate is scored with the trained model in eval mode, ranked by
//! descending acceptance probability, and the top `n_select` papers form the
//! slate. Score ties are broken by ascending paper id, which keeps the slate
//! size exact and runs reproducible; groups whose membership was decided by
//! the tie rule are recorded in the audit trail.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataset::{FeatureMatrix, PaperId};
use crate::error::{Error, Result};
use crate::nn::{Mat, ModelParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub scores: BTreeMap<PaperId, f64>,
    /// All paper ids in descending score order (ties by ascending id).
    pub ranking: Vec<PaperId>,
    /// Exactly `n_select` ids, in ranking order.
    pub selected: Vec<PaperId>,
    /// Score of the last selected paper.
    pub threshold_score: f64,
    /// Equal-score groups that straddled the selection boundary.
    pub tie_breaks: Vec<Vec<PaperId>>,
}

impl SelectionResult {
    pub fn is_selected(&self, id: &PaperId) -> bool {
        self.selected.iter().any(|s| s == id)
    }
}

/// Score every row of `fm` with the model in eval mode.
pub fn score_all(model: &ModelParams, fm: &FeatureMatrix) -> Result<BTreeMap<PaperId, f64>> {
    if fm.n_cols() != model.d_in() {
        return Err(Error::SchemaMismatch(format!(
            "model expects {} features, matrix has {}",
            model.d_in(),
            fm.n_cols()
        )));
    }
    let x = Mat::from_rows(fm.n_rows(), fm.n_cols(), fm.rows.clone());
    let probs = model.forward_eval(&x)?;
    Ok(fm.paper_ids.iter().cloned().zip(probs).collect())
}

/// Select the `n_select` highest-scoring papers.
pub fn select_top(scores: &BTreeMap<PaperId, f64>, n_select: usize) -> Result<SelectionResult> {
    if n_select == 0 {
        return Err(Error::Invalid("selection size must be positive".into()));
    }
    if n_select > scores.len() {
        return Err(Error::Invalid(format!(
            "selection size {n_select} exceeds candidate count {}",
            scores.len()
        )));
    }
    for (id, score) in scores {
        if !score.is_finite() {
            return Err(Error::NonFinite(format!("score for {id} is not finite")));
        }
    }

    let mut ranking: Vec<PaperId> = scores.keys().cloned().collect();
    ranking.sort_by(|a, b| {
        scores[b]
            .partial_cmp(&scores[a])
            .expect("scores are finite")
            .then_with(|| a.cmp(b))
    });

    let selected: Vec<PaperId> = ranking[..n_select].to_vec();
    let threshold_score = scores[&ranking[n_select - 1]];

    // The tie rule fires when the threshold score extends past the boundary.
    let tie_group: Vec<PaperId> = ranking
        .iter()
        .filter(|id| scores[*id] == threshold_score)
        .cloned()
        .collect();
    let crosses_boundary = ranking[n_select..]
        .iter()
        .any(|id| scores[id] == threshold_score);
    let tie_breaks = if crosses_boundary {
        vec![tie_group]
    } else {
        Vec::new()
    };

    Ok(SelectionResult {
        scores: scores.clone(),
        ranking,
        selected,
        threshold_score,
        tie_breaks,
    })
}
