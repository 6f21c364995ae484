//! Loss functions and their gradients with respect to the predictions.
//!
//! Every function returns a [`LossValue`] carrying the scalar and the exact
//! analytic gradient, so the trainer can combine terms linearly and feed the
//! result straight into backpropagation.
//!
//! Two parity penalties are provided for single attributes: the pairwise
//! form (squared difference of protected vs. non-protected mean predictions)
//! and the global form (squared difference of group mean vs. overall mean).
//! The combined penalty weights two global terms, one per attribute.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FairnessMode {
    RaceOnly,
    CountryOnly,
    Combined,
}

impl std::fmt::Display for FairnessMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FairnessMode::RaceOnly => write!(f, "race_only"),
            FairnessMode::CountryOnly => write!(f, "country_only"),
            FairnessMode::Combined => write!(f, "combined"),
        }
    }
}

/// Fairness term configuration: the trade-off weight and, in combined mode,
/// the per-attribute weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FairnessConfig {
    pub lambda: f64,
    pub w_race: f64,
    pub w_country: f64,
    pub mode: FairnessMode,
}

impl FairnessConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lambda < 0.0 {
            return Err(Error::Invalid(format!(
                "lambda must be >= 0, got {}",
                self.lambda
            )));
        }
        if self.w_race < 0.0 || self.w_country < 0.0 {
            return Err(Error::Invalid(format!(
                "fairness weights must be >= 0, got w_race={}, w_country={}",
                self.w_race, self.w_country
            )));
        }
        if self.mode == FairnessMode::Combined && self.w_race == 0.0 && self.w_country == 0.0 {
            return Err(Error::Invalid(
                "combined mode requires at least one positive weight".into(),
            ));
        }
        Ok(())
    }
}

/// A scalar loss together with its gradient w.r.t. each prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossValue {
    pub scalar: f64,
    pub grad: Vec<f64>,
}

impl LossValue {
    pub fn zero(n: usize) -> Self {
        LossValue {
            scalar: 0.0,
            grad: vec![0.0; n],
        }
    }
}

/// Mean binary cross-entropy. Predictions must lie strictly inside (0, 1).
pub fn bce_loss(probs: &[f64], labels: &[f64]) -> Result<LossValue> {
    if probs.len() != labels.len() {
        return Err(Error::LengthMismatch(format!(
            "{} predictions vs {} labels",
            probs.len(),
            labels.len()
        )));
    }
    if probs.is_empty() {
        return Err(Error::Invalid("empty prediction batch".into()));
    }
    let n = probs.len() as f64;
    let mut sum = 0.0;
    let mut grad = Vec::with_capacity(probs.len());
    for (&p, &y) in probs.iter().zip(labels) {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::NonFinite(format!(
                "prediction {p} outside (0, 1) in cross-entropy"
            )));
        }
        sum += -(y * p.ln() + (1.0 - y) * (1.0 - p).ln());
        grad.push((p - y) / (p * (1.0 - p) * n));
    }
    Ok(LossValue {
        scalar: sum / n,
        grad,
    })
}

fn group_mean(probs: &[f64], mask: &[bool], member: bool) -> Option<(f64, usize)> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for (&p, &m) in probs.iter().zip(mask) {
        if m == member {
            sum += p;
            count += 1;
        }
    }
    (count > 0).then(|| (sum / count as f64, count))
}

fn check_mask(probs: &[f64], mask: &[bool], name: &str) -> Result<()> {
    if probs.len() != mask.len() {
        return Err(Error::LengthMismatch(format!(
            "{} predictions vs {} {name} mask entries",
            probs.len(),
            mask.len()
        )));
    }
    Ok(())
}

/// Squared difference of mean predictions between the protected group and
/// its complement. Errors with a degenerate-batch condition when either
/// side is empty; callers choose the fallback policy.
pub fn parity_loss_pairwise(probs: &[f64], protected_mask: &[bool]) -> Result<LossValue> {
    check_mask(probs, protected_mask, "protected")?;
    let (mean_p, n_p) = group_mean(probs, protected_mask, true)
        .ok_or_else(|| Error::DegenerateBatch("protected group is empty".into()))?;
    let (mean_np, n_np) = group_mean(probs, protected_mask, false)
        .ok_or_else(|| Error::DegenerateBatch("non-protected group is empty".into()))?;
    let gap = mean_p - mean_np;
    let grad = probs
        .iter()
        .zip(protected_mask)
        .map(|(_, &m)| {
            if m {
                2.0 * gap / n_p as f64
            } else {
                -2.0 * gap / n_np as f64
            }
        })
        .collect();
    Ok(LossValue {
        scalar: gap * gap,
        grad,
    })
}

/// Squared difference between a group's mean prediction and the global mean.
pub fn parity_loss_global(probs: &[f64], group_mask: &[bool]) -> Result<LossValue> {
    parity_loss_combined(probs, group_mask, group_mask, 1.0, 0.0)
}

/// Weighted sum of per-attribute squared gaps between the group mean and the
/// global mean. A zero-weight term is skipped entirely, so its mask may be
/// degenerate; a positive-weight term with an empty group is an error.
pub fn parity_loss_combined(
    probs: &[f64],
    race_mask: &[bool],
    country_mask: &[bool],
    w_race: f64,
    w_country: f64,
) -> Result<LossValue> {
    check_mask(probs, race_mask, "race")?;
    check_mask(probs, country_mask, "country")?;
    if probs.is_empty() {
        return Err(Error::Invalid("empty prediction batch".into()));
    }
    let n = probs.len() as f64;
    let global_mean = probs.iter().sum::<f64>() / n;

    let mut scalar = 0.0;
    let mut grad = vec![0.0; probs.len()];
    for (mask, weight, name) in [
        (race_mask, w_race, "race"),
        (country_mask, w_country, "country"),
    ] {
        if weight == 0.0 {
            continue;
        }
        let (mean_g, n_g) = group_mean(probs, mask, true)
            .ok_or_else(|| Error::DegenerateBatch(format!("{name} group is empty")))?;
        let gap = mean_g - global_mean;
        scalar += weight * gap * gap;
        // Each prediction enters the global mean; group members also enter
        // the group mean.
        for (g, &m) in grad.iter_mut().zip(mask) {
            let membership = if m { 1.0 / n_g as f64 } else { 0.0 };
            *g += 2.0 * weight * gap * (membership - 1.0 / n);
        }
    }
    Ok(LossValue { scalar, grad })
}

/// Total objective: prediction loss plus `lambda` times the fairness loss.
pub fn total_loss(pred: &LossValue, fair: &LossValue, lambda: f64) -> Result<LossValue> {
    if lambda < 0.0 {
        return Err(Error::Invalid(format!("lambda must be >= 0, got {lambda}")));
    }
    if pred.grad.len() != fair.grad.len() {
        return Err(Error::LengthMismatch(format!(
            "{} prediction-gradient entries vs {} fairness-gradient entries",
            pred.grad.len(),
            fair.grad.len()
        )));
    }
    let grad = pred
        .grad
        .iter()
        .zip(&fair.grad)
        .map(|(p, f)| p + lambda * f)
        .collect();
    Ok(LossValue {
        scalar: pred.scalar + lambda * fair.scalar,
        grad,
    })
}
