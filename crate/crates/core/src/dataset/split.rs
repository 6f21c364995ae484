//! Stratified train/validation splitting.
//!
//! Strata are the joint cells of (label, race mask, country mask); cells
//! with fewer than two members fall back to label-only strata. The train
//! half receives `round(ratio * n)` rows exactly, apportioned to strata by
//! floor counts plus largest remainders, so the global split size is within
//! one row of the requested ratio.

use std::collections::BTreeMap;

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::SeedableRng;

use crate::error::{Error, Result};

use super::FeatureMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct StratumKey {
    label: bool,
    race: Option<bool>,
    country: Option<bool>,
}

/// Split a feature matrix into disjoint train/validation halves.
/// Deterministic for a given seed; every row lands in exactly one half.
pub fn stratified_split(
    fm: &FeatureMatrix,
    ratio: f64,
    seed: u64,
) -> Result<(FeatureMatrix, FeatureMatrix)> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Invalid(format!(
            "split ratio must be in (0, 1), got {ratio}"
        )));
    }
    let n = fm.n_rows();
    if n < 5 {
        return Err(Error::Invalid(format!(
            "need at least 5 rows to split, got {n}"
        )));
    }

    // Joint cells first.
    let mut joint: BTreeMap<StratumKey, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let key = StratumKey {
            label: fm.labels[i] == 1.0,
            race: Some(fm.race_mask[i]),
            country: Some(fm.country_mask[i]),
        };
        joint.entry(key).or_default().push(i);
    }

    // Cells with fewer than two members fall back to label-only strata.
    let mut strata: BTreeMap<StratumKey, Vec<usize>> = BTreeMap::new();
    for (key, rows) in joint {
        let target = if rows.len() < 2 {
            StratumKey {
                label: key.label,
                race: None,
                country: None,
            }
        } else {
            key
        };
        strata.entry(target).or_default().extend(rows);
    }

    let target_train = (ratio * n as f64).round() as usize;
    let mut rng = StdRng::seed_from_u64(seed);

    // Floor counts per stratum, then distribute the shortfall to the
    // largest fractional remainders (ties by stratum order).
    let mut plans: Vec<(StratumKey, Vec<usize>, usize, f64)> = Vec::new();
    let mut floor_total = 0usize;
    for (key, mut rows) in strata {
        rows.sort_unstable();
        rows.shuffle(&mut rng);
        let exact = ratio * rows.len() as f64;
        let floor = exact.floor() as usize;
        floor_total += floor;
        plans.push((key, rows, floor, exact - exact.floor()));
    }
    let mut leftover = target_train.saturating_sub(floor_total);
    let mut order: Vec<usize> = (0..plans.len()).collect();
    order.sort_by(|&a, &b| {
        plans[b]
            .3
            .partial_cmp(&plans[a].3)
            .expect("remainders are finite")
            .then(plans[a].0.cmp(&plans[b].0))
    });
    for idx in order {
        if leftover == 0 {
            break;
        }
        if plans[idx].2 < plans[idx].1.len() {
            plans[idx].2 += 1;
            leftover -= 1;
        }
    }

    let mut train_idx = Vec::new();
    let mut val_idx = Vec::new();
    for (_, rows, take, _) in &plans {
        train_idx.extend_from_slice(&rows[..*take]);
        val_idx.extend_from_slice(&rows[*take..]);
    }
    train_idx.sort_unstable();
    val_idx.sort_unstable();

    Ok((fm.subset(&train_idx), fm.subset(&val_idx)))
}
