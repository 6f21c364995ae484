//! Evaluation metrics for a selection against a baseline selection.
//!
//! Macro gain is the relative change in the protected share of selected
//! papers; micro gain applies the same formula to authors of the selected
//! papers (counted with multiplicity). Diversity gain averages per-attribute
//! macro gains after capping each at 100. Utility is the mean over selected
//! papers of the career-stage-weighted author h-index; the F measure is the
//! harmonic mean of the diversity gain and `100 - utility gain`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::dataset::{CareerStage, Conference, PaperId, PaperRecord, ProtectedAttr};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightSource {
    DatasetDistribution,
    Explicit,
}

/// Career-stage weights used by the utility metric. All five stages must be
/// present with positive weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CareerWeights {
    pub weights: BTreeMap<CareerStage, f64>,
    pub source: WeightSource,
}

impl CareerWeights {
    pub fn explicit(weights: BTreeMap<CareerStage, f64>) -> Result<Self> {
        let cw = CareerWeights {
            weights,
            source: WeightSource::Explicit,
        };
        cw.validate()?;
        Ok(cw)
    }

    /// Weight each stage by its share of authors in the full dataset.
    pub fn from_dataset(papers: &[PaperRecord]) -> Result<Self> {
        let shares = crate::dataset::career_stage_shares(papers);
        let cw = CareerWeights {
            weights: shares,
            source: WeightSource::DatasetDistribution,
        };
        cw.validate()?;
        Ok(cw)
    }

    fn validate(&self) -> Result<()> {
        for stage in CareerStage::ALL {
            match self.weights.get(&stage) {
                Some(&w) if w > 0.0 && w <= 1.0 => {}
                Some(&w) => {
                    return Err(Error::Invalid(format!(
                        "career weight for {stage} must be in (0, 1], got {w}"
                    )))
                }
                None => {
                    return Err(Error::Invalid(format!(
                        "career stage absent from weights: {stage}"
                    )))
                }
            }
        }
        Ok(())
    }

    pub fn weight(&self, stage: CareerStage) -> f64 {
        self.weights[&stage]
    }
}

fn protected_paper_share(papers: &[&PaperRecord], attr: ProtectedAttr) -> f64 {
    let hits = papers.iter().filter(|p| p.in_protected_group(attr)).count();
    hits as f64 / papers.len() as f64
}

fn protected_author_share(papers: &[&PaperRecord], attr: ProtectedAttr) -> f64 {
    let mut hits = 0usize;
    let mut total = 0usize;
    for paper in papers {
        for author in &paper.authors {
            total += 1;
            let protected = match attr {
                ProtectedAttr::Race => author.race.is_protected(),
                ProtectedAttr::Country => author.country_class.is_protected(),
            };
            if protected {
                hits += 1;
            }
        }
    }
    hits as f64 / total as f64
}

fn relative_gain(selected: f64, baseline: f64, what: &str) -> Result<f64> {
    if baseline == 0.0 {
        return Err(Error::UndefinedGain(format!(
            "baseline {what} share is zero"
        )));
    }
    Ok(100.0 * (selected - baseline) / baseline)
}

/// Percent change in the protected-paper share of the selection vs. the
/// baseline selection.
pub fn macro_gain(
    selected: &[&PaperRecord],
    baseline: &[&PaperRecord],
    attr: ProtectedAttr,
) -> Result<f64> {
    if selected.is_empty() || baseline.is_empty() {
        return Err(Error::Invalid("selections must be non-empty".into()));
    }
    relative_gain(
        protected_paper_share(selected, attr),
        protected_paper_share(baseline, attr),
        &format!("{attr} paper"),
    )
}

/// Percent change in the protected share among authors of selected papers,
/// counting authors with multiplicity.
pub fn micro_gain(
    selected: &[&PaperRecord],
    baseline: &[&PaperRecord],
    attr: ProtectedAttr,
) -> Result<f64> {
    if selected.is_empty() || baseline.is_empty() {
        return Err(Error::Invalid("selections must be non-empty".into()));
    }
    relative_gain(
        protected_author_share(selected, attr),
        protected_author_share(baseline, attr),
        &format!("{attr} author"),
    )
}

/// Mean of per-attribute macro gains, each capped at 100.
pub fn diversity_gain(macro_gains: &[f64]) -> Result<f64> {
    if macro_gains.is_empty() {
        return Err(Error::Invalid("diversity gain over no attributes".into()));
    }
    Ok(macro_gains.iter().map(|g| g.min(100.0)).sum::<f64>() / macro_gains.len() as f64)
}

/// Mean over papers of the mean over authors of `weight(stage) * h_index`.
pub fn utility(selection: &[&PaperRecord], weights: &CareerWeights) -> Result<f64> {
    if selection.is_empty() {
        return Err(Error::Invalid("utility of an empty selection".into()));
    }
    let sum: f64 = selection
        .iter()
        .map(|paper| {
            paper
                .authors
                .iter()
                .map(|a| weights.weight(a.career_stage) * f64::from(a.h_index))
                .sum::<f64>()
                / paper.authors.len() as f64
        })
        .sum();
    Ok(sum / selection.len() as f64)
}

/// Percent change in utility vs. the baseline selection.
pub fn utility_gain(
    selected: &[&PaperRecord],
    baseline: &[&PaperRecord],
    weights: &CareerWeights,
) -> Result<f64> {
    let base = utility(baseline, weights)?;
    if base == 0.0 {
        return Err(Error::UndefinedGain("baseline utility is zero".into()));
    }
    Ok(100.0 * (utility(selected, weights)? - base) / base)
}

fn harmonic_mean(a: f64, b: f64) -> Result<f64> {
    if a + b == 0.0 {
        return Err(Error::Invalid("harmonic mean with zero denominator".into()));
    }
    Ok(2.0 * a * b / (a + b))
}

/// Harmonic combination of the diversity gain and `100 - utility_gain`.
pub fn f_measure(diversity_gain_pct: f64, utility_gain_pct: f64) -> Result<f64> {
    harmonic_mean(diversity_gain_pct, 100.0 - utility_gain_pct)
}

/// Percent of selected papers per conference; sums to 100.
pub fn conference_distribution(selected: &[&PaperRecord]) -> Result<BTreeMap<Conference, f64>> {
    if selected.is_empty() {
        return Err(Error::Invalid("distribution of an empty selection".into()));
    }
    let mut counts: BTreeMap<Conference, usize> = Conference::ALL.iter().map(|&c| (c, 0)).collect();
    for paper in selected {
        *counts
            .get_mut(&paper.conference)
            .expect("all conferences present") += 1;
    }
    let n = selected.len() as f64;
    Ok(counts
        .into_iter()
        .map(|(c, count)| (c, 100.0 * count as f64 / n))
        .collect())
}

/// Difference in selection rates: protected minus non-protected, over the
/// candidate pool. The selector's post-hoc parity audit.
pub fn statistical_parity_difference(
    selected_ids: &BTreeSet<PaperId>,
    all_papers: &[PaperRecord],
    attr: ProtectedAttr,
) -> Result<f64> {
    let mut sel_p = 0usize;
    let mut n_p = 0usize;
    let mut sel_np = 0usize;
    let mut n_np = 0usize;
    for paper in all_papers {
        let selected = selected_ids.contains(&paper.paper_id) as usize;
        if paper.in_protected_group(attr) {
            n_p += 1;
            sel_p += selected;
        } else {
            n_np += 1;
            sel_np += selected;
        }
    }
    if n_p == 0 || n_np == 0 {
        return Err(Error::DegenerateBatch(format!(
            "{attr} group empty in the candidate pool"
        )));
    }
    Ok(sel_p as f64 / n_p as f64 - sel_np as f64 / n_np as f64)
}

/// Gains of one run's selection against its baseline selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunGains {
    /// Per evaluated attribute; `None` when the baseline share was zero.
    pub macro_gain: BTreeMap<String, Option<f64>>,
    pub micro_gain: BTreeMap<String, Option<f64>>,
    pub diversity_gain: Option<f64>,
    pub utility_gain: f64,
    pub f_measure: Option<f64>,
    pub parity_difference: BTreeMap<String, f64>,
    pub conference_distribution: BTreeMap<String, f64>,
    pub n_selected: usize,
}

/// Compute one run's gains for the attributes under evaluation.
pub fn compute_run_gains(
    selected: &[&PaperRecord],
    baseline: &[&PaperRecord],
    all_papers: &[PaperRecord],
    attrs: &[ProtectedAttr],
    weights: &CareerWeights,
) -> Result<RunGains> {
    if attrs.is_empty() {
        return Err(Error::Invalid("no protected attributes to evaluate".into()));
    }
    let mut macro_map = BTreeMap::new();
    let mut micro_map = BTreeMap::new();
    let mut parity_map = BTreeMap::new();
    let mut macro_values = Vec::new();
    let selected_ids: BTreeSet<PaperId> = selected.iter().map(|p| p.paper_id.clone()).collect();
    for &attr in attrs {
        let mg = match macro_gain(selected, baseline, attr) {
            Ok(v) => Some(v),
            Err(Error::UndefinedGain(_)) => None,
            Err(e) => return Err(e),
        };
        let ug = match micro_gain(selected, baseline, attr) {
            Ok(v) => Some(v),
            Err(Error::UndefinedGain(_)) => None,
            Err(e) => return Err(e),
        };
        if let Some(v) = mg {
            macro_values.push(v);
        }
        macro_map.insert(attr.to_string(), mg);
        micro_map.insert(attr.to_string(), ug);
        parity_map.insert(
            attr.to_string(),
            statistical_parity_difference(&selected_ids, all_papers, attr)?,
        );
    }
    let d_g = if macro_values.len() == attrs.len() {
        Some(diversity_gain(&macro_values)?)
    } else {
        None
    };
    let ug = utility_gain(selected, baseline, weights)?;
    let f = match d_g {
        Some(d) => Some(f_measure(d, ug)?),
        None => None,
    };
    Ok(RunGains {
        macro_gain: macro_map,
        micro_gain: micro_map,
        diversity_gain: d_g,
        utility_gain: ug,
        f_measure: f,
        parity_difference: parity_map,
        conference_distribution: conference_distribution(selected)?
            .into_iter()
            .map(|(c, v)| (c.code().to_string(), v))
            .collect(),
        n_selected: selected.len(),
    })
}

/// Mean and sample standard deviation (ddof = 1; 0 for a single run).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
}

fn summarize(values: &[f64]) -> Summary {
    let (mean, std) = mean_std(values);
    Summary { mean, std }
}

fn summarize_optional(values: Vec<Option<f64>>) -> Option<Summary> {
    let present: Vec<f64> = values.iter().copied().flatten().collect();
    (present.len() == values.len()).then(|| summarize(&present))
}

/// Gains aggregated over repeated runs, serialized with a stable field order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainReport {
    pub attributes: Vec<String>,
    /// What the gains are measured against.
    pub baseline: String,
    pub n_runs: usize,
    pub macro_gain: BTreeMap<String, Option<Summary>>,
    pub micro_gain: BTreeMap<String, Option<Summary>>,
    pub diversity_gain: Option<Summary>,
    pub utility_gain: Summary,
    pub f_measure: Option<Summary>,
    pub parity_difference: BTreeMap<String, Summary>,
    pub conference_distribution: BTreeMap<String, Summary>,
    pub runs: Vec<RunGains>,
}

impl GainReport {
    pub fn aggregate(
        attrs: &[ProtectedAttr],
        baseline: impl Into<String>,
        runs: Vec<RunGains>,
    ) -> Result<Self> {
        if runs.is_empty() {
            return Err(Error::Invalid("no runs to aggregate".into()));
        }
        let attr_names: Vec<String> = attrs.iter().map(|a| a.to_string()).collect();
        let mut macro_gain = BTreeMap::new();
        let mut micro_gain = BTreeMap::new();
        let mut parity_difference = BTreeMap::new();
        for name in &attr_names {
            macro_gain.insert(
                name.clone(),
                summarize_optional(runs.iter().map(|r| r.macro_gain[name]).collect()),
            );
            micro_gain.insert(
                name.clone(),
                summarize_optional(runs.iter().map(|r| r.micro_gain[name]).collect()),
            );
            let parity: Vec<f64> = runs.iter().map(|r| r.parity_difference[name]).collect();
            parity_difference.insert(name.clone(), summarize(&parity));
        }
        let mut conference_distribution = BTreeMap::new();
        for code in runs[0].conference_distribution.keys() {
            let values: Vec<f64> = runs
                .iter()
                .map(|r| r.conference_distribution[code])
                .collect();
            conference_distribution.insert(code.clone(), summarize(&values));
        }
        Ok(GainReport {
            attributes: attr_names,
            baseline: baseline.into(),
            n_runs: runs.len(),
            macro_gain,
            micro_gain,
            diversity_gain: summarize_optional(runs.iter().map(|r| r.diversity_gain).collect()),
            utility_gain: summarize(&runs.iter().map(|r| r.utility_gain).collect::<Vec<_>>()),
            f_measure: summarize_optional(runs.iter().map(|r| r.f_measure).collect()),
            parity_difference,
            conference_distribution,
            runs,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::testutil::{author, paper};
    use crate::dataset::{CountryClass, Gender, Race};

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} != {b} (tol {tol})");
    }

    fn protected_paper(id: &str, race_protected: bool, h: u32) -> PaperRecord {
        paper(
            id,
            Conference::Sigchi,
            true,
            vec![author(
                &format!("a_{id}"),
                Gender::Male,
                if race_protected {
                    Race::Black
                } else {
                    Race::White
                },
                CountryClass::Developed,
                CareerStage::Professor,
                h,
            )],
        )
    }

    fn refs(papers: &[PaperRecord]) -> Vec<&PaperRecord> {
        papers.iter().collect()
    }

    fn unit_weights() -> CareerWeights {
        CareerWeights::explicit(CareerStage::ALL.iter().map(|&s| (s, 1.0)).collect()).unwrap()
    }

    #[test]
    fn macro_gain_hand_values() {
        // Baseline share 20% (1/5), selected share 30% (3/10).
        let baseline: Vec<PaperRecord> = (0..5)
            .map(|i| protected_paper(&format!("B{i}"), i == 0, 10))
            .collect();
        let selected: Vec<PaperRecord> = (0..10)
            .map(|i| protected_paper(&format!("S{i}"), i < 3, 10))
            .collect();
        let gain = macro_gain(&refs(&selected), &refs(&baseline), ProtectedAttr::Race).unwrap();
        assert_close(gain, 50.0, 1e-12);

        let same = macro_gain(&refs(&baseline), &refs(&baseline), ProtectedAttr::Race).unwrap();
        assert_close(same, 0.0, 1e-12);
    }

    #[test]
    fn macro_gain_zero_baseline_share_is_undefined() {
        let baseline: Vec<PaperRecord> = (0..4)
            .map(|i| protected_paper(&format!("B{i}"), false, 5))
            .collect();
        let selected: Vec<PaperRecord> = (0..4)
            .map(|i| protected_paper(&format!("S{i}"), i == 0, 5))
            .collect();
        let err = macro_gain(&refs(&selected), &refs(&baseline), ProtectedAttr::Race).unwrap_err();
        assert!(matches!(err, Error::UndefinedGain(_)));
    }

    #[test]
    fn micro_equals_macro_for_single_author_papers() {
        let baseline: Vec<PaperRecord> = (0..5)
            .map(|i| protected_paper(&format!("B{i}"), i < 2, 5))
            .collect();
        let selected: Vec<PaperRecord> = (0..5)
            .map(|i| protected_paper(&format!("S{i}"), i < 3, 5))
            .collect();
        let mac = macro_gain(&refs(&selected), &refs(&baseline), ProtectedAttr::Race).unwrap();
        let mic = micro_gain(&refs(&selected), &refs(&baseline), ProtectedAttr::Race).unwrap();
        assert_close(mac, mic, 1e-12);
    }

    #[test]
    fn micro_gain_counts_authors_with_multiplicity() {
        let make = |id: &str, protected_authors: usize, total: usize| {
            let authors = (0..total)
                .map(|k| {
                    author(
                        &format!("{id}a{k}"),
                        Gender::Female,
                        if k < protected_authors {
                            Race::Hispanic
                        } else {
                            Race::Asian
                        },
                        CountryClass::Developed,
                        CareerStage::PostDoc,
                        7,
                    )
                })
                .collect();
            paper(id, Conference::Dis, true, authors)
        };
        // Baseline author share 1/10, selected 3/10 -> +200%.
        let baseline = vec![make("B0", 1, 5), make("B1", 0, 5)];
        let selected = vec![make("S0", 2, 5), make("S1", 1, 5)];
        let gain = micro_gain(&refs(&selected), &refs(&baseline), ProtectedAttr::Race).unwrap();
        assert_close(gain, 200.0, 1e-12);
    }

    #[test]
    fn diversity_gain_caps_each_term() {
        assert_close(diversity_gain(&[50.0, 120.0]).unwrap(), 75.0, 1e-12);
        assert_close(diversity_gain(&[0.0, 0.0]).unwrap(), 0.0, 1e-12);
        assert_close(diversity_gain(&[42.03]).unwrap(), 42.03, 1e-12);
        assert!(diversity_gain(&[]).is_err());
    }

    #[test]
    fn utility_hand_value() {
        let mut weights: BTreeMap<CareerStage, f64> =
            CareerStage::ALL.iter().map(|&s| (s, 0.3)).collect();
        weights.insert(CareerStage::Professor, 0.5);
        weights.insert(CareerStage::GradStudent, 0.1);
        let cw = CareerWeights::explicit(weights).unwrap();
        let p = paper(
            "P1",
            Conference::Iui,
            true,
            vec![
                author(
                    "a1",
                    Gender::Male,
                    Race::White,
                    CountryClass::Developed,
                    CareerStage::Professor,
                    20,
                ),
                author(
                    "a2",
                    Gender::Female,
                    Race::Asian,
                    CountryClass::Developed,
                    CareerStage::GradStudent,
                    2,
                ),
            ],
        );
        let selection = vec![p];
        assert_close(utility(&refs(&selection), &cw).unwrap(), 5.1, 1e-12);
    }

    #[test]
    fn utility_constant_weights_and_h() {
        let papers: Vec<PaperRecord> = (0..3)
            .map(|i| protected_paper(&format!("P{i}"), false, 10))
            .collect();
        assert_close(
            utility(&refs(&papers), &unit_weights()).unwrap(),
            10.0,
            1e-12,
        );
        // Doubling h doubles utility.
        let doubled: Vec<PaperRecord> = (0..3)
            .map(|i| protected_paper(&format!("P{i}"), false, 20))
            .collect();
        assert_close(
            utility(&refs(&doubled), &unit_weights()).unwrap(),
            20.0,
            1e-12,
        );
    }

    #[test]
    fn utility_gain_hand_values() {
        let baseline: Vec<PaperRecord> = (0..2)
            .map(|i| protected_paper(&format!("B{i}"), false, 10))
            .collect();
        let worse: Vec<PaperRecord> = (0..2)
            .map(|i| protected_paper(&format!("S{i}"), false, 9))
            .collect();
        let gain = utility_gain(&refs(&worse), &refs(&baseline), &unit_weights()).unwrap();
        assert_close(gain, -10.0, 1e-12);
        let same = utility_gain(&refs(&baseline), &refs(&baseline), &unit_weights()).unwrap();
        assert_close(same, 0.0, 1e-12);

        // Utilities 10000 vs 10316 give exactly +3.16%.
        let base: Vec<PaperRecord> = vec![protected_paper("B", false, 10000)];
        let better: Vec<PaperRecord> = vec![protected_paper("S", false, 10316)];
        let gain = utility_gain(&refs(&better), &refs(&base), &unit_weights()).unwrap();
        assert_close(gain, 3.16, 1e-12);
    }

    #[test]
    fn f_measure_hand_values() {
        assert_close(f_measure(100.0, 0.0).unwrap(), 100.0, 1e-12);
        assert_close(f_measure(0.0, 3.0).unwrap(), 0.0, 1e-12);
        let f = f_measure(44.66, 3.16).unwrap();
        assert_close(f, 2.0 * 44.66 * 96.84 / (44.66 + 96.84), 1e-12);
        assert_close(f, 61.13, 0.005);
    }

    #[test]
    fn harmonic_mean_is_symmetric() {
        for (a, b) in [(30.0, 70.0), (42.0, 96.84), (1.0, 99.0)] {
            assert_close(
                harmonic_mean(a, b).unwrap(),
                harmonic_mean(b, a).unwrap(),
                1e-12,
            );
        }
    }

    #[test]
    fn conference_distribution_hand_values() {
        let mut papers = Vec::new();
        for (count, conference) in [
            (2, Conference::Sigchi),
            (1, Conference::Dis),
            (1, Conference::Iui),
        ] {
            for i in 0..count {
                papers.push(paper(
                    &format!("{}{i}", conference.code()),
                    conference,
                    true,
                    vec![author(
                        "a",
                        Gender::Male,
                        Race::White,
                        CountryClass::Developed,
                        CareerStage::Lecturer,
                        1,
                    )],
                ));
            }
        }
        let dist = conference_distribution(&refs(&papers)).unwrap();
        assert_close(dist[&Conference::Sigchi], 50.0, 1e-12);
        assert_close(dist[&Conference::Dis], 25.0, 1e-12);
        assert_close(dist[&Conference::Iui], 25.0, 1e-12);
        assert_close(dist.values().sum::<f64>(), 100.0, 1e-9);

        // A single-conference slate concentrates to 100 percent.
        let only = vec![papers[0].clone()];
        let dist = conference_distribution(&refs(&only)).unwrap();
        assert_close(dist[&Conference::Sigchi], 100.0, 1e-12);
        assert_close(dist[&Conference::Dis], 0.0, 1e-12);
        assert_close(dist[&Conference::Iui], 0.0, 1e-12);
    }

    #[test]
    #[allow(clippy::approx_constant)] // 3.14 here is a percentage, not pi
    fn conference_distribution_351_slate() {
        let mut papers = Vec::new();
        for (count, conference) in [
            (323, Conference::Sigchi),
            (17, Conference::Dis),
            (11, Conference::Iui),
        ] {
            for i in 0..count {
                papers.push(paper(
                    &format!("{}{i:03}", conference.code()),
                    conference,
                    true,
                    vec![author(
                        "a",
                        Gender::Male,
                        Race::White,
                        CountryClass::Developed,
                        CareerStage::Lecturer,
                        1,
                    )],
                ));
            }
        }
        assert_eq!(papers.len(), 351);
        let dist = conference_distribution(&refs(&papers)).unwrap();
        assert_close(dist[&Conference::Sigchi], 92.02, 0.01);
        assert_close(dist[&Conference::Dis], 4.84, 0.01);
        assert_close(dist[&Conference::Iui], 3.14, 0.01);
    }

    #[test]
    fn parity_difference_hand_values() {
        let papers: Vec<PaperRecord> = (0..20)
            .map(|i| protected_paper(&format!("P{i:02}"), i < 10, 5))
            .collect();
        // Protected selected at 60% (6/10), non-protected at 70% (7/10).
        let mut ids = BTreeSet::new();
        for i in 0..6 {
            ids.insert(PaperId::new(format!("P{i:02}")));
        }
        for i in 10..17 {
            ids.insert(PaperId::new(format!("P{i:02}")));
        }
        let spd = statistical_parity_difference(&ids, &papers, ProtectedAttr::Race).unwrap();
        assert_close(spd, -0.10, 1e-12);

        // Selecting everything gives parity 0.
        let all: BTreeSet<PaperId> = papers.iter().map(|p| p.paper_id.clone()).collect();
        let spd = statistical_parity_difference(&all, &papers, ProtectedAttr::Race).unwrap();
        assert_close(spd, 0.0, 1e-12);
    }

    #[test]
    fn gains_zero_when_selected_equals_baseline() {
        let papers: Vec<PaperRecord> = (0..6)
            .map(|i| protected_paper(&format!("P{i}"), i % 2 == 0, 4 + i as u32))
            .collect();
        let gains = compute_run_gains(
            &refs(&papers),
            &refs(&papers),
            &papers,
            &[ProtectedAttr::Race],
            &unit_weights(),
        )
        .unwrap();
        assert_eq!(gains.macro_gain["race"], Some(0.0));
        assert_eq!(gains.micro_gain["race"], Some(0.0));
        assert_eq!(gains.diversity_gain, Some(0.0));
        assert_close(gains.utility_gain, 0.0, 1e-12);
    }

    #[test]
    fn gains_invariant_under_paper_id_relabeling() {
        let baseline: Vec<PaperRecord> = (0..6)
            .map(|i| protected_paper(&format!("B{i}"), i < 2, 3 + i as u32))
            .collect();
        let selected: Vec<PaperRecord> = (0..5)
            .map(|i| protected_paper(&format!("S{i}"), i < 3, 5 + i as u32))
            .collect();
        let relabel = |papers: &[PaperRecord], tag: &str| -> Vec<PaperRecord> {
            papers
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    let mut p = p.clone();
                    p.paper_id = PaperId::new(format!("{tag}{i:04}"));
                    p
                })
                .collect()
        };
        let baseline2 = relabel(&baseline, "x");
        let selected2 = relabel(&selected, "y");
        for attr in [ProtectedAttr::Race] {
            let a = macro_gain(&refs(&selected), &refs(&baseline), attr).unwrap();
            let b = macro_gain(&refs(&selected2), &refs(&baseline2), attr).unwrap();
            assert_eq!(a, b);
            let a = micro_gain(&refs(&selected), &refs(&baseline), attr).unwrap();
            let b = micro_gain(&refs(&selected2), &refs(&baseline2), attr).unwrap();
            assert_eq!(a, b);
        }
        let a = utility_gain(&refs(&selected), &refs(&baseline), &unit_weights()).unwrap();
        let b = utility_gain(&refs(&selected2), &refs(&baseline2), &unit_weights()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn aggregate_reports_mean_and_sample_std() {
        let papers: Vec<PaperRecord> = (0..6)
            .map(|i| protected_paper(&format!("P{i}"), i % 2 == 0, 4 + i as u32))
            .collect();
        let one = compute_run_gains(
            &refs(&papers),
            &refs(&papers),
            &papers,
            &[ProtectedAttr::Race],
            &unit_weights(),
        )
        .unwrap();
        let report =
            GainReport::aggregate(&[ProtectedAttr::Race], "self", vec![one.clone(), one]).unwrap();
        assert_eq!(report.n_runs, 2);
        assert_eq!(report.macro_gain["race"].as_ref().unwrap().std, 0.0);

        let (mean, std) = mean_std(&[1.0, 2.0, 3.0]);
        assert_close(mean, 2.0, 1e-12);
        assert_close(std, 1.0, 1e-12);
    }
}
